#include "scenemem/neuralnet/model.hpp"

#include <stdexcept>

#include "scenemem/common/container.hpp"

namespace scenemem::neuralnet {

void NetworkSpec::validate() const {
  auto check_branch = [this](const BranchSpec& b, const char* which) {
    if (b.channels.empty()) throw std::invalid_argument(std::string(which) + " branch has no conv blocks");
    if (b.kernel == 0 || b.kernel % 2 == 0) {
      throw std::invalid_argument(std::string(which) + " branch kernel must be odd");
    }
    if ((input_size >> b.channels.size()) == 0) {
      throw std::invalid_argument(std::string(which) + " branch pools the input below 1x1");
    }
  };
  check_branch(baseline, "baseline");
  check_branch(category, "category");
  if (input_channels == 0 || deep_dim == 0 || cat_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
}

namespace {

nlohmann::json branch_json(const BranchSpec& b) { return {{"channels", b.channels}, {"kernel", b.kernel}}; }

BranchSpec branch_from_json(const nlohmann::json& j) {
  BranchSpec b;
  b.channels = j.at("channels").get<std::vector<std::size_t>>();
  b.kernel = j.value("kernel", std::size_t{3});
  return b;
}

}  // namespace

nlohmann::json to_json(const NetworkSpec& spec) {
  return {{"input_size", spec.input_size},   {"input_channels", spec.input_channels},
          {"baseline", branch_json(spec.baseline)}, {"category", branch_json(spec.category)},
          {"deep_dim", spec.deep_dim},       {"cat_dim", spec.cat_dim},
          {"hidden_dim", spec.hidden_dim},   {"num_categories", spec.num_categories}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_size = j.value("input_size", spec.input_size);
  spec.input_channels = j.value("input_channels", spec.input_channels);
  if (j.contains("baseline")) spec.baseline = branch_from_json(j.at("baseline"));
  if (j.contains("category")) spec.category = branch_from_json(j.at("category"));
  spec.deep_dim = j.value("deep_dim", spec.deep_dim);
  spec.cat_dim = j.value("cat_dim", spec.cat_dim);
  spec.hidden_dim = j.value("hidden_dim", spec.hidden_dim);
  spec.num_categories = j.value("num_categories", spec.num_categories);
  spec.validate();
  return spec;
}

// ---- Branch ------------------------------------------------------------------

Branch::Branch(const BranchSpec& spec, std::size_t input_channels, std::size_t feature_dim,
               std::size_t head_outputs)
    : feature_dim_(feature_dim), head_outputs_(head_outputs) {
  std::size_t prev = input_channels;
  for (std::size_t c : spec.channels) {
    trunk_.emplace<Conv2d>(prev, c, spec.kernel);
    trunk_.emplace<Relu>();
    trunk_.emplace<MaxPool2>();
    prev = c;
  }
  trunk_.emplace<GlobalAvgPool>();
  trunk_.emplace<Dense>(prev, feature_dim);
  trunk_.emplace<Relu>();
  head_.emplace<Dense>(feature_dim, head_outputs);
}

void Branch::init(Rng& rng) {
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    if (auto* conv = dynamic_cast<Conv2d*>(&trunk_.layer(i))) conv->init(rng, InitScheme::he_uniform);
    if (auto* dense = dynamic_cast<Dense*>(&trunk_.layer(i))) dense->init(rng, InitScheme::he_uniform);
  }
  dynamic_cast<Dense&>(head_.layer(0)).init(rng, InitScheme::fan_in_uniform);
}

namespace {

NamedParams name_params(Sequential& seq, const std::string& prefix) {
  NamedParams out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (auto* p : seq.layer(i).params()) {
      out.emplace_back(prefix + std::to_string(i) + "." + p->name, p);
    }
  }
  return out;
}

std::vector<Param*> strip(const NamedParams& named) {
  std::vector<Param*> out;
  for (const auto& [name, p] : named) out.push_back(p);
  return out;
}

}  // namespace

NamedParams Branch::trunk_params(const std::string& prefix) { return name_params(trunk_, prefix + "trunk."); }

NamedParams Branch::named_params(const std::string& prefix) {
  auto out = trunk_params(prefix);
  for (auto& entry : name_params(head_, prefix + "head.")) out.push_back(entry);
  return out;
}

Branch make_baseline_branch(const NetworkSpec& spec) {
  spec.validate();
  return Branch(spec.baseline, spec.input_channels, spec.deep_dim, 1);
}

Branch make_category_branch(const NetworkSpec& spec) {
  spec.validate();
  if (spec.num_categories == 0) throw std::invalid_argument("category branch needs num_categories > 0");
  return Branch(spec.category, spec.input_channels, spec.cat_dim, spec.num_categories);
}

// ---- DeepNsm -----------------------------------------------------------------

DeepNsm::DeepNsm(const NetworkSpec& spec)
    : spec_(spec), baseline_(make_baseline_branch(spec)), category_(make_category_branch(spec)) {
  fusion_.emplace<Dense>(spec.deep_dim + spec.cat_dim, spec.hidden_dim);
  fusion_.emplace<Relu>();
  fusion_.emplace<Dense>(spec.hidden_dim, 1);
}

void DeepNsm::init(std::uint64_t seed) {
  Rng rng(seed);
  baseline_.init(rng);
  category_.init(rng);
  init_head(rng.fork_seed());
}

void DeepNsm::init_head(std::uint64_t seed) {
  Rng rng(seed);
  dynamic_cast<Dense&>(fusion_.layer(0)).init(rng, InitScheme::he_uniform);
  dynamic_cast<Dense&>(fusion_.layer(2)).init(rng, InitScheme::fan_in_uniform);
}

void copy_param_values(const NamedParams& from, const NamedParams& to) {
  if (from.size() != to.size()) throw ShapeError("parameter lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].second->value.shape() != to[i].second->value.shape()) {
      throw ShapeError("parameter " + to[i].first + " shape " + to[i].second->value.shape_string() +
                       " does not match " + from[i].second->value.shape_string());
    }
    to[i].second->value = from[i].second->value;
  }
}

void DeepNsm::load_branches(Branch& baseline, Branch& category) {
  copy_param_values(baseline.trunk_params(""), baseline_.trunk_params(""));
  copy_param_values(category.trunk_params(""), category_.trunk_params(""));
}

Tensor DeepNsm::forward(const Tensor& images) {
  const Tensor a = baseline_.features(images);
  const Tensor b = category_.features(images);
  const std::size_t n = a.dim(0), da = a.dim(1), db = b.dim(1);
  concat_ = Tensor({n, da + db});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < da; ++d) concat_.at(i, d) = a.at(i, d);
    for (std::size_t d = 0; d < db; ++d) concat_.at(i, da + d) = b.at(i, d);
  }
  try {
    return fusion_.forward(concat_);
  } catch (const NonFiniteError& e) {
    // index past both trunks so the report names a unique layer
    throw NonFiniteError(std::string("fusion: ") + e.what(),
                         static_cast<int>(baseline_.trunk().size() + category_.trunk().size()) +
                             e.layer_index());
  }
}

void DeepNsm::backward(const Tensor& grad_output) {
  const Tensor g = fusion_.backward(grad_output);
  const std::size_t n = g.dim(0), da = spec_.deep_dim, db = spec_.cat_dim;
  if (!freeze_baseline) {
    Tensor ga({n, da});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < da; ++d) ga.at(i, d) = g.at(i, d);
    }
    baseline_.backward_features(ga);
  }
  if (!freeze_category) {
    Tensor gb({n, db});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < db; ++d) gb.at(i, d) = g.at(i, da + d);
    }
    category_.backward_features(gb);
  }
}

std::vector<Param*> DeepNsm::trainable_params() {
  std::vector<Param*> out;
  if (!freeze_baseline) {
    for (auto* p : strip(baseline_.trunk_params(""))) out.push_back(p);
  }
  if (!freeze_category) {
    for (auto* p : strip(category_.trunk_params(""))) out.push_back(p);
  }
  for (auto* p : fusion_.params()) out.push_back(p);
  return out;
}

NamedParams DeepNsm::named_params() {
  auto out = baseline_.trunk_params("baseline.");
  for (auto& e : category_.trunk_params("category.")) out.push_back(e);
  for (auto& e : name_params(fusion_, "fusion.")) out.push_back(e);
  return out;
}

// ---- checkpoints ---------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const CheckpointInfo& info,
                     const NamedParams& params, Adam* optimizer) {
  nlohmann::json header{{"format", "nsm_checkpoint"},
                        {"kind", info.kind},
                        {"spec", to_json(info.spec)},
                        {"epoch", info.epoch},
                        {"extra", info.extra.is_null() ? nlohmann::json::object() : info.extra}};
  std::vector<double> payload;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [name, p] : params) {
    entries.push_back({{"name", name}, {"shape", p->value.shape()}});
    payload.insert(payload.end(), p->value.values().begin(), p->value.values().end());
  }
  header["params"] = entries;
  if (optimizer && optimizer->t() > 0 && optimizer->m().size() == params.size()) {
    header["adam"] = {{"t", optimizer->t()}, {"lr", optimizer->config().lr}};
    for (const auto& m : optimizer->m()) payload.insert(payload.end(), m.begin(), m.end());
    for (const auto& v : optimizer->v()) payload.insert(payload.end(), v.begin(), v.end());
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_container(path, header, std::span<const double>(payload));
}

namespace {

CheckpointInfo info_from_header(const nlohmann::json& header, const std::filesystem::path& path) {
  if (header.value("format", "") != "nsm_checkpoint") {
    throw std::runtime_error(path.string() + ": not a network checkpoint");
  }
  return {header.at("kind").get<std::string>(), network_spec_from_json(header.at("spec")),
          header.at("epoch").get<std::int64_t>(), header.value("extra", nlohmann::json::object())};
}

}  // namespace

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  return info_from_header(read_container64(path).header, path);
}

CheckpointInfo load_checkpoint(const std::filesystem::path& path, const NamedParams& params,
                               Adam* optimizer) {
  const auto container = read_container64(path);
  const auto& header = container.header;
  auto info = info_from_header(header, path);
  const auto& entries = header.at("params");
  if (entries.size() != params.size()) {
    throw ShapeError(path.string() + ": checkpoint has " + std::to_string(entries.size()) +
                     " parameters, model has " + std::to_string(params.size()));
  }
  std::size_t offset = 0;
  const auto& payload = container.payload;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto name = entries[i].at("name").get<std::string>();
    const auto shape = entries[i].at("shape").get<std::vector<std::size_t>>();
    auto* p = params[i].second;
    if (name != params[i].first || shape != p->value.shape()) {
      throw ShapeError(path.string() + ": parameter " + name + " does not match model parameter " +
                       params[i].first + " " + p->value.shape_string());
    }
    if (offset + p->value.size() > payload.size()) throw std::runtime_error(path.string() + ": truncated");
    std::copy(payload.begin() + offset, payload.begin() + offset + p->value.size(), p->value.values().begin());
    offset += p->value.size();
  }
  if (optimizer && header.contains("adam")) {
    std::vector<std::vector<double>> m, v;
    for (auto* buf : {&m, &v}) {
      for (const auto& [name, p] : params) {
        if (offset + p->value.size() > payload.size()) throw std::runtime_error(path.string() + ": truncated");
        buf->emplace_back(payload.begin() + offset, payload.begin() + offset + p->value.size());
        offset += p->value.size();
      }
    }
    optimizer->restore(header.at("adam").at("t").get<std::int64_t>(), std::move(m), std::move(v));
  }
  return info;
}

}  // namespace scenemem::neuralnet
