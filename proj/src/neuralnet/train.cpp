#include "scenemem/neuralnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "scenemem/common/rng.hpp"
#include "scenemem/evalstats/rank.hpp"
#include "scenemem/features/image_ops.hpp"
#include "scenemem/neuralnet/loss.hpp"

namespace scenemem::neuralnet {

Tensor images_to_tensor(const std::vector<corpus::RgbImage>& images, std::size_t size) {
  Tensor out({images.size(), 3, size, size});
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].empty()) throw std::invalid_argument("images_to_tensor: empty image");
    const auto resized = features::resize_bilinear(features::to_float(images[i]), static_cast<int>(size),
                                                   static_cast<int>(size));
    for (std::size_t k = 0; k < 3 * plane; ++k) out[i * 3 * plane + k] = resized.data[k] - 0.5;
  }
  return out;
}

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& indices) {
  auto shape = t.shape();
  const std::size_t row = t.row_size();
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy(t.data() + indices[i] * row, t.data() + (indices[i] + 1) * row, out.data() + i * row);
  }
  return out;
}

std::vector<double> TrainingLog::train_losses() const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.split == "train") out.push_back(r.loss);
  }
  return out;
}

void write_training_log(const std::filesystem::path& path, const TrainingLog& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,split,loss,srcc\n";
  char buf[64];
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof buf, "%.8f", r.loss);
    out << r.epoch << ',' << r.split << ',' << buf << ',';
    if (r.srcc) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.srcc);
      out << buf;
    }
    out << '\n';
  }
}

ClassWeights class_weights(const Tensor& labels, double min_weight, double max_weight) {
  if (labels.rank() != 2) throw ShapeError("class_weights: labels must be [N,K]");
  const std::size_t n = labels.dim(0), k = labels.dim(1);
  ClassWeights cw;
  cw.weights.resize(k);
  cw.positives.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      if (labels.at(i, c) > 0.5) ++cw.positives[c];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (cw.positives[c] == 0) {
      cw.zero_positive.push_back(c);
      cw.clamped.push_back(c);
      cw.weights[c] = max_weight;
      continue;
    }
    const double ratio = static_cast<double>(n - cw.positives[c]) / static_cast<double>(cw.positives[c]);
    cw.weights[c] = std::clamp(ratio, min_weight, max_weight);
    if (cw.weights[c] != ratio) cw.clamped.push_back(c);
  }
  return cw;
}

namespace {

struct Snapshot {
  std::vector<Tensor> values;
  static Snapshot take(const NamedParams& params) {
    Snapshot s;
    for (const auto& [name, p] : params) s.values.push_back(p->value);
    return s;
  }
  void restore(const NamedParams& params) const {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].second->value = values[i];
  }
};

double safe_srcc(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return evalstats::srcc(a, b);
  } catch (const std::invalid_argument&) {
    return 0.0;
  }
}

std::vector<double> column(const Tensor& t) {
  std::vector<double> out(t.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.at(i, 0);
  return out;
}

// Shared epoch loop. `step` runs forward + loss + backward on one batch and
// returns the batch loss; `evaluate` returns (loss, srcc) on a dataset.
struct LoopHooks {
  std::function<double(const Tensor&, const Tensor&)> step;
  std::function<std::pair<double, std::optional<double>>(const Dataset&)> evaluate;
  std::vector<Param*> trainable;
  NamedParams named;
  std::string kind;
  NetworkSpec spec;
};

TrainingLog run_loop(const Dataset& train, const TrainConfig& config, const Dataset* validation,
                     LoopHooks hooks) {
  if (train.size() == 0) throw std::invalid_argument("training set is empty");
  if (train.targets.rank() == 0 || train.targets.dim(0) != train.size()) {
    throw ShapeError("targets do not match inputs");
  }
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  Adam adam({config.lr});
  Rng rng(config.seed);
  TrainingLog log;
  Snapshot last_good = Snapshot::take(hooks.named);

  auto checkpoint = [&](std::size_t epoch) {
    if (!config.checkpoint_dir) return std::string();
    const auto path = *config.checkpoint_dir / ("nsm_checkpoint_" + std::to_string(epoch) + ".bin");
    save_checkpoint(path, {hooks.kind, hooks.spec, static_cast<std::int64_t>(epoch), {}}, hooks.named,
                    &adam);
    return path.string();
  };

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      const Tensor x = gather_rows(train.inputs, idx);
      const Tensor y = gather_rows(train.targets, idx);
      zero_grads(hooks.trainable);
      double loss = 0.0;
      std::string failure;
      try {
        loss = hooks.step(x, y);
        if (!std::isfinite(loss)) failure = "non-finite loss";
      } catch (const NonFiniteError& e) {
        failure = e.what();
      }
      if (failure.empty()) {
        for (auto* p : hooks.trainable) {
          if (!p->grad.all_finite()) failure = "non-finite gradient in " + p->name;
        }
      }
      if (!failure.empty()) {
        last_good.restore(hooks.named);
        std::string path;
        if (config.checkpoint_dir) {
          path = (*config.checkpoint_dir / "nsm_checkpoint_last_good.bin").string();
          save_checkpoint(path, {hooks.kind, hooks.spec, static_cast<std::int64_t>(epoch - 1), {}},
                          hooks.named);
        }
        throw TrainingAborted("training aborted at epoch " + std::to_string(epoch) + ": " + failure,
                              epoch - 1, path);
      }
      adam.step(hooks.trainable);
      total += loss * static_cast<double>(idx.size());
    }
    log.rows.push_back({epoch, "train", total / static_cast<double>(order.size()), std::nullopt});
    if (validation && validation->size() > 0) {
      const auto [loss, srcc] = hooks.evaluate(*validation);
      log.rows.push_back({epoch, "val", loss, srcc});
    }
    last_good = Snapshot::take(hooks.named);
    if (config.checkpoint_every && epoch % config.checkpoint_every == 0 && epoch != config.epochs) {
      checkpoint(epoch);
    }
  }
  if (config.epochs > 0) checkpoint(config.epochs);
  log.stop_reason = "completed " + std::to_string(config.epochs) + " epochs";
  return log;
}

template <typename Model>
Tensor batched_forward(Model&& fn, const Tensor& inputs, std::size_t batch) {
  Tensor out;
  std::vector<double> values;
  std::vector<std::size_t> shape;
  for (std::size_t start = 0; start < inputs.dim(0); start += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(inputs.dim(0), start + batch); ++i) idx.push_back(i);
    const Tensor y = fn(gather_rows(inputs, idx));
    shape = y.shape();
    values.insert(values.end(), y.values().begin(), y.values().end());
  }
  shape[0] = inputs.dim(0);
  return Tensor(shape, std::move(values));
}

}  // namespace

TrainingLog train_category_branch(Branch& branch, const Dataset& train,
                                  const std::vector<double>& weights, const TrainConfig& config,
                                  const NetworkSpec& spec, const Dataset* validation) {
  if (train.targets.rank() != 2 || train.targets.dim(1) != branch.head_outputs()) {
    throw ShapeError("category labels must be [N," + std::to_string(branch.head_outputs()) + "]");
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    bool any = false;
    for (std::size_t c = 0; c < train.targets.dim(1); ++c) any = any || train.targets.at(i, c) > 0.5;
    if (!any) throw std::invalid_argument("training image " + std::to_string(i) + " has no positive label");
  }
  LoopHooks hooks;
  hooks.trainable = [&] {
    std::vector<Param*> out;
    for (auto& [n, p] : branch.named_params("")) out.push_back(p);
    return out;
  }();
  hooks.named = branch.named_params("category.");
  hooks.kind = "category_branch";
  hooks.spec = spec;
  hooks.step = [&](const Tensor& x, const Tensor& y) {
    const auto r = weighted_sigmoid_ce(branch.forward(x), y, weights);
    branch.backward(r.grad);
    return r.loss;
  };
  hooks.evaluate = [&](const Dataset& d) {
    const Tensor logits = batched_forward([&](const Tensor& x) { return branch.forward(x); }, d.inputs, 64);
    return std::make_pair(weighted_sigmoid_ce(logits, d.targets, weights).loss, std::optional<double>());
  };
  return run_loop(train, config, validation, std::move(hooks));
}

TrainingLog train_baseline_branch(Branch& branch, const Dataset& train, const TrainConfig& config,
                                  const NetworkSpec& spec, const Dataset* validation) {
  if (branch.head_outputs() != 1) throw ShapeError("baseline branch must have a scalar head");
  LoopHooks hooks;
  for (auto& [n, p] : branch.named_params("")) hooks.trainable.push_back(p);
  hooks.named = branch.named_params("baseline.");
  hooks.kind = "baseline_branch";
  hooks.spec = spec;
  hooks.step = [&](const Tensor& x, const Tensor& y) {
    const auto r = euclidean_loss(branch.forward(x), y);
    branch.backward(r.grad);
    return r.loss;
  };
  hooks.evaluate = [&](const Dataset& d) {
    const Tensor pred = batched_forward([&](const Tensor& x) { return branch.forward(x); }, d.inputs, 64);
    return std::make_pair(euclidean_loss(pred, d.targets).loss,
                          std::optional<double>(safe_srcc(column(pred), column(d.targets))));
  };
  return run_loop(train, config, validation, std::move(hooks));
}

TrainingLog train_deepnsm(DeepNsm& model, const Dataset& train, const TrainConfig& config,
                          const Dataset* validation) {
  LoopHooks hooks;
  hooks.trainable = model.trainable_params();
  hooks.named = model.named_params();
  hooks.kind = "deepnsm";
  hooks.spec = model.spec();
  hooks.step = [&](const Tensor& x, const Tensor& y) {
    const auto r = euclidean_loss(model.forward(x), y);
    model.backward(r.grad);
    return r.loss;
  };
  hooks.evaluate = [&](const Dataset& d) {
    const Tensor pred = batched_forward([&](const Tensor& x) { return model.forward(x); }, d.inputs, 64);
    return std::make_pair(euclidean_loss(pred, d.targets).loss,
                          std::optional<double>(safe_srcc(column(pred), column(d.targets))));
  };
  return run_loop(train, config, validation, std::move(hooks));
}

std::vector<double> predict_scores(DeepNsm& model, const Tensor& inputs, std::size_t batch) {
  auto out = column(batched_forward([&](const Tensor& x) { return model.forward(x); }, inputs, batch));
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<double> predict_scores(Branch& baseline, const Tensor& inputs, std::size_t batch) {
  auto out = column(batched_forward([&](const Tensor& x) { return baseline.forward(x); }, inputs, batch));
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Tensor extract_features(Branch& branch, const Tensor& inputs, std::size_t batch) {
  return batched_forward([&](const Tensor& x) { return branch.features(x); }, inputs, batch);
}

}  // namespace scenemem::neuralnet
