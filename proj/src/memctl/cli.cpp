#include "scenemem/memctl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "scenemem/common/text_io.hpp"
#include "scenemem/corpus/annotation.hpp"
#include "scenemem/corpus/corpus.hpp"
#include "scenemem/corpus/split.hpp"
#include "scenemem/evalstats/category_stats.hpp"
#include "scenemem/evalstats/rank.hpp"
#include "scenemem/features/extract.hpp"
#include "scenemem/gamelab/level.hpp"
#include "scenemem/gamelab/scoring.hpp"
#include "scenemem/kernreg/cv.hpp"
#include "scenemem/memctl/config.hpp"
#include "scenemem/memctl/http_api.hpp"
#include "scenemem/memctl/sessions.hpp"
#include "scenemem/neuralnet/train.hpp"

namespace scenemem::memctl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A failure the user can fix by changing flags; reported like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::string config_path;
  RunConfig config;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

fs::path pick(const std::string& flag, const fs::path& from_config, const char* name) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  throw UsageError(std::string("--") + name + " is required (or set it in the config file)");
}

corpus::Corpus load_corpus(const fs::path& manifest, bool verify = true) {
  return corpus::import_corpus(manifest, corpus::ImportOptions{verify});
}

std::map<std::string, double> score_map(const fs::path& path) {
  std::map<std::string, double> out;
  for (const auto& [id, s] : gamelab::load_scores(path)) out[id] = s;
  return out;
}

// Train or test ids of a split, restricted to ids that have a score.
std::vector<std::string> split_ids(const fs::path& split_path, const std::string& which,
                                   const corpus::Corpus& corpus) {
  if (split_path.empty()) return corpus.ids(corpus::Role::target);
  const auto split = corpus::load_split(split_path);
  if (which == "train") return split.train_ids;
  if (which == "test") return split.test_ids;
  if (which == "all") {
    auto ids = split.train_ids;
    ids.insert(ids.end(), split.test_ids.begin(), split.test_ids.end());
    return ids;
  }
  throw UsageError("--subset must be train, test or all");
}

// Concatenated features (in file order) of every id present in all files.
struct Design {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> dims;
  std::vector<features::FeatureKind> kinds;
};

Design load_design(const std::vector<std::string>& files, const std::vector<std::string>& ids) {
  std::vector<features::FeatureSet> sets;
  for (const auto& f : files) sets.push_back(features::load_feature_set(f));
  std::vector<std::map<std::string, const std::vector<double>*>> index(sets.size());
  Design d;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (std::size_t i = 0; i < sets[k].image_ids.size(); ++i) index[k][sets[k].image_ids[i]] = &sets[k].rows[i];
    d.dims.push_back(sets[k].dim);
    d.kinds.push_back(sets[k].kind);
  }
  for (const auto& id : ids) {
    std::vector<double> row;
    bool ok = true;
    for (std::size_t k = 0; k < sets.size() && ok; ++k) {
      const auto it = index[k].find(id);
      if (it == index[k].end()) {
        ok = false;
      } else {
        row.insert(row.end(), it->second->begin(), it->second->end());
      }
    }
    if (!ok) continue;
    d.ids.push_back(id);
    d.rows.push_back(std::move(row));
  }
  return d;
}

kernreg::KernelSpec parse_base_kernel(const std::string& name, double gamma) {
  if (name == "linear") return kernreg::KernelSpec::linear();
  if (name == "rbf") return kernreg::KernelSpec::rbf(gamma);
  if (name == "hik") return kernreg::KernelSpec::hik();
  throw UsageError("unknown kernel \"" + name + "\" (linear, rbf, hik)");
}

// One kernel per feature file; several files give an equal-weight sum over
// their slices of the concatenated vector.
kernreg::KernelSpec build_kernel(const std::vector<std::string>& names, const std::vector<std::size_t>& dims,
                                 double gamma) {
  std::vector<std::string> per_file = names;
  if (per_file.empty()) per_file.push_back("rbf");
  if (per_file.size() == 1) per_file.resize(dims.size(), per_file.front());
  if (per_file.size() != dims.size()) throw UsageError("give one --kernel, or one per --features file");
  if (dims.size() == 1) return parse_base_kernel(per_file[0], gamma);
  kernreg::KernelSpec spec;
  spec.kind = kernreg::KernelKind::sum;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    spec.terms.push_back({parse_base_kernel(per_file[k], gamma), 1.0 / static_cast<double>(dims.size()), offset, dims[k]});
    offset += dims[k];
  }
  return spec;
}

std::vector<corpus::RgbImage> decode_all(const corpus::Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<corpus::RgbImage> images;
  images.reserve(ids.size());
  for (const auto& id : ids) images.push_back(corpus::decode_image(corpus.at(id).path));
  return images;
}

neuralnet::Tensor score_tensor(const std::vector<std::string>& ids, const std::map<std::string, double>& scores) {
  neuralnet::Tensor t({ids.size(), 1});
  for (std::size_t i = 0; i < ids.size(); ++i) t[i] = scores.at(ids[i]);
  return t;
}

std::vector<std::string> with_scores(const std::vector<std::string>& ids, const std::map<std::string, double>& scores) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (scores.count(id)) out.push_back(id);
  }
  return out;
}

neuralnet::TrainConfig train_config(const RunConfig& c, std::optional<std::size_t> epochs, std::optional<double> lr,
                                    std::optional<std::size_t> batch, std::optional<std::uint64_t> seed,
                                    const fs::path& out_dir) {
  neuralnet::TrainConfig t;
  t.epochs = epochs.value_or(c.epochs);
  t.lr = lr.value_or(c.lr);
  t.batch_size = batch.value_or(c.batch_size);
  t.seed = seed.value_or(c.seed);
  t.checkpoint_dir = out_dir;
  return t;
}

void write_predictions(const fs::path& path, const std::vector<std::string>& ids, const std::vector<double>& pred) {
  std::string text = "image_id,prediction\n";
  char buf[64];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", pred[i]);
    text += ids[i] + "," + buf + "\n";
  }
  write_text_file(path, text);
}

std::optional<double> srcc_against(const std::vector<std::string>& ids, const std::vector<double>& pred,
                                   const std::map<std::string, double>& scores) {
  std::vector<double> p, t;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (const auto it = scores.find(ids[i]); it != scores.end()) {
      p.push_back(pred[i]);
      t.push_back(it->second);
    }
  }
  if (p.size() < 2) return std::nullopt;
  try {
    return evalstats::srcc(p, t);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

ApiServer* g_server = nullptr;
void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"memctl: memorability experiment toolkit"};
  app.require_subcommand(1);
  Shared shared;
  shared.out = &out;
  shared.err = &err;
  app.add_option("--config", shared.config_path, "Run config JSON file")->check(CLI::ExistingFile);

  // Options of every command live here; the handler reads them after parsing.
  std::string manifest, vocabulary, votes, out_path, out_dir, logs_dir, split_path, scores_path, codebook_path,
      model_path, checkpoint, baseline_ckpt, category_ckpt, levels_dir, data_dir, host, kind_name, subset = "test",
      report_path, assignments;
  std::vector<std::string> feature_files, kernel_names;
  std::size_t train_count = 0;
  int levels = 1, repeats = 25, folds = 0;
  std::optional<int> horizon, port;
  std::optional<std::uint64_t> seed;
  std::optional<double> c_value, epsilon, gamma, lr;
  std::optional<std::size_t> epochs, batch;
  bool no_verify = false, no_filter = false, freeze_baseline = false;

  std::function<void()> handler;
  auto command = [&](CLI::App* parent, const std::string& name, const std::string& help, auto body) {
    auto* sub = parent->add_subcommand(name, help);
    sub->callback([&handler, body] { handler = body; });
    return sub;
  };

  // ---- corpus ----
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus management")->require_subcommand(1);
  auto* c_import = command(corpus_cmd, "import", "Validate a manifest and its images", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), !no_verify);
    json summary{{"images", c.size()},
                 {"targets", c.count(corpus::Role::target)},
                 {"fillers", c.count(corpus::Role::filler)},
                 {"vigilance", c.count(corpus::Role::vigilance)}};
    if (!out_path.empty()) corpus::write_manifest(out_path, c);
    out << summary.dump() << "\n";
  });
  c_import->add_option("--manifest", manifest, "Manifest (JSON lines)");
  c_import->add_flag("--no-verify", no_verify, "Skip decoding every image");
  c_import->add_option("--out", out_path, "Write a normalized manifest here");

  auto* c_annotate = command(corpus_cmd, "annotate", "Aggregate category votes into the manifest", [&] {
    auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto vocab = corpus::load_vocabulary(pick(vocabulary, shared.config.vocabulary, "vocabulary"));
    const auto all_votes = corpus::load_votes(votes);
    std::set<std::string> known;
    for (const auto& r : c.records()) known.insert(r.image_id);
    const auto result = corpus::aggregate_categories(all_votes, vocab, &known);
    std::vector<corpus::ImageRecord> records = c.records();
    for (auto& r : records) {
      if (const auto it = result.categories.find(r.image_id); it != result.categories.end()) r.categories = it->second;
    }
    corpus::write_manifest(out_path, corpus::Corpus(std::move(records)));
    json unverified = json::array();
    for (const auto& u : result.unverified) unverified.push_back({{"image_id", u.image_id}, {"category_id", u.category_id}});
    json report{{"annotated", result.categories.size()}, {"repaired", result.repaired}, {"unverified", unverified}};
    if (!report_path.empty()) write_json_file(report_path, report);
    out << report.dump() << "\n";
  });
  c_annotate->add_option("--manifest", manifest, "Input manifest");
  c_annotate->add_option("--vocabulary", vocabulary, "Category names (JSON)");
  c_annotate->add_option("--votes", votes, "Votes (JSON lines)")->required()->check(CLI::ExistingFile);
  c_annotate->add_option("--out", out_path, "Output manifest")->required();
  c_annotate->add_option("--report", report_path, "Write the aggregation report here");

  auto* c_split = command(corpus_cmd, "split", "Random train/test split of the targets", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto split = corpus::make_split(c, train_count, seed.value_or(shared.config.seed));
    corpus::save_split(out_path, split);
    out << json{{"train", split.train_ids.size()}, {"test", split.test_ids.size()}, {"seed", split.seed}}.dump() << "\n";
  });
  c_split->add_option("--manifest", manifest, "Manifest");
  c_split->add_option("--train", train_count, "Number of training targets")->required();
  c_split->add_option("--seed", seed, "Seed");
  c_split->add_option("--out", out_path, "split.json path")->required();

  // ---- game ----
  auto* game_cmd = app.add_subcommand("game", "Memory game levels and service")->require_subcommand(1);
  auto* g_schedule = command(game_cmd, "schedule", "Generate level plans", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto plans = gamelab::schedule_levels(c, levels, seed.value_or(shared.config.seed));
    const fs::path dir = out_dir.empty() ? shared.config.levels_dir : fs::path(out_dir);
    if (dir.empty()) throw UsageError("--out-dir is required");
    json ids = json::array();
    for (const auto& p : plans) {
      gamelab::save_level(dir / ("level_" + p.level_id + ".json"), p);
      ids.push_back(p.level_id);
    }
    out << json{{"levels", ids}, {"dir", dir.string()}}.dump() << "\n";
  });
  g_schedule->add_option("--manifest", manifest, "Manifest");
  g_schedule->add_option("--levels", levels, "Number of levels")->check(CLI::PositiveNumber);
  g_schedule->add_option("--seed", seed, "Seed");
  g_schedule->add_option("--out-dir", out_dir, "Directory for level_<id>.json");

  auto* g_serve = command(game_cmd, "serve", "Run the session HTTP service", [&] {
    RunConfig& cfg = shared.config;
    if (!manifest.empty()) cfg.manifest = manifest;
    if (!levels_dir.empty()) cfg.levels_dir = levels_dir;
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (!assignments.empty()) cfg.assignments = assignments;
    if (!host.empty()) cfg.host = host;
    if (port) cfg.port = *port;
    if (cfg.levels_dir.empty()) throw UsageError("--levels-dir is required");
    std::vector<gamelab::LevelPlan> plans;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cfg.levels_dir)) {
      const auto name = e.path().filename().string();
      if (name.starts_with("level_") && name.ends_with(".json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) plans.push_back(gamelab::load_level(f));
    std::map<std::string, std::string> assign;
    if (!cfg.assignments.empty()) assign = read_json_file(cfg.assignments).get<std::map<std::string, std::string>>();
    std::optional<corpus::Corpus> c;
    if (!cfg.manifest.empty()) c = load_corpus(cfg.manifest, false);
    ServiceOptions opts;
    opts.timing = cfg.timing;
    opts.vigilance = cfg.vigilance;
    opts.feedback_vigilance_miss = cfg.feedback_vigilance_miss;
    opts.feedback_false_alarm = cfg.feedback_false_alarm;
    SessionManager manager(cfg.data_dir, std::move(plans), opts, assign);
    ApiServer server(manager, c ? &*c : nullptr, cfg.ui_dir);
    const int bound = server.bind(cfg.host, cfg.port);
    if (bound < 0) throw std::runtime_error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    out << json{{"listening", cfg.host + ":" + std::to_string(bound)}, {"sessions_resumed", manager.session_ids().size()}}.dump()
        << std::endl;
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    server.listen();
    g_server = nullptr;
  });
  g_serve->add_option("--manifest", manifest, "Manifest (for the image route)");
  g_serve->add_option("--levels-dir", levels_dir, "Directory of level_<id>.json");
  g_serve->add_option("--data-dir", data_dir, "Session log directory");
  g_serve->add_option("--assignments", assignments, "JSON {subject_id: level_id}");
  g_serve->add_option("--host", host, "Bind address");
  g_serve->add_option("--port", port, "Port (0 = any free port)");

  // ---- score ----
  auto* score_cmd = app.add_subcommand("score", "Memorability scores from session logs")->require_subcommand(1);
  auto filtered_logs = [&](json& report) {
    auto logs = gamelab::read_session_logs(logs_dir);
    if (logs.empty()) throw std::runtime_error("no session_*.jsonl files in " + logs_dir);
    std::vector<gamelab::SessionLog> kept;
    json rejected = json::array();
    for (auto& log : logs) {
      const auto verdict = gamelab::vigilance_filter(log, shared.config.vigilance);
      if (verdict.pass || no_filter) {
        kept.push_back(std::move(log));
      } else {
        rejected.push_back({{"session_id", log.session_id}, {"reason", verdict.reason}});
      }
    }
    report["sessions"] = logs.size();
    report["rejected_sessions"] = rejected;
    return kept;
  };
  auto* s_compute = command(score_cmd, "compute", "Write scores.csv", [&] {
    json report;
    const auto logs = filtered_logs(report);
    gamelab::ScoringConfig sc;
    sc.horizon = horizon.value_or(shared.config.horizon);
    const auto table = gamelab::score_images(logs, sc);
    const fs::path dest = out_path.empty() ? fs::path("scores.csv") : fs::path(out_path);
    gamelab::save_scores(dest, table);
    report["scored"] = table.rows.size();
    report["excluded_images"] = table.excluded;
    report["decay_alpha"] = table.decay_alpha;
    report["T"] = table.horizon;
    report["out"] = dest.string();
    out << report.dump() << "\n";
  });
  s_compute->add_option("--logs", logs_dir, "Directory of session logs")->required()->check(CLI::ExistingDirectory);
  s_compute->add_option("--T", horizon, "Regularization horizon in images (default 100)");
  s_compute->add_option("--out", out_path, "Output CSV (default scores.csv)");
  s_compute->add_flag("--no-filter", no_filter, "Keep sessions that fail the vigilance check");

  auto* s_consistency = command(score_cmd, "consistency", "Split-half human consistency", [&] {
    json report;
    const auto logs = filtered_logs(report);
    gamelab::ScoringConfig sc;
    sc.horizon = horizon.value_or(shared.config.horizon);
    const auto r = gamelab::split_half_consistency(logs, repeats, seed.value_or(shared.config.seed), sc);
    report["mean_srcc"] = r.mean_srcc;
    report["per_repeat"] = r.per_repeat;
    out << report.dump() << "\n";
  });
  s_consistency->add_option("--logs", logs_dir, "Directory of session logs")->required()->check(CLI::ExistingDirectory);
  s_consistency->add_option("--repeats", repeats, "Random splits")->check(CLI::PositiveNumber);
  s_consistency->add_option("--seed", seed, "Seed");
  s_consistency->add_option("--T", horizon, "Regularization horizon");
  s_consistency->add_flag("--no-filter", no_filter, "Keep sessions that fail the vigilance check");

  // ---- features ----
  auto* features_cmd = app.add_subcommand("features", "Handcrafted features")->require_subcommand(1);
  auto* f_extract = command(features_cmd, "extract", "Extract one feature kind for the corpus", [&] {
    const auto kind = features::parse_feature_kind(kind_name);
    if (!kind) throw UsageError("unknown feature kind \"" + kind_name + "\"");
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    std::vector<std::string> ids;
    for (const auto& r : c.records()) {
      if (r.role == corpus::Role::target) ids.push_back(r.image_id);
    }
    features::ExtractionConfig ec;
    features::ExtractionInputs inputs;
    std::optional<features::Codebook> book;
    std::optional<corpus::CategoryVocabulary> vocab;
    if (*kind == features::FeatureKind::sift_bow || *kind == features::FeatureKind::hog_bow) {
      const auto dk = *kind == features::FeatureKind::sift_bow ? features::DescriptorKind::sift : features::DescriptorKind::hog;
      if (!codebook_path.empty() && fs::exists(codebook_path)) {
        book = features::load_codebook(codebook_path);
      } else {
        // fit on training images only so test images never shape the codebook
        const auto fit_ids = split_path.empty() ? ids : corpus::load_split(split_path).train_ids;
        book = features::fit_codebook(decode_all(c, fit_ids), dk, seed.value_or(shared.config.seed), ec);
        if (!codebook_path.empty()) features::save_codebook(codebook_path, *book);
      }
      (dk == features::DescriptorKind::sift ? inputs.sift_codebook : inputs.hog_codebook) = &*book;
    }
    if (*kind == features::FeatureKind::category) {
      vocab = corpus::load_vocabulary(pick(vocabulary, shared.config.vocabulary, "vocabulary"));
      inputs.vocabulary = &*vocab;
    }
    const auto set = features::extract_feature_set(c, ids, *kind, ec, inputs);
    features::save_feature_set(out_path, set);
    out << json{{"kind", kind_name}, {"count", set.rows.size()}, {"dim", set.dim}, {"out", out_path}}.dump() << "\n";
  });
  f_extract->add_option("--kind", kind_name, "pixels|sift_bow|hog_bow|gist|saliency_grid|category")->required();
  f_extract->add_option("--manifest", manifest, "Manifest");
  f_extract->add_option("--out", out_path, "Feature file")->required();
  f_extract->add_option("--codebook", codebook_path, "Codebook file (loaded if present, else fitted and saved)");
  f_extract->add_option("--split", split_path, "Split whose train ids fit the codebook");
  f_extract->add_option("--vocabulary", vocabulary, "Category names (category kind)");
  f_extract->add_option("--seed", seed, "Codebook seed");

  // ---- svr ----
  auto* svr_cmd = app.add_subcommand("svr", "Support vector regression")->require_subcommand(1);
  auto* v_train = command(svr_cmd, "train", "Train an SVR on feature files", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto scores = score_map(scores_path);
    const auto design = load_design(feature_files, with_scores(split_ids(split_path, "train", c), scores));
    if (design.ids.size() < 2) throw std::runtime_error("fewer than 2 training images have both features and scores");
    std::vector<double> y;
    for (const auto& id : design.ids) y.push_back(scores.at(id));
    const std::size_t dim = design.rows.front().size();
    auto kernel = build_kernel(kernel_names, design.dims, gamma.value_or(1.0));
    kernreg::SvrParams params;
    params.kernel = kernel;
    json cv_json;
    const bool fixed = c_value && epsilon && (gamma || !kernreg::uses_rbf(kernel));
    if (fixed) {
      params = kernreg::apply_point(params, {*c_value, *epsilon, kernreg::uses_rbf(kernel) ? gamma : std::nullopt});
    } else {
      auto grid = shared.config.svr_grid.value_or(kernreg::default_grid(kernreg::rbf_dim(kernel, dim)));
      if (!shared.config.svr_grid) grid = kernreg::default_grid(kernreg::rbf_dim(kernel, dim));
      if (c_value) grid.C = {*c_value};
      if (epsilon) grid.epsilon = {*epsilon};
      if (gamma) grid.gamma = {*gamma};
      const int k = folds > 0 ? folds : shared.config.cv_folds;
      const auto cv = kernreg::grid_search_cv(design.rows, y, kernel, kernreg::expand_grid(grid, kernel), k,
                                              seed.value_or(shared.config.seed), params);
      params = kernreg::apply_point(params, cv.best());
      cv_json = kernreg::to_json(cv);
    }
    const auto model = kernreg::svr_train(design.rows, y, params);
    kernreg::save_svr_model(out_path, model);
    auto meta = read_json_file(out_path);
    json features_meta = json::array();
    for (std::size_t k = 0; k < feature_files.size(); ++k) {
      features_meta.push_back({{"file", feature_files[k]}, {"kind", features::to_string(design.kinds[k])}, {"dim", design.dims[k]}});
    }
    meta["training"] = {{"n_train", design.ids.size()}, {"features", features_meta}, {"cv", cv_json},
                        {"chosen", {{"C", model.C}, {"epsilon", model.epsilon}}}};
    write_json_file(out_path, meta);
    out << json{{"n_train", design.ids.size()}, {"C", model.C}, {"epsilon", model.epsilon},
                {"n_support", model.diagnostics.n_support}, {"converged", model.diagnostics.converged},
                {"out", out_path}}.dump()
        << "\n";
  });
  v_train->add_option("--features", feature_files, "Feature file(s); several are concatenated")->required();
  v_train->add_option("--kernel", kernel_names, "linear|rbf|hik, once or per feature file");
  v_train->add_option("--scores", scores_path, "scores.csv")->required()->check(CLI::ExistingFile);
  v_train->add_option("--manifest", manifest, "Manifest");
  v_train->add_option("--split", split_path, "split.json (train ids are used)");
  v_train->add_option("--C", c_value, "Fix C");
  v_train->add_option("--epsilon", epsilon, "Fix epsilon");
  v_train->add_option("--gamma", gamma, "Fix rbf gamma");
  v_train->add_option("--folds", folds, "Cross-validation folds");
  v_train->add_option("--seed", seed, "Fold seed");
  v_train->add_option("--out", out_path, "svr_model.json")->required();

  auto* v_eval = command(svr_cmd, "eval", "Evaluate an SVR by SRCC", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto scores = score_map(scores_path);
    const auto model = kernreg::load_svr_model(model_path);
    const auto design = load_design(feature_files, with_scores(split_ids(split_path, subset, c), scores));
    const auto pred = kernreg::svr_predict(model, design.rows);
    if (!out_path.empty()) write_predictions(out_path, design.ids, pred);
    const auto rho = srcc_against(design.ids, pred, scores);
    out << json{{"n", design.ids.size()}, {"srcc", rho ? json(*rho) : json(nullptr)}}.dump() << "\n";
  });
  v_eval->add_option("--model", model_path, "svr_model.json")->required()->check(CLI::ExistingFile);
  v_eval->add_option("--features", feature_files, "Feature file(s), same order as training")->required();
  v_eval->add_option("--scores", scores_path, "scores.csv")->required()->check(CLI::ExistingFile);
  v_eval->add_option("--manifest", manifest, "Manifest");
  v_eval->add_option("--split", split_path, "split.json");
  v_eval->add_option("--subset", subset, "train|test|all (default test)");
  v_eval->add_option("--out", out_path, "Predictions CSV");

  // ---- nsm ----
  auto* nsm_cmd = app.add_subcommand("nsm", "DeepNSM network")->require_subcommand(1);
  auto network_spec = [&](std::size_t categories) {
    auto spec = shared.config.network;
    spec.num_categories = categories;
    return spec;
  };
  auto* n_cat = command(nsm_cmd, "pretrain-category", "Train the category branch", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto vocab = corpus::load_vocabulary(pick(vocabulary, shared.config.vocabulary, "vocabulary"));
    const auto spec = network_spec(vocab.size());
    const auto ids = split_ids(split_path, "train", c);
    neuralnet::Dataset train{neuralnet::images_to_tensor(decode_all(c, ids), spec.input_size),
                             neuralnet::Tensor({ids.size(), vocab.size()})};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& cats = c.at(ids[i]).categories;
      if (cats.empty()) throw std::runtime_error("image " + ids[i] + " has no category label");
      for (int k : cats) train.targets.at(i, static_cast<std::size_t>(k)) = 1.0;
    }
    const auto weights = neuralnet::class_weights(train.targets);
    for (auto k : weights.zero_positive) {
      err << "warning: category " << vocab.name(static_cast<int>(k)) << " has no positive training image; weight clamped\n";
    }
    auto branch = neuralnet::make_category_branch(spec);
    Rng rng(seed.value_or(shared.config.seed));
    branch.init(rng);
    const auto cfg = train_config(shared.config, epochs, lr, batch, seed, out_dir);
    const auto log = neuralnet::train_category_branch(branch, train, weights.weights, cfg, spec);
    neuralnet::write_training_log(fs::path(out_dir) / "training_log.csv", log);
    neuralnet::save_checkpoint(fs::path(out_dir) / "category_branch.bin",
                               {"category_branch", spec, static_cast<std::int64_t>(cfg.epochs), {{"class_weights", weights.weights}}},
                               branch.named_params("category."));
    out << json{{"epochs", cfg.epochs}, {"final_loss", log.train_losses().back()}, {"class_weights", weights.weights},
                {"checkpoint", (fs::path(out_dir) / "category_branch.bin").string()}}.dump()
        << "\n";
  });
  auto* n_base = command(nsm_cmd, "pretrain-baseline", "Train the baseline branch on scores", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto scores = score_map(scores_path);
    const auto spec = network_spec(std::max<std::size_t>(shared.config.network.num_categories, 1));
    const auto ids = with_scores(split_ids(split_path, "train", c), scores);
    neuralnet::Dataset train{neuralnet::images_to_tensor(decode_all(c, ids), spec.input_size), score_tensor(ids, scores)};
    auto branch = neuralnet::make_baseline_branch(spec);
    Rng rng(seed.value_or(shared.config.seed));
    branch.init(rng);
    const auto cfg = train_config(shared.config, epochs, lr, batch, seed, out_dir);
    const auto log = neuralnet::train_baseline_branch(branch, train, cfg, spec);
    neuralnet::write_training_log(fs::path(out_dir) / "training_log.csv", log);
    neuralnet::save_checkpoint(fs::path(out_dir) / "baseline_branch.bin",
                               {"baseline_branch", spec, static_cast<std::int64_t>(cfg.epochs), {}},
                               branch.named_params("baseline."));
    out << json{{"epochs", cfg.epochs}, {"final_loss", log.train_losses().back()},
                {"checkpoint", (fs::path(out_dir) / "baseline_branch.bin").string()}}.dump()
        << "\n";
  });
  auto* n_train = command(nsm_cmd, "train", "Jointly train DeepNSM from the two pretrained branches", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto scores = score_map(scores_path);
    const auto cat_info = neuralnet::read_checkpoint_info(category_ckpt);
    const auto spec = cat_info.spec;
    auto baseline = neuralnet::make_baseline_branch(spec);
    auto category = neuralnet::make_category_branch(spec);
    neuralnet::load_checkpoint(baseline_ckpt, baseline.named_params("baseline."));
    neuralnet::load_checkpoint(category_ckpt, category.named_params("category."));
    neuralnet::DeepNsm model(spec);
    model.init(seed.value_or(shared.config.seed));
    model.load_branches(baseline, category);
    model.freeze_baseline = freeze_baseline;
    const auto ids = with_scores(split_ids(split_path, "train", c), scores);
    neuralnet::Dataset train{neuralnet::images_to_tensor(decode_all(c, ids), spec.input_size), score_tensor(ids, scores)};
    const auto cfg = train_config(shared.config, epochs, lr, batch, seed, out_dir);
    const auto log = neuralnet::train_deepnsm(model, train, cfg);
    neuralnet::write_training_log(fs::path(out_dir) / "training_log.csv", log);
    const auto final_path = fs::path(out_dir) / "deepnsm.bin";
    neuralnet::save_checkpoint(final_path, {"deepnsm", spec, static_cast<std::int64_t>(cfg.epochs), {}}, model.named_params());
    out << json{{"epochs", cfg.epochs}, {"final_loss", log.train_losses().back()}, {"checkpoint", final_path.string()}}.dump()
        << "\n";
  });
  auto* n_predict = command(nsm_cmd, "predict", "Predict scores with a DeepNSM or baseline checkpoint", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto info = neuralnet::read_checkpoint_info(checkpoint);
    const auto ids = split_ids(split_path, subset, c);
    const auto inputs = neuralnet::images_to_tensor(decode_all(c, ids), info.spec.input_size);
    std::vector<double> pred;
    if (info.kind == "deepnsm") {
      neuralnet::DeepNsm model(info.spec);
      neuralnet::load_checkpoint(checkpoint, model.named_params());
      pred = neuralnet::predict_scores(model, inputs);
    } else if (info.kind == "baseline_branch") {
      auto branch = neuralnet::make_baseline_branch(info.spec);
      neuralnet::load_checkpoint(checkpoint, branch.named_params("baseline."));
      pred = neuralnet::predict_scores(branch, inputs);
    } else {
      throw std::runtime_error("checkpoint kind " + info.kind + " does not predict scores");
    }
    if (!out_path.empty()) write_predictions(out_path, ids, pred);
    json report{{"n", ids.size()}, {"kind", info.kind}};
    if (!scores_path.empty()) {
      const auto rho = srcc_against(ids, pred, score_map(scores_path));
      report["srcc"] = rho ? json(*rho) : json(nullptr);
    }
    out << report.dump() << "\n";
  });
  auto* n_deep = command(nsm_cmd, "extract-deep", "Baseline hidden-layer features for SVR use", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto info = neuralnet::read_checkpoint_info(checkpoint);
    auto branch = neuralnet::make_baseline_branch(info.spec);
    if (info.kind == "baseline_branch") {
      neuralnet::load_checkpoint(checkpoint, branch.named_params("baseline."));
    } else if (info.kind == "deepnsm") {
      neuralnet::DeepNsm model(info.spec);
      neuralnet::load_checkpoint(checkpoint, model.named_params());
      neuralnet::copy_param_values(model.baseline().trunk_params(""), branch.trunk_params(""));
    } else {
      throw std::runtime_error("checkpoint kind " + info.kind + " has no baseline branch");
    }
    const auto ids = c.ids(corpus::Role::target);
    const auto feats = neuralnet::extract_features(branch, neuralnet::images_to_tensor(decode_all(c, ids), info.spec.input_size));
    features::FeatureSet set;
    set.kind = features::FeatureKind::deep;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      features::FeatureVector v{features::FeatureKind::deep,
                                std::vector<double>(feats.data() + i * feats.dim(1), feats.data() + (i + 1) * feats.dim(1))};
      set.add(ids[i], v);
    }
    features::save_feature_set(out_path, set);
    out << json{{"kind", "deep"}, {"count", set.rows.size()}, {"dim", set.dim}, {"out", out_path}}.dump() << "\n";
  });
  for (auto* sub : {n_cat, n_base, n_train}) {
    sub->add_option("--manifest", manifest, "Manifest");
    sub->add_option("--split", split_path, "split.json (train ids are used)");
    sub->add_option("--out-dir", out_dir, "Checkpoints and training_log.csv")->required();
    sub->add_option("--epochs", epochs, "Epochs");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--batch", batch, "Batch size");
    sub->add_option("--seed", seed, "Seed");
  }
  n_cat->add_option("--vocabulary", vocabulary, "Category names");
  n_base->add_option("--scores", scores_path, "scores.csv")->required()->check(CLI::ExistingFile);
  n_train->add_option("--scores", scores_path, "scores.csv")->required()->check(CLI::ExistingFile);
  n_train->add_option("--baseline", baseline_ckpt, "Pretrained baseline checkpoint")->required()->check(CLI::ExistingFile);
  n_train->add_option("--category", category_ckpt, "Pretrained category checkpoint")->required()->check(CLI::ExistingFile);
  n_train->add_flag("--freeze-baseline", freeze_baseline, "Keep the baseline branch fixed");
  n_predict->add_option("--checkpoint", checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  n_predict->add_option("--manifest", manifest, "Manifest");
  n_predict->add_option("--split", split_path, "split.json");
  n_predict->add_option("--subset", subset, "train|test|all (default test)");
  n_predict->add_option("--scores", scores_path, "scores.csv, to report SRCC");
  n_predict->add_option("--out", out_path, "Predictions CSV");
  n_deep->add_option("--checkpoint", checkpoint, "Baseline or DeepNSM checkpoint")->required()->check(CLI::ExistingFile);
  n_deep->add_option("--manifest", manifest, "Manifest");
  n_deep->add_option("--out", out_path, "Feature file")->required();

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "Reports")->require_subcommand(1);
  auto* r_stats = command(report_cmd, "category-stats", "Per-category score mean and SD", [&] {
    const auto c = load_corpus(pick(manifest, shared.config.manifest, "manifest"), false);
    const auto vocab = corpus::load_vocabulary(pick(vocabulary, shared.config.vocabulary, "vocabulary"));
    std::map<std::string, std::set<int>> cats;
    for (const auto& r : c.records()) cats[r.image_id] = r.categories;
    const auto stats = evalstats::category_stats(gamelab::load_scores(scores_path), cats, vocab.names());
    const auto csv = evalstats::category_stats_csv(stats);
    if (out_path.empty()) {
      out << csv;
    } else {
      write_text_file(out_path, csv);
      out << json{{"categories", stats.size()}, {"out", out_path}}.dump() << "\n";
    }
  });
  r_stats->add_option("--scores", scores_path, "scores.csv")->required()->check(CLI::ExistingFile);
  r_stats->add_option("--manifest", manifest, "Annotated manifest");
  r_stats->add_option("--vocabulary", vocabulary, "Category names");
  r_stats->add_option("--out", out_path, "CSV output (default stdout)");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::string command_path;
  for (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front(); sub;
       sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front()) {
    command_path += (command_path.empty() ? "" : " ") + sub->get_name();
  }
  try {
    if (!shared.config_path.empty()) {
      shared.config = load_run_config(shared.config_path);
    } else {
      apply_env_overrides(shared.config);
    }
    if (!handler) throw UsageError("no command given");
    handler();
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << json{{"command", command_path}, {"error", e.what()}}.dump() << "\n";
    return 1;
  }
}

}  // namespace scenemem::memctl
