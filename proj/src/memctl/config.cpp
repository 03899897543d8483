#include "scenemem/memctl/config.hpp"

#include <cstdlib>
#include <set>
#include <stdexcept>

#include "scenemem/common/text_io.hpp"

namespace scenemem::memctl {

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void apply_env_overrides(RunConfig& config, const EnvLookup& env) {
  if (const auto port = env("MEMCTL_PORT")) {
    try {
      std::size_t used = 0;
      const int p = std::stoi(*port, &used);
      if (used != port->size() || p < 0 || p > 65535) throw std::out_of_range("port");
      config.port = p;
    } catch (const std::exception&) {
      throw std::runtime_error("MEMCTL_PORT is not a valid port: " + *port);
    }
  }
  if (const auto dir = env("MEMCTL_DATA_DIR")) config.data_dir = *dir;
}

namespace {

std::filesystem::path resolve(const nlohmann::json& j, const char* key, const std::filesystem::path& base,
                              bool must_exist) {
  if (!j.contains(key)) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  if (p.is_relative()) p = base / p;
  if (must_exist && !std::filesystem::exists(p)) {
    throw std::runtime_error(std::string("config key \"") + key + "\": path does not exist: " + p.string());
  }
  return p;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known{"manifest", "vocabulary", "levels_dir", "assignments", "ui_dir",
                                           "data_dir", "host", "port", "timing", "T", "vigilance",
                                           "feedback", "svr_grid", "cv_folds", "network", "training",
                                           "seed"};
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::runtime_error("unknown config key \"" + key + "\"");
  }
  RunConfig c;
  try {
    c.manifest = resolve(j, "manifest", base_dir, true);
    c.vocabulary = resolve(j, "vocabulary", base_dir, true);
    c.levels_dir = resolve(j, "levels_dir", base_dir, true);
    c.assignments = resolve(j, "assignments", base_dir, true);
    c.ui_dir = resolve(j, "ui_dir", base_dir, true);
    c.data_dir = j.contains("data_dir") ? resolve(j, "data_dir", base_dir, false) : base_dir / c.data_dir;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("timing")) {
      c.timing.display_ms = j["timing"].value("display_ms", c.timing.display_ms);
      c.timing.gap_ms = j["timing"].value("gap_ms", c.timing.gap_ms);
      if (c.timing.display_ms <= 0 || c.timing.gap_ms < 0) throw std::runtime_error("timing must be positive");
    }
    c.horizon = j.value("T", c.horizon);
    if (c.horizon <= 0) throw std::runtime_error("T must be positive");
    if (j.contains("vigilance")) {
      c.vigilance.min_hit_rate = j["vigilance"].value("min_hit_rate", c.vigilance.min_hit_rate);
      c.vigilance.max_false_alarm_rate =
          j["vigilance"].value("max_false_alarm_rate", c.vigilance.max_false_alarm_rate);
    }
    if (j.contains("feedback")) {
      c.feedback_vigilance_miss = j["feedback"].value("vigilance_miss", c.feedback_vigilance_miss);
      c.feedback_false_alarm = j["feedback"].value("false_alarm", c.feedback_false_alarm);
    }
    if (j.contains("svr_grid")) {
      const auto& g = j["svr_grid"];
      kernreg::HyperGrid grid = kernreg::default_grid(1);
      grid.C = g.value("C", grid.C);
      grid.epsilon = g.value("epsilon", grid.epsilon);
      grid.gamma = g.value("gamma", grid.gamma);
      c.svr_grid = grid;
    }
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    if (j.contains("network")) c.network = neuralnet::network_spec_from_json(j["network"]);
    if (j.contains("training")) {
      c.epochs = j["training"].value("epochs", c.epochs);
      c.batch_size = j["training"].value("batch_size", c.batch_size);
      c.lr = j["training"].value("lr", c.lr);
    }
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env) {
  RunConfig c = run_config_from_json(read_json_file(path), path.parent_path());
  apply_env_overrides(c, env);
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"data_dir", c.data_dir.string()},
                   {"host", c.host},
                   {"port", c.port},
                   {"timing", {{"display_ms", c.timing.display_ms}, {"gap_ms", c.timing.gap_ms}}},
                   {"T", c.horizon},
                   {"vigilance",
                    {{"min_hit_rate", c.vigilance.min_hit_rate},
                     {"max_false_alarm_rate", c.vigilance.max_false_alarm_rate}}},
                   {"feedback", {{"vigilance_miss", c.feedback_vigilance_miss}, {"false_alarm", c.feedback_false_alarm}}},
                   {"cv_folds", c.cv_folds},
                   {"network", neuralnet::to_json(c.network)},
                   {"training", {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}}},
                   {"seed", c.seed}};
  auto put = [&j](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) j[key] = p.string();
  };
  put("manifest", c.manifest);
  put("vocabulary", c.vocabulary);
  put("levels_dir", c.levels_dir);
  put("assignments", c.assignments);
  put("ui_dir", c.ui_dir);
  if (c.svr_grid) j["svr_grid"] = {{"C", c.svr_grid->C}, {"epsilon", c.svr_grid->epsilon}, {"gamma", c.svr_grid->gamma}};
  return j;
}

}  // namespace scenemem::memctl
