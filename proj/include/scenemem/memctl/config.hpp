#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "scenemem/gamelab/scoring.hpp"
#include "scenemem/gamelab/session_log.hpp"
#include "scenemem/kernreg/cv.hpp"
#include "scenemem/neuralnet/model.hpp"
#include "scenemem/neuralnet/train.hpp"

namespace scenemem::memctl {

// Every key of the config file, with its default. Relative paths resolve
// against the config file's directory.
struct RunConfig {
  std::filesystem::path manifest;      // "manifest": corpus manifest; optional
  std::filesystem::path vocabulary;    // "vocabulary": category names; optional
  std::filesystem::path levels_dir;    // "levels_dir": level_*.json for serve; optional
  std::filesystem::path assignments;   // "assignments": {subject_id: level_id}; optional
  std::filesystem::path ui_dir;        // "ui_dir": static client bundle; optional
  std::filesystem::path data_dir = "data";  // "data_dir": session logs; created on demand

  std::string host = "127.0.0.1";
  int port = 8080;

  gamelab::Timing timing;                    // "timing": {display_ms: 1000, gap_ms: 770}
  int horizon = 100;                         // "T"
  gamelab::VigilanceThresholds vigilance;    // "vigilance": {min_hit_rate: 0.5, max_false_alarm_rate: 0.4}
  bool feedback_vigilance_miss = true;       // "feedback": {vigilance_miss: true, false_alarm: false}
  bool feedback_false_alarm = false;

  std::optional<kernreg::HyperGrid> svr_grid;  // "svr_grid": {C:[], epsilon:[], gamma:[]}; default grid if absent
  int cv_folds = 5;                            // "cv_folds"

  neuralnet::NetworkSpec network;   // "network": see NetworkSpec
  std::size_t epochs = 100;         // "training": {epochs, batch_size, lr}
  std::size_t batch_size = 32;
  double lr = 1e-3;

  std::uint64_t seed = 1;  // "seed"
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// MEMCTL_PORT and MEMCTL_DATA_DIR override the file values.
void apply_env_overrides(RunConfig& config, const EnvLookup& env = process_env);

// Parses the JSON config. Unknown keys are rejected; every referenced path
// except data_dir must exist. Throws std::runtime_error naming the key.
RunConfig load_run_config(const std::filesystem::path& path, const EnvLookup& env = process_env);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const RunConfig& config);

}  // namespace scenemem::memctl
