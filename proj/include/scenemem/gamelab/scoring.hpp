#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenemem/gamelab/session_log.hpp"

namespace scenemem::gamelab {

struct VigilanceThresholds {
  double min_hit_rate = 0.5;          // on vigilance repeats
  double max_false_alarm_rate = 0.4;  // on first exposures
};

struct VigilanceVerdict {
  bool pass = false;
  std::string reason;  // empty on pass
  int vigilance_repeats = 0;
  int vigilance_hits = 0;
  int first_exposures = 0;
  int false_alarms = 0;
  double hit_rate = 0.0;
  double false_alarm_rate = 0.0;
};

// Attention check on one session: fails when the subject caught too few
// vigilance repeats or pressed on too many first exposures. A log without any
// answered vigilance repeat fails with reason "no vigilance repeats".
VigilanceVerdict vigilance_filter(const SessionLog& log, const VigilanceThresholds& thresholds = {});

struct ScoringConfig {
  // Regularization horizon, in images.
  int horizon = 100;
  // Overrides the fitted decay slope when set.
  std::optional<double> fixed_decay_alpha;
};

struct ScoreRow {
  std::string image_id;
  int n_repeat_views = 0;
  int n_hits = 0;
  double raw_hit_rate = 0.0;
  std::vector<int> intervals;  // repeat - first slot gaps, sorted
  double score_t = 0.0;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;  // sorted by image_id
  int horizon = 100;
  double decay_alpha = 0.0;
  // Targets seen only as first exposures; they get no score.
  std::vector<std::string> excluded;

  const ScoreRow* find(const std::string& image_id) const;
};

// Converts repeat-detection outcomes of target images into memorability
// scores corrected to a common repeat delay T.
//
// The decay slope alpha is one least-squares fit, over every target repeat
// exposure, of the hit outcome (0/1) against log(interval). Each image then
// scores
//   clamp(raw_hit_rate + alpha * (log T - mean log interval), 0, 1).
// With every interval equal to T the correction vanishes.
//
// The result does not depend on the order of `logs`.
ScoreTable score_images(const std::vector<SessionLog>& logs, const ScoringConfig& config = {});

// `scores.csv`: header `image_id,n_views,n_hits,raw_hit_rate,score_T`, reals
// with 6 decimals.
std::string scores_csv(const ScoreTable& table);
void save_scores(const std::filesystem::path& path, const ScoreTable& table);
// Reads image_id -> score_T pairs back from a scores.csv.
std::vector<std::pair<std::string, double>> load_scores(const std::filesystem::path& path);

struct ConsistencyResult {
  double mean_srcc = 0.0;
  std::vector<double> per_repeat;
};

// Human consistency: for each repeat, subjects are split at random into two
// halves, each half is scored on its own, and the SRCC between the halves
// (over images scored in both) is recorded.
//
// Throws std::invalid_argument with fewer than 2 distinct subjects.
ConsistencyResult split_half_consistency(const std::vector<SessionLog>& logs, int repeats,
                                         std::uint64_t seed, const ScoringConfig& config = {});

}  // namespace scenemem::gamelab
