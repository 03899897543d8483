#include "scenemem/gamelab/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "scenemem/common/rng.hpp"
#include "scenemem/common/text_io.hpp"
#include "scenemem/evalstats/rank.hpp"

namespace scenemem::gamelab {

VigilanceVerdict vigilance_filter(const SessionLog& log, const VigilanceThresholds& thresholds) {
  VigilanceVerdict v;
  for (const auto& slot : collate(log)) {
    if (!slot.response) continue;
    const bool pressed = counts_as_press(*slot.response, log.timing);
    if (slot.stimulus.exposure == Exposure::first) {
      ++v.first_exposures;
      v.false_alarms += pressed;
    } else if (slot.stimulus.role == Role::vigilance) {
      ++v.vigilance_repeats;
      v.vigilance_hits += pressed;
    }
  }
  if (v.vigilance_repeats == 0) {
    v.reason = "no vigilance repeats";
    return v;
  }
  v.hit_rate = static_cast<double>(v.vigilance_hits) / v.vigilance_repeats;
  v.false_alarm_rate =
      v.first_exposures ? static_cast<double>(v.false_alarms) / v.first_exposures : 0.0;
  if (v.hit_rate < thresholds.min_hit_rate) {
    v.reason = "vigilance";
  } else if (v.false_alarm_rate > thresholds.max_false_alarm_rate) {
    v.reason = "false_alarms";
  } else {
    v.pass = true;
  }
  return v;
}

const ScoreRow* ScoreTable::find(const std::string& image_id) const {
  const auto it = std::lower_bound(rows.begin(), rows.end(), image_id,
                                   [](const ScoreRow& r, const std::string& id) {
                                     return r.image_id < id;
                                   });
  return it != rows.end() && it->image_id == image_id ? &*it : nullptr;
}

ScoreTable score_images(const std::vector<SessionLog>& logs, const ScoringConfig& config) {
  if (config.horizon < 1) throw std::invalid_argument("score_images: T must be >= 1");

  // (image, interval, hit) for every answered target repeat; sorted so every
  // floating-point sum below runs in a canonical order.
  std::vector<std::tuple<std::string, int, int>> exposures;
  std::set<std::string> targets;
  for (const auto& log : logs) {
    std::map<std::string, int> first_slot;
    for (const auto& slot : collate(log)) {
      const auto& s = slot.stimulus;
      if (s.role != Role::target) continue;
      targets.insert(s.image_id);
      if (s.exposure == Exposure::first) {
        first_slot.emplace(s.image_id, s.slot_index);
        continue;
      }
      const auto first = first_slot.find(s.image_id);
      if (first == first_slot.end() || !slot.response) continue;
      exposures.emplace_back(s.image_id, s.slot_index - first->second,
                             counts_as_press(*slot.response, log.timing) ? 1 : 0);
    }
  }
  std::sort(exposures.begin(), exposures.end());

  ScoreTable table;
  table.horizon = config.horizon;
  if (config.fixed_decay_alpha) {
    table.decay_alpha = *config.fixed_decay_alpha;
  } else if (exposures.size() >= 2) {
    const double n = static_cast<double>(exposures.size());
    double mean_x = 0.0, mean_h = 0.0;
    for (const auto& [_, interval, hit] : exposures) {
      mean_x += std::log(static_cast<double>(interval));
      mean_h += hit;
    }
    mean_x /= n;
    mean_h /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [_, interval, hit] : exposures) {
      const double dx = std::log(static_cast<double>(interval)) - mean_x;
      sxy += dx * (hit - mean_h);
      sxx += dx * dx;
    }
    table.decay_alpha = sxx > 0.0 ? sxy / sxx : 0.0;
  }

  const double log_t = std::log(static_cast<double>(config.horizon));
  std::set<std::string> scored;
  for (std::size_t i = 0; i < exposures.size();) {
    ScoreRow row;
    row.image_id = std::get<0>(exposures[i]);
    double sum_log = 0.0;
    for (; i < exposures.size() && std::get<0>(exposures[i]) == row.image_id; ++i) {
      const int interval = std::get<1>(exposures[i]);
      row.intervals.push_back(interval);
      row.n_hits += std::get<2>(exposures[i]);
      sum_log += std::log(static_cast<double>(interval));
    }
    row.n_repeat_views = static_cast<int>(row.intervals.size());
    row.raw_hit_rate = static_cast<double>(row.n_hits) / row.n_repeat_views;
    const double mean_log = sum_log / row.n_repeat_views;
    row.score_t = std::clamp(row.raw_hit_rate + table.decay_alpha * (log_t - mean_log), 0.0, 1.0);
    scored.insert(row.image_id);
    table.rows.push_back(std::move(row));
  }
  for (const auto& id : targets) {
    if (!scored.contains(id)) table.excluded.push_back(id);
  }
  return table;
}

std::string scores_csv(const ScoreTable& table) {
  std::ostringstream out;
  out << "image_id,n_views,n_hits,raw_hit_rate,score_T\n" << std::fixed << std::setprecision(6);
  for (const auto& r : table.rows) {
    out << r.image_id << ',' << r.n_repeat_views << ',' << r.n_hits << ',' << r.raw_hit_rate << ','
        << r.score_t << '\n';
  }
  return out.str();
}

void save_scores(const std::filesystem::path& path, const ScoreTable& table) {
  write_text_file(path, scores_csv(table));
}

std::vector<std::pair<std::string, double>> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scores: " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto column = std::find(header.begin(), header.end(), "score_T");
  if (header.empty() || header[0] != "image_id" || column == header.end()) {
    throw std::runtime_error(path.string() + ": expected image_id,...,score_T header");
  }
  const auto score_col = static_cast<std::size_t>(column - header.begin());
  std::vector<std::pair<std::string, double>> scores;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() <= score_col) {
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": short row");
    }
    scores.emplace_back(cells[0], std::stod(cells[score_col]));
  }
  return scores;
}

ConsistencyResult split_half_consistency(const std::vector<SessionLog>& logs, int repeats,
                                         std::uint64_t seed, const ScoringConfig& config) {
  std::set<std::string> subject_set;
  for (const auto& log : logs) subject_set.insert(log.subject_id);
  if (subject_set.size() < 2) {
    throw std::invalid_argument("split_half_consistency: need at least 2 subjects");
  }
  if (repeats < 1) throw std::invalid_argument("split_half_consistency: repeats must be >= 1");

  const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  Rng rng(seed);
  ConsistencyResult result;
  for (int r = 0; r < repeats; ++r) {
    auto order = subjects;
    rng.shuffle(order);
    const std::set<std::string> group_a(order.begin(), order.begin() + order.size() / 2);
    std::vector<SessionLog> logs_a, logs_b;
    for (const auto& log : logs) {
      (group_a.contains(log.subject_id) ? logs_a : logs_b).push_back(log);
    }
    const auto table_a = score_images(logs_a, config);
    const auto table_b = score_images(logs_b, config);
    std::vector<double> a, b;
    for (const auto& row : table_a.rows) {
      if (const auto* other = table_b.find(row.image_id)) {
        a.push_back(row.score_t);
        b.push_back(other->score_t);
      }
    }
    result.per_repeat.push_back(evalstats::srcc(a, b));
  }
  double sum = 0.0;
  for (double v : result.per_repeat) sum += v;
  result.mean_srcc = sum / static_cast<double>(result.per_repeat.size());
  return result;
}

}  // namespace scenemem::gamelab
