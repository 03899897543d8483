#include "scenemem/evalstats/category_stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace scenemem::evalstats {

std::vector<CategoryStat> category_stats(
    const std::vector<std::pair<std::string, double>>& scores,
    const std::map<std::string, std::set<int>>& categories,
    const std::vector<std::string>& category_names) {
  std::map<int, std::vector<double>> members;
  for (const auto& [image_id, score] : scores) {
    const auto it = categories.find(image_id);
    if (it == categories.end() || it->second.empty()) {
      throw std::invalid_argument("category_stats: image without category: " + image_id);
    }
    for (int category : it->second) {
      if (category < 0 || static_cast<std::size_t>(category) >= category_names.size()) {
        throw std::invalid_argument("category_stats: unknown category id " +
                                    std::to_string(category));
      }
      members[category].push_back(score);
    }
  }

  std::vector<CategoryStat> stats;
  stats.reserve(members.size());
  for (const auto& [category, values] : members) {
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    stats.push_back({category, category_names[static_cast<std::size_t>(category)], mean,
                     std::sqrt(sq / n), values.size()});
  }
  std::sort(stats.begin(), stats.end(), [](const CategoryStat& x, const CategoryStat& y) {
    if (x.mean != y.mean) return x.mean > y.mean;
    return x.category_id < y.category_id;
  });
  return stats;
}

std::string category_stats_csv(const std::vector<CategoryStat>& stats) {
  std::ostringstream out;
  out << "category,mean,sd,count\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& s : stats) {
    out << s.name << ',' << s.mean << ',' << s.sd << ',' << s.count << '\n';
  }
  return out.str();
}

}  // namespace scenemem::evalstats
