#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace scenemem::evalstats {

struct CategoryStat {
  int category_id = 0;
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t count = 0;
};

// Mean and population SD of the scores of every category that has at least
// one scored member. An image contributes to each category it carries. The
// result is sorted by descending mean, ties by category id.
//
// Throws std::invalid_argument if a scored image has no category or a
// category id has no name.
std::vector<CategoryStat> category_stats(
    const std::vector<std::pair<std::string, double>>& scores,
    const std::map<std::string, std::set<int>>& categories,
    const std::vector<std::string>& category_names);

// CSV with header `category,mean,sd,count`, one row per category.
std::string category_stats_csv(const std::vector<CategoryStat>& stats);

}  // namespace scenemem::evalstats
