#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "scenemem/common/rng.hpp"
#include "scenemem/evalstats/category_stats.hpp"
#include "scenemem/evalstats/rank.hpp"

using namespace scenemem;
using namespace scenemem::evalstats;

TEST(Ranks, TiesShareTheMeanPosition) {
  const std::vector<double> x{10, 20, 20, 5, 20};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{2, 4, 4, 1, 4}));
}

TEST(Ranks, SumToTriangularNumber) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30);
    std::vector<double> x(n);
    for (auto& v : x) v = static_cast<double>(rng.uniform_index(5));
    double s = 0;
    for (double r : average_ranks(x)) s += r;
    EXPECT_DOUBLE_EQ(s, n * (n + 1) / 2.0);
  }
}

TEST(Srcc, KnownValues) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(srcc(a, a), 1.0);
  EXPECT_DOUBLE_EQ(srcc(a, rev), -1.0);
  // monotone transforms do not change ranks
  const std::vector<double> cubed{1, 8, 27, 64, 125};
  EXPECT_DOUBLE_EQ(srcc(a, cubed), 1.0);
  // rank deviations (-1.5 -0.5 0.5 1.5) and (-1.5 0 0 1.5)
  const std::vector<double> x{1, 2, 3, 4}, y{1, 2, 2, 3};
  EXPECT_NEAR(srcc(x, y), 4.5 / std::sqrt(5.0 * 4.5), 1e-15);
}

TEST(Srcc, MatchesDefinitionOracleOnRandomTiedData) {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(25);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = static_cast<double>(rng.uniform_index(6));
    for (auto& v : b) v = rng.bernoulli(0.5) ? rng.normal() : static_cast<double>(rng.uniform_index(3));
    bool ca = true, cb = true;
    for (std::size_t i = 1; i < n; ++i) {
      ca &= a[i] == a[0];
      cb &= b[i] == b[0];
    }
    if (ca || cb) {
      EXPECT_THROW(srcc(a, b), std::invalid_argument);
      continue;
    }
    EXPECT_NEAR(srcc(a, b), testkit::definition_srcc(a, b), 1e-12);
  }
}

TEST(Srcc, SymmetricAndBounded) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(20);
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    const double r = srcc(a, b);
    EXPECT_DOUBLE_EQ(r, srcc(b, a));
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(Srcc, ErrorContract) {
  const std::vector<double> a{1, 2, 3}, c{2, 2, 2}, shorter{1, 2};
  const std::vector<double> one{1};
  const std::vector<double> nan{1, std::numeric_limits<double>::quiet_NaN(), 3};
  EXPECT_THROW(srcc(a, c), std::invalid_argument);
  EXPECT_THROW(srcc(a, shorter), std::invalid_argument);
  EXPECT_THROW(srcc(one, one), std::invalid_argument);
  EXPECT_THROW(srcc(a, nan), std::invalid_argument);
  EXPECT_THROW(pearson(a, c), std::invalid_argument);
}

TEST(Pearson, KnownValue) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 5, 9};
  // deviations (-1.5 -0.5 0.5 1.5) and (-3 -1 0 4): sum products 11, squares 5 and 26
  EXPECT_NEAR(pearson(x, y), 11.0 / std::sqrt(5.0 * 26.0), 1e-15);
}

TEST(CategoryStats, MeanAndPopulationSd) {
  const std::vector<std::pair<std::string, double>> scores{{"a", 0.2}, {"b", 0.6}, {"c", 0.9}};
  const std::map<std::string, std::set<int>> cats{{"a", {0}}, {"b", {0, 1}}, {"c", {1}}};
  const auto stats = category_stats(scores, cats, {"kitchen", "beach", "unused"});
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].name, "beach");
  EXPECT_NEAR(stats[0].mean, 0.75, 1e-15);
  EXPECT_NEAR(stats[0].sd, 0.15, 1e-15);
  EXPECT_EQ(stats[0].count, 2u);
  EXPECT_NEAR(stats[1].mean, 0.4, 1e-15);
  EXPECT_NEAR(stats[1].sd, 0.2, 1e-15);
  const auto csv = category_stats_csv(stats);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "category,mean,sd,count");
}

TEST(CategoryStats, RejectsUnlabelledImages) {
  const std::vector<std::pair<std::string, double>> scores{{"a", 0.2}};
  EXPECT_THROW(category_stats(scores, {}, {"x"}), std::invalid_argument);
  EXPECT_THROW(category_stats(scores, {{"a", {3}}}, {"x"}), std::invalid_argument);
}
