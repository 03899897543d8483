#include "scenemem/kernreg/cv.hpp"

#include <stdexcept>

#include "scenemem/common/rng.hpp"
#include "scenemem/evalstats/rank.hpp"

namespace scenemem::kernreg {

HyperGrid default_grid(std::size_t rbf_dim) {
  return {{0.1, 1.0, 10.0, 100.0},
          {0.001, 0.01, 0.05},
          {1.0 / static_cast<double>(std::max<std::size_t>(rbf_dim, 1)), 0.1, 1.0}};
}

std::vector<GridPoint> expand_grid(const HyperGrid& grid, const KernelSpec& kernel) {
  std::vector<std::optional<double>> gammas;
  if (uses_rbf(kernel)) {
    for (double g : grid.gamma) gammas.emplace_back(g);
  }
  if (gammas.empty()) gammas.emplace_back(std::nullopt);
  std::vector<GridPoint> points;
  for (double c : grid.C) {
    for (double e : grid.epsilon) {
      for (const auto& g : gammas) points.push_back({c, e, g});
    }
  }
  return points;
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = static_cast<int>(k % folds);
  return fold_of;
}

SvrParams apply_point(SvrParams params, const GridPoint& point) {
  params.C = point.C;
  params.epsilon = point.epsilon;
  if (point.gamma) params.kernel = with_gamma(params.kernel, *point.gamma);
  return params;
}

namespace {

double heldout_srcc(const std::vector<double>& pred, const std::vector<double>& truth) {
  try {
    return evalstats::srcc(pred, truth);
  } catch (const std::invalid_argument&) {
    return 0.0;  // constant predictions or targets
  }
}

bool better(const GridPoint& a, double score_a, const GridPoint& b, double score_b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.C != b.C) return a.C < b.C;
  const double ga = a.gamma.value_or(0.0), gb = b.gamma.value_or(0.0);
  if (ga != gb) return ga > gb;
  return a.epsilon < b.epsilon;
}

}  // namespace

CvResult grid_search_cv(const std::vector<std::vector<double>>& X, std::span<const double> y,
                        const KernelSpec& kernel, const std::vector<GridPoint>& grid, int folds,
                        std::uint64_t seed, const SvrParams& base) {
  if (folds < 2) throw std::invalid_argument("grid_search_cv: need at least 2 folds");
  if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
  if (X.size() != y.size()) throw std::invalid_argument("grid_search_cv: X and y differ in length");
  if (X.size() < 2 * static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("grid_search_cv: " + std::to_string(X.size()) + " samples give a fold with fewer than 2");
  }

  CvResult result;
  result.grid = grid;
  result.fold_of = fold_assignment(X.size(), folds, seed);
  result.fold_scores.assign(grid.size(), std::vector<double>(folds, 0.0));

  for (int f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<double> train_y, test_y;
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (result.fold_of[i] == f) {
        test_x.push_back(X[i]);
        test_y.push_back(y[i]);
      } else {
        train_x.push_back(X[i]);
        train_y.push_back(y[i]);
      }
    }
    for (std::size_t p = 0; p < grid.size(); ++p) {
      SvrParams params = apply_point(base, grid[p]);
      params.kernel = grid[p].gamma ? with_gamma(kernel, *grid[p].gamma) : kernel;
      const auto model = svr_train(train_x, train_y, params);
      result.fold_scores[p][f] = heldout_srcc(svr_predict(model, test_x), test_y);
    }
  }

  result.mean_scores.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double s = 0.0;
    for (double v : result.fold_scores[p]) s += v;
    result.mean_scores[p] = s / folds;
    if (p > 0 && better(grid[p], result.mean_scores[p], grid[result.best_index],
                        result.mean_scores[result.best_index])) {
      result.best_index = p;
    }
  }
  return result;
}

nlohmann::json to_json(const CvResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t p = 0; p < result.grid.size(); ++p) {
    const auto& g = result.grid[p];
    nlohmann::json j{{"C", g.C}, {"epsilon", g.epsilon}, {"mean_srcc", result.mean_scores[p]},
                     {"fold_srcc", result.fold_scores[p]}};
    if (g.gamma) j["gamma"] = *g.gamma;
    points.push_back(j);
  }
  nlohmann::json best = points.empty() ? nlohmann::json() : points[result.best_index];
  return {{"points", points}, {"best_index", result.best_index}, {"best", best}};
}

}  // namespace scenemem::kernreg
