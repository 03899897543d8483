#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "scenemem/kernreg/svr.hpp"

namespace scenemem::kernreg {

struct GridPoint {
  double C = 1.0;
  double epsilon = 0.01;
  std::optional<double> gamma;  // only for kernels with an rbf term

  bool operator==(const GridPoint&) const = default;
};

struct HyperGrid {
  std::vector<double> C;
  std::vector<double> epsilon;
  std::vector<double> gamma;  // ignored for kernels without an rbf term
};

// C in {0.1, 1, 10, 100}, epsilon in {0.001, 0.01, 0.05},
// gamma in {1/rbf_dim, 0.1, 1}.
HyperGrid default_grid(std::size_t rbf_dim);

// Cartesian product, C-major. Gamma is dropped (nullopt) when the kernel has
// no rbf term.
std::vector<GridPoint> expand_grid(const HyperGrid& grid, const KernelSpec& kernel);

struct CvResult {
  std::vector<GridPoint> grid;
  std::vector<std::vector<double>> fold_scores;  // [point][fold] held-out SRCC
  std::vector<double> mean_scores;
  std::vector<int> fold_of;  // fold index of every sample
  std::size_t best_index = 0;

  const GridPoint& best() const { return grid[best_index]; }
};

// Seeded assignment: a shuffled permutation dealt round-robin into folds.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

// k-fold cross-validation of every grid point by held-out SRCC. A fold whose
// predictions (or targets) are constant has an undefined SRCC and scores 0.
// The best point has the highest mean; ties go to the smallest C, then the
// largest gamma, then the smallest epsilon.
//
// Throws std::invalid_argument if folds < 2, the grid is empty, or some fold
// would hold fewer than 2 samples.
CvResult grid_search_cv(const std::vector<std::vector<double>>& X, std::span<const double> y,
                        const KernelSpec& kernel, const std::vector<GridPoint>& grid, int folds,
                        std::uint64_t seed, const SvrParams& base = {});

SvrParams apply_point(SvrParams params, const GridPoint& point);
nlohmann::json to_json(const CvResult& result);

}  // namespace scenemem::kernreg
