#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "scenemem/kernreg/kernel.hpp"

namespace scenemem::kernreg {

// Per-dimension z-scoring with training-set statistics. Dimensions with
// active == false pass through unchanged (mean 0, scale 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<bool> active;

  std::size_t dim() const { return mean.size(); }
  std::vector<double> apply(std::span<const double> x) const;
};

// Population statistics over `rows`; a constant active dimension is only
// centred.
Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows, std::vector<bool> active);
Standardizer identity_standardizer(std::size_t dim);

// ---- dual solver -----------------------------------------------------------
//
// The epsilon-SVR dual, in minimization form:
//
//   min  1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - y' (a - a*)
//   s.t. sum(a - a*) = 0,  0 <= a, a* <= C
//
// solved by SMO over the 2n variables [a; a*], picking the maximal KKT
// violating pair each step. Stops when the violation gap is <= tol.

struct SolverOptions {
  double tol = 1e-4;
  std::int64_t max_iterations = 10'000'000;
};

struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> alpha_star;
  double bias = 0.0;  // f(x) = sum_i (alpha_i - alpha*_i) K(x_i, x) + bias
  double objective = 0.0;
  double max_violation = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;

  double coef(std::size_t i) const { return alpha[i] - alpha_star[i]; }
};

// `gram` is row-major n x n and must be symmetric.
DualSolution solve_svr_dual(std::span<const double> gram, std::span<const double> y, double C,
                            double epsilon, const SolverOptions& options = {});

// Objective above evaluated at (alpha, alpha_star).
double svr_dual_objective(std::span<const double> gram, std::span<const double> y,
                          std::span<const double> alpha, std::span<const double> alpha_star,
                          double epsilon);

// ---- model -----------------------------------------------------------------

struct SvrParams {
  KernelSpec kernel;
  double C = 1.0;
  double epsilon = 0.01;
  double tol = 1e-4;
  std::int64_t max_iterations = 10'000'000;
  // z-score the dimensions consumed by linear/rbf terms (see standardized_dims)
  bool standardize = true;
};

struct SvrDiagnostics {
  std::int64_t iterations = 0;
  bool converged = false;
  double max_violation = 0.0;
  double objective = 0.0;
  std::size_t n_support = 0;
  std::size_t n_bounded = 0;  // support vectors with |coef| == C
};

struct SvrModel {
  KernelSpec kernel;
  Standardizer standardizer;
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> dual_coeffs;
  double bias = 0.0;
  double C = 1.0;
  double epsilon = 0.0;
  SvrDiagnostics diagnostics;

  std::size_t dim() const { return standardizer.dim(); }
};

class SvrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument for bad shapes or parameters, and
// std::domain_error for non-finite targets or kernel values. Failure to
// converge is not an error: diagnostics.converged is false.
SvrModel svr_train(const std::vector<std::vector<double>>& X, std::span<const double> y,
                   const SvrParams& params);

double svr_predict(const SvrModel& model, std::span<const double> x);
std::vector<double> svr_predict(const SvrModel& model, const std::vector<std::vector<double>>& X);

// Writes <path> (JSON: kernel, hyperparameters, bias, diagnostics) and a
// sibling <path stem>.bin holding the standardization statistics, support
// vectors and dual coefficients as float64.
void save_svr_model(const std::filesystem::path& path, const SvrModel& model);
SvrModel load_svr_model(const std::filesystem::path& path);

}  // namespace scenemem::kernreg
