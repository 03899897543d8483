#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace scenemem::kernreg {

enum class KernelKind { linear, rbf, hik, sum };

struct KernelTerm;

// A base kernel, or a weighted sum of kernels. Each term of a sum may read a
// slice [offset, offset + length) of the input vectors (length 0 = the whole
// vector), so one model can combine kernels over concatenated features.
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double gamma = 0.0;  // rbf only
  std::vector<KernelTerm> terms;  // sum only

  static KernelSpec linear() { return {}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma, {}}; }
  static KernelSpec hik() { return {KernelKind::hik, 0.0, {}}; }
  // Equal weights 1/m over the given kernels, each on the whole vector.
  static KernelSpec equal_sum(const std::vector<KernelSpec>& parts);
};

struct KernelTerm {
  KernelSpec kernel;
  double weight = 1.0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

class KernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws KernelError for a malformed spec: negative or all-zero sum weights,
// non-positive or non-finite rbf gamma, an empty sum.
void validate(const KernelSpec& spec);

// linear: dot(x, y); rbf: exp(-gamma ||x - y||^2); hik: sum_i min(x_i, y_i);
// sum: sum_k w_k K_k(x[slice_k], y[slice_k]).
// Throws KernelError on a dimension mismatch, a slice past the end, or a
// negative input to an intersection kernel.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

// Full symmetric Gram matrix, row-major n x n. Only the upper triangle is
// evaluated; the lower one is mirrored, so symmetry is exact.
std::vector<double> gram_matrix(const KernelSpec& spec, const std::vector<std::vector<double>>& rows);

// True for every input dimension that some linear or rbf term reads and no
// intersection term does. Those dimensions are z-scored before training.
std::vector<bool> standardized_dims(const KernelSpec& spec, std::size_t dim);

// Replaces gamma in every rbf term.
KernelSpec with_gamma(const KernelSpec& spec, double gamma);
bool uses_rbf(const KernelSpec& spec);
// Dimension of the widest rbf slice (the whole vector when unsliced); used for gamma = 1/dim.
std::size_t rbf_dim(const KernelSpec& spec, std::size_t dim);

std::string to_string(KernelKind kind);
nlohmann::json to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace scenemem::kernreg
