#include "scenemem/neuralnet/loss.hpp"

#include <cmath>

#include "scenemem/neuralnet/layers.hpp"

namespace scenemem::neuralnet {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": prediction " + a.shape_string() + " vs target " +
                     b.shape_string());
  }
  if (a.rank() == 0 || a.dim(0) == 0) throw ShapeError(std::string(what) + ": empty batch");
}

}  // namespace

LossResult euclidean_loss(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "euclidean_loss");
  const double n = static_cast<double>(prediction.dim(0));
  LossResult r{0.0, Tensor(prediction.shape())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    r.loss += d * d;
    r.grad[i] = d / n;
  }
  r.loss /= 2.0 * n;
  return r;
}

LossResult weighted_sigmoid_ce(const Tensor& logits, const Tensor& labels,
                               const std::vector<double>& class_weights) {
  check_same_shape(logits, labels, "weighted_sigmoid_ce");
  if (logits.rank() != 2 || class_weights.size() != logits.dim(1)) {
    throw ShapeError("weighted_sigmoid_ce: need [N,K] logits and K class weights");
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  LossResult r{0.0, Tensor(logits.shape())};
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t i = b * k + c;
      const double z = logits[i], y = labels[i], w = class_weights[c];
      r.loss += y * w * softplus(-z) + (1.0 - y) * softplus(z);
      r.grad[i] = (-y * w * sigmoid(-z) + (1.0 - y) * sigmoid(z)) / static_cast<double>(n);
    }
  }
  r.loss /= static_cast<double>(n);
  return r;
}

LossResult sigmoid_ce(const Tensor& logits, const Tensor& labels) {
  check_same_shape(logits, labels, "sigmoid_ce");
  const std::size_t n = logits.dim(0);
  LossResult r{0.0, Tensor(logits.shape())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], y = labels[i];
    r.loss += y * softplus(-z) + (1.0 - y) * softplus(z);
    r.grad[i] = (-y * sigmoid(-z) + (1.0 - y) * sigmoid(z)) / static_cast<double>(n);
  }
  r.loss /= static_cast<double>(n);
  return r;
}

}  // namespace scenemem::neuralnet
