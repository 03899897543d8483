#pragma once

#include <cstdint>
#include <vector>

#include "scenemem/neuralnet/layers.hpp"

namespace scenemem::neuralnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update to every parameter from its .grad and advances t.
  // The parameter list must be the same (same order and shapes) every call.
  void step(const std::vector<Param*>& params);

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  // Moment buffers, one per parameter in step() order.
  std::vector<std::vector<double>>& m() { return m_; }
  std::vector<std::vector<double>>& v() { return v_; }
  void restore(std::int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace scenemem::neuralnet
