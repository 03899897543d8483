#include "scenemem/neuralnet/adam.hpp"

#include <cmath>

namespace scenemem::neuralnet {

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    const auto& grad = params[k]->grad;
    if (grad.size() != value.size() || m_[k].size() != value.size()) {
      throw ShapeError("adam: shape mismatch for parameter " + params[k]->name);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m_[k][i] = config_.beta1 * m_[k][i] + (1.0 - config_.beta1) * g;
      v_[k][i] = config_.beta2 * v_[k][i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m_[k][i] / c1;
      const double v_hat = v_[k][i] / c2;
      value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::restore(std::int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace scenemem::neuralnet
