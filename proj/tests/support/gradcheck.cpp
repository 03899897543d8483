#include "gradcheck.hpp"

#include "oracles.hpp"

namespace scenemem::testkit {

using neuralnet::Param;
using neuralnet::Tensor;

namespace {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n > limit) {
    rng.shuffle(idx);
    idx.resize(limit);
  }
  return idx;
}

}  // namespace

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double scale, double margin) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.normal() * scale;
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
    t[i] = v;
  }
  return t;
}

GradCheck check_gradients(const std::function<Tensor(const Tensor&)>& forward,
                          const std::function<Tensor(const Tensor&)>& backward,
                          const std::vector<Param*>& params, Tensor input, Rng& rng, double h,
                          std::size_t max_per_tensor) {
  const Tensor out = forward(input);
  const Tensor r = random_tensor(out.shape(), rng);
  neuralnet::zero_grads(params);
  const Tensor grad_input = backward(r);
  std::vector<Tensor> grads;
  for (auto* p : params) grads.push_back(p->grad);

  auto loss = [&] {
    const Tensor o = forward(input);
    long double s = 0;
    for (std::size_t i = 0; i < o.size(); ++i) s += static_cast<long double>(r[i]) * o[i];
    return static_cast<double>(s);
  };

  GradCheck result;
  auto compare = [&](double& coordinate, double analytic, const std::string& label) {
    const double orig = coordinate;
    coordinate = orig + h;
    const double up = loss();
    coordinate = orig - h;
    const double down = loss();
    coordinate = orig;
    const double err = relative_error(analytic, (up - down) / (2 * h));
    ++result.checked;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst = label;
    }
  };
  for (std::size_t i : sample_indices(input.size(), max_per_tensor, rng)) {
    compare(input[i], grad_input[i], "input[" + std::to_string(i) + "]");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i : sample_indices(params[k]->value.size(), max_per_tensor, rng)) {
      compare(params[k]->value[i], grads[k][i], params[k]->name + "[" + std::to_string(i) + "]");
    }
  }
  return result;
}

GradCheck check_layer(neuralnet::Layer& layer, const Tensor& input, Rng& rng, double h) {
  return check_gradients([&](const Tensor& x) { return layer.forward(x); },
                         [&](const Tensor& g) { return layer.backward(g); }, layer.params(), input, rng, h);
}

}  // namespace scenemem::testkit
