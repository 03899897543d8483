#include "scenemem/neuralnet/layers.hpp"

#include <algorithm>
#include <cmath>

namespace scenemem::neuralnet {

namespace {

void init_uniform(Tensor& t, Rng& rng, double limit) {
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
}

double init_limit(InitScheme scheme, std::size_t fan_in) {
  const double f = static_cast<double>(fan_in);
  return scheme == InitScheme::he_uniform ? std::sqrt(6.0 / f) : 1.0 / std::sqrt(f);
}

void expect_rank(const Tensor& t, std::size_t rank, const char* layer) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(layer) + ": expected rank " + std::to_string(rank) + " input, got " +
                     t.shape_string());
  }
}

}  // namespace

void zero_grads(const std::vector<Param*>& params) {
  for (auto* p : params) p->grad.fill(0.0);
}

// ---- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : in_(in_channels), out_(out_channels), k_(kernel) {
  weight_ = {"weight", Tensor({out_, in_, k_, k_}), Tensor({out_, in_, k_, k_})};
  bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

void Conv2d::init(Rng& rng, InitScheme scheme) {
  init_uniform(weight_.value, rng, init_limit(scheme, in_ * k_ * k_));
  bias_.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& input) {
  expect_rank(input, 4, "conv2d");
  if (input.dim(1) != in_) {
    throw ShapeError("conv2d: expected " + std::to_string(in_) + " channels, got " + input.shape_string());
  }
  input_ = input;
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const long pad = static_cast<long>(k_ / 2);
  Tensor out({n, out_, h, w});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      double* dst = &out.at(b, o, 0, 0);
      std::fill(dst, dst + h * w, bias_.value[o]);
      for (std::size_t c = 0; c < in_; ++c) {
        const double* src = &input.at(b, c, 0, 0);
        for (std::size_t ky = 0; ky < k_; ++ky) {
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const double wv = weight_.value[((o * in_ + c) * k_ + ky) * k_ + kx];
            const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
            const long y0 = std::max(0L, -dy), y1 = std::min<long>(h, static_cast<long>(h) - dy);
            const long x0 = std::max(0L, -dx), x1 = std::min<long>(w, static_cast<long>(w) - dx);
            for (long y = y0; y < y1; ++y) {
              double* row = dst + y * w;
              const double* in_row = src + (y + dy) * static_cast<long>(w) + dx;
              for (long x = x0; x < x1; ++x) row[x] += wv * in_row[x];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_output) {
  const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  if (grad_output.shape() != std::vector<std::size_t>{n, out_, h, w}) {
    throw ShapeError("conv2d backward: gradient shape " + grad_output.shape_string());
  }
  const long pad = static_cast<long>(k_ / 2);
  Tensor grad_in(input_.shape());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < out_; ++o) {
      const double* g = &grad_output.at(b, o, 0, 0);
      double gsum = 0.0;
      for (std::size_t i = 0; i < h * w; ++i) gsum += g[i];
      bias_.grad[o] += gsum;
      for (std::size_t c = 0; c < in_; ++c) {
        const double* src = &input_.at(b, c, 0, 0);
        double* gin = &grad_in.at(b, c, 0, 0);
        for (std::size_t ky = 0; ky < k_; ++ky) {
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const std::size_t widx = ((o * in_ + c) * k_ + ky) * k_ + kx;
            const double wv = weight_.value[widx];
            const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
            const long y0 = std::max(0L, -dy), y1 = std::min<long>(h, static_cast<long>(h) - dy);
            const long x0 = std::max(0L, -dx), x1 = std::min<long>(w, static_cast<long>(w) - dx);
            double acc = 0.0;
            for (long y = y0; y < y1; ++y) {
              const double* grow = g + y * static_cast<long>(w);
              const long off = (y + dy) * static_cast<long>(w) + dx;
              const double* in_row = src + off;
              double* gin_row = gin + off;
              for (long x = x0; x < x1; ++x) {
                acc += grow[x] * in_row[x];
                gin_row[x] += wv * grow[x];
              }
            }
            weight_.grad[widx] += acc;
          }
        }
      }
    }
  }
  return grad_in;
}

// ---- Relu --------------------------------------------------------------------

Tensor Relu::forward(const Tensor& input) {
  input_ = input;
  Tensor out = input;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::backward(const Tensor& grad_output) {
  if (grad_output.size() != input_.size()) throw ShapeError("relu backward: size mismatch");
  Tensor grad = grad_output;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(input_[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

// ---- MaxPool2 ----------------------------------------------------------------

Tensor MaxPool2::forward(const Tensor& input) {
  expect_rank(input, 4, "maxpool2");
  input_shape_ = input.shape();
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2) / 2, w = input.dim(3) / 2;
  if (h == 0 || w == 0) throw ShapeError("maxpool2: input smaller than 2x2: " + input.shape_string());
  Tensor out({n, c, h, w});
  argmax_.assign(out.size(), 0);
  std::size_t k = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x, ++k) {
          double best = input.at(b, ch, 2 * y, 2 * x);
          std::size_t best_idx = ((b * c + ch) * input.dim(2) + 2 * y) * input.dim(3) + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((b * c + ch) * input.dim(2) + 2 * y + dy) * input.dim(3) + 2 * x + dx;
              if (input[idx] > best) {
                best = input[idx];
                best_idx = idx;
              }
            }
          }
          out[k] = best;
          argmax_[k] = best_idx;
        }
      }
    }
  }
  return out;
}

Tensor MaxPool2::backward(const Tensor& grad_output) {
  if (grad_output.size() != argmax_.size()) throw ShapeError("maxpool2 backward: size mismatch");
  Tensor grad(input_shape_);
  for (std::size_t k = 0; k < argmax_.size(); ++k) grad[argmax_[k]] += grad_output[k];
  return grad;
}

// ---- GlobalAvgPool -------------------------------------------------------------

Tensor GlobalAvgPool::forward(const Tensor& input) {
  expect_rank(input, 4, "global_avg_pool");
  input_shape_ = input.shape();
  const std::size_t n = input.dim(0), c = input.dim(1), area = input.dim(2) * input.dim(3);
  Tensor out({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < area; ++j) s += input[i * area + j];
    out[i] = s / static_cast<double>(area);
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_output) {
  Tensor grad(input_shape_);
  const std::size_t area = input_shape_[2] * input_shape_[3];
  if (grad_output.size() * area != grad.size()) throw ShapeError("global_avg_pool backward: size mismatch");
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    const double g = grad_output[i] / static_cast<double>(area);
    for (std::size_t j = 0; j < area; ++j) grad[i * area + j] = g;
  }
  return grad;
}

// ---- Dense -------------------------------------------------------------------

Dense::Dense(std::size_t in_features, std::size_t out_features) : in_(in_features), out_(out_features) {
  weight_ = {"weight", Tensor({out_, in_}), Tensor({out_, in_})};
  bias_ = {"bias", Tensor({out_}), Tensor({out_})};
}

void Dense::init(Rng& rng, InitScheme scheme) {
  init_uniform(weight_.value, rng, init_limit(scheme, in_));
  bias_.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& input) {
  if (input.rank() != 2 || input.dim(1) != in_) {
    throw ShapeError("dense: expected [N," + std::to_string(in_) + "], got " + input.shape_string());
  }
  input_ = input;
  const std::size_t n = input.dim(0);
  Tensor out({n, out_});
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = &input.at(b, 0);
    for (std::size_t o = 0; o < out_; ++o) {
      const double* wrow = &weight_.value[o * in_];
      double s = bias_.value[o];
      for (std::size_t i = 0; i < in_; ++i) s += wrow[i] * x[i];
      out.at(b, o) = s;
    }
  }
  return out;
}

Tensor Dense::backward(const Tensor& grad_output) {
  const std::size_t n = input_.dim(0);
  if (grad_output.shape() != std::vector<std::size_t>{n, out_}) {
    throw ShapeError("dense backward: gradient shape " + grad_output.shape_string());
  }
  Tensor grad_in({n, in_});
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = &input_.at(b, 0);
    double* gx = &grad_in.at(b, 0);
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = grad_output.at(b, o);
      if (g == 0.0) continue;
      bias_.grad[o] += g;
      double* gw = &weight_.grad[o * in_];
      const double* wrow = &weight_.value[o * in_];
      for (std::size_t i = 0; i < in_; ++i) {
        gw[i] += g * x[i];
        gx[i] += g * wrow[i];
      }
    }
  }
  return grad_in;
}

// ---- Sequential ----------------------------------------------------------------

Tensor Sequential::forward(const Tensor& input) {
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x);
    if (!x.all_finite()) {
      throw NonFiniteError("non-finite activation after layer " + std::to_string(i) + " (" +
                               layers_[i]->name() + ")",
                           static_cast<int>(i));
    }
  }
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    for (auto* p : layer->params()) out.push_back(p);
  }
  return out;
}

}  // namespace scenemem::neuralnet
