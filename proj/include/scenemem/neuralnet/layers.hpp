#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenemem/common/rng.hpp"
#include "scenemem/neuralnet/tensor.hpp"

namespace scenemem::neuralnet {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by the NaN guard; layer_index is the position inside the
// Sequential that produced the first non-finite activation.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, int layer_index)
      : std::runtime_error(what), layer_index_(layer_index) {}
  int layer_index() const { return layer_index_; }

 private:
  int layer_index_;
};

// forward() caches whatever backward() needs; backward() accumulates into
// the parameter gradients and returns the gradient w.r.t. the input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual std::vector<Param*> params() { return {}; }
};

enum class InitScheme { he_uniform, fan_in_uniform };

// Square kernel, stride 1, zero padding kernel/2 ("same" output for odd
// kernels). Weights [out, in, k, k], bias [out].
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  std::string name() const override { return "conv2d"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(Rng& rng, InitScheme scheme);

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t in_, out_, k_;
  Param weight_, bias_;
  Tensor input_;
};

class Relu : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  Tensor input_;
};

// 2x2 window, stride 2; odd trailing rows/columns are dropped. The gradient
// goes to the first maximal element of each window.
class MaxPool2 : public Layer {
 public:
  std::string name() const override { return "maxpool2"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<std::size_t> argmax_;
};

// [N, C, H, W] -> [N, C]
class GlobalAvgPool : public Layer {
 public:
  std::string name() const override { return "global_avg_pool"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  std::vector<std::size_t> input_shape_;
};

// [N, in] -> [N, out]; weight [out, in].
class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);
  std::string name() const override { return "dense"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(Rng& rng, InitScheme scheme);

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  std::size_t in_, out_;
  Param weight_, bias_;
  Tensor input_;
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  // Throws NonFiniteError naming the first layer whose output is not finite.
  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output);
  std::vector<Param*> params();

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

void zero_grads(const std::vector<Param*>& params);

}  // namespace scenemem::neuralnet
