#pragma once

#include <vector>

#include "scenemem/neuralnet/tensor.hpp"

namespace scenemem::neuralnet {

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d prediction, same shape as the prediction
};

// L = 1/(2N) sum_n sum_d (p - t)^2 over a batch of N rows.
LossResult euclidean_loss(const Tensor& prediction, const Tensor& target);

// Multi-label cross-entropy on logits z with labels y in {0, 1}:
//   L = 1/N sum_n sum_k [ w_k y log(1 + e^-z) + (1 - y) log(1 + e^z) ]
// w_k scales the positive term of class k.
LossResult weighted_sigmoid_ce(const Tensor& logits, const Tensor& labels,
                               const std::vector<double>& class_weights);
// Same with every weight 1.
LossResult sigmoid_ce(const Tensor& logits, const Tensor& labels);

// log(1 + e^z) without overflow.
double softplus(double z);
double sigmoid(double z);

}  // namespace scenemem::neuralnet
