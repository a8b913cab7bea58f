#pragma once

#include "tcas/tensor.hpp"

namespace tcas::train {

using nd::Tensor;
using nd::Var;

/// Weighted cross-entropy: -(1/K)·Σ_k w[k]·log softmax(z)[k]·y[k].
/// y must be one-hot; throws UsageError otherwise.
Var wce_loss(Var z, const Tensor& y, const Tensor& weights);
double wce_loss_value(const Tensor& z, const Tensor& y, const Tensor& weights);

Tensor one_hot(std::size_t cls, std::size_t classes);

struct LossWeights {
  double cav = 0.3;
  double tca = 0.7;
};

/// λ1·l_cav + λ2·l_tca
Var total_loss(Var l_cav, Var l_tca, const LossWeights& weights);
double total_loss(double l_cav, double l_tca, const LossWeights& weights);

}  // namespace tcas::train
