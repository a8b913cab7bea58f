#include "tcas/loss.hpp"

#include <algorithm>
#include <cmath>

#include "tcas/error.hpp"
#include "tcas/ops.hpp"

namespace tcas::train {

namespace {

std::size_t checked_class(const Tensor& z, const Tensor& y, const Tensor& weights) {
  const std::size_t k = z.size();
  if (y.size() != k || weights.size() != k)
    throw DimensionError("wce_loss: logits, labels and weights must have the same length");
  std::size_t hot = k, ones = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (y[i] == 1.0) {
      hot = i;
      ++ones;
    } else if (y[i] != 0.0) {
      throw UsageError("wce_loss: label vector is not one-hot");
    }
    if (!(weights[i] > 0.0)) throw UsageError("wce_loss: class weights must be positive");
  }
  if (ones != 1) throw UsageError("wce_loss: label vector is not one-hot");
  return hot;
}

std::vector<double> softmax(const Tensor& z, double& log_norm) {
  const auto d = z.data();
  const double mx = *std::max_element(d.begin(), d.end());
  double total = 0.0;
  for (double v : d) total += std::exp(v - mx);
  log_norm = mx + std::log(total);
  std::vector<double> p(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) p[i] = std::exp(d[i] - log_norm);
  return p;
}

}  // namespace

double wce_loss_value(const Tensor& z, const Tensor& y, const Tensor& weights) {
  const std::size_t c = checked_class(z, y, weights);
  double log_norm = 0.0;
  softmax(z, log_norm);
  return -weights[c] * (z[c] - log_norm) / static_cast<double>(z.size());
}

Var wce_loss(Var z, const Tensor& y, const Tensor& weights) {
  const Tensor& zv = z.value();
  const std::size_t c = checked_class(zv, y, weights);
  double log_norm = 0.0;
  std::vector<double> p = softmax(zv, log_norm);
  const double k = static_cast<double>(zv.size());
  const double scale = weights[c] / k;
  const double loss = -scale * (zv[c] - log_norm);
  const std::size_t zi = z.id();
  return z.tape()->record(Tensor::scalar(loss), {zi}, [zi, c, scale, p = std::move(p)](nd::Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gz = t.grad(zi);
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g * scale * (p[i] - (i == c ? 1.0 : 0.0));
  });
}

Tensor one_hot(std::size_t cls, std::size_t classes) {
  if (cls >= classes) throw UsageError("one_hot: class " + std::to_string(cls) + " out of range");
  Tensor y({classes});
  y[cls] = 1.0;
  return y;
}

Var total_loss(Var l_cav, Var l_tca, const LossWeights& weights) {
  return nd::add(nd::scale(l_cav, weights.cav), nd::scale(l_tca, weights.tca));
}

double total_loss(double l_cav, double l_tca, const LossWeights& weights) {
  return weights.cav * l_cav + weights.tca * l_tca;
}

}  // namespace tcas::train
