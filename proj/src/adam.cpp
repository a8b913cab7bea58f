#include "tcas/adam.hpp"

#include <cmath>

#include "tcas/error.hpp"

namespace tcas::train {

void adam_step(std::span<nd::Param* const> params, AdamState& state, const AdamOptions& o) {
  if (state.m.empty()) {
    for (const nd::Param* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state tracks a different parameter list");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    nd::Param& p = *params[i];
    if (p.grad.shape() != p.value.shape() || state.m[i].shape() != p.value.shape())
      throw DimensionError("adam_step: shape mismatch for " + p.name);
    auto w = p.value.data();
    const auto g = p.grad.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      double grad = g[j];
      if (!o.decoupled) grad += o.weight_decay * w[j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * grad;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * grad * grad;
      const double update = (m[j] / bc1) / (std::sqrt(v[j] / bc2) + o.eps);
      if (o.decoupled) w[j] -= o.lr * o.weight_decay * w[j];
      w[j] -= o.lr * update;
    }
  }
}

}  // namespace tcas::train
