#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tcas/tensor.hpp"

namespace tcas::train {

struct AdamOptions {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  /// false: L2 term added to the gradient (classic Adam); true: AdamW-style.
  bool decoupled = false;
};

struct AdamState {
  std::vector<nd::Tensor> m;
  std::vector<nd::Tensor> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update from each param's accumulated grad.
void adam_step(std::span<nd::Param* const> params, AdamState& state, const AdamOptions& options);

}  // namespace tcas::train
