#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tcas/tensor.hpp"

namespace tcas::nd {

/// Builds a scalar loss on the given tape. Must be deterministic: it is
/// evaluated once for analytic gradients and twice per perturbed element.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences.
/// Relative error per element is |a - n| / max(|a|, |n|, 1e-12).
GradCheckResult grad_check(const LossFn& f, const std::vector<Param*>& params, double step = 1e-6);

}  // namespace tcas::nd
