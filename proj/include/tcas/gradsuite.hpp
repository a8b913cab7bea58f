#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcas/gradcheck.hpp"

namespace tcas::train {

struct GradSuiteOptions {
  std::uint64_t seed = 42;
  double step = 1e-6;
  std::size_t frames = 6;
  std::size_t channels = 4;
  std::size_t classes = 3;
  std::size_t batch = 4;
};

struct GradSuiteEntry {
  std::string name;
  nd::GradCheckResult result;
};

/// Finite-difference checks of every differentiable op, each model
/// component, and the full training loss on a small batch.
std::vector<GradSuiteEntry> run_gradient_suite(const GradSuiteOptions& options = {});

double max_error(const std::vector<GradSuiteEntry>& entries);

}  // namespace tcas::train
