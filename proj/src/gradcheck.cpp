#include "tcas/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tcas/error.hpp"

namespace tcas::nd {

namespace {

double evaluate(const LossFn& f) {
  Tape tape;
  return f(tape).value().item();
}

}  // namespace

GradCheckResult grad_check(const LossFn& f, const std::vector<Param*>& params, double step) {
  if (!(step > 0.0)) throw UsageError("grad_check: step must be positive");
  for (Param* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(f(tape));
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      const double hi = saved + step, lo = saved - step;
      p.value[i] = hi;
      const double up = evaluate(f);
      p.value[i] = lo;
      const double down = evaluate(f);
      p.value[i] = saved;

      // Divide by the representable displacement, not 2·step.
      const double numeric = (up - down) / (hi - lo);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return result;
}

}  // namespace tcas::nd
