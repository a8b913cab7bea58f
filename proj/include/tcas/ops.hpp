#pragma once

// Differentiable ops over Tape variables. Matrices are rank-2 row-major;
// "row vector" arguments accept shape {n} or {1, n}.

#include <cstddef>

#include "tcas/rng.hpp"
#include "tcas/tensor.hpp"

namespace tcas::nd {

enum class Mode { train, eval };

/// A(m×n) · B(n×p)
Var matmul(Var a, Var b);
/// A(n×m)ᵀ · B(n×p)
Var matmul_tn(Var a, Var b);
Var transpose(Var x);
Var reshape(Var x, Shape shape);

Var add(Var x, Var y);
Var sub(Var x, Var y);
Var mul(Var x, Var y);
/// X(m×n) + b broadcast over rows.
Var add_row(Var x, Var b);
/// X(m×n) ⊙ g broadcast over rows.
Var mul_row(Var x, Var g);
/// X + s for a one-element s.
Var add_scalar(Var x, Var s);
/// s · X for a one-element s.
Var scale_by(Var x, Var s);
Var scale(Var x, double factor);

Var tanh(Var x);
Var relu(Var x);
/// sqrt(max(x, 0) + eps); the gradient is zero where x < 0.
Var clamped_sqrt(Var x, double eps);

/// Softmax along one axis, max-subtracted.
Var softmax_axis(Var x, std::size_t axis);

Var sum(Var x);
/// Mean over rows [begin, end) of a matrix, giving 1×n.
Var mean_rows(Var x, std::size_t begin, std::size_t end);
/// Rows [begin, end) of a matrix.
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var concat_rows(Var top, Var bottom);
Var concat_cols(Var left, Var right);

/// y = x·W + b
Var affine(Var x, Var weight, Var bias);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Normalizes each column over the row (batch) axis.
///
/// Train mode uses batch statistics and folds them into the running
/// estimates by exponential moving average; eval mode uses the running
/// estimates. Train mode with a single row throws DegenerateBatchError.
Var batch_norm(Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormOptions& options, Mode mode);

/// Inverted dropout; identity in eval mode or when rate is 0.
Var dropout(Var x, double rate, Mode mode, Rng& rng);

}  // namespace tcas::nd
