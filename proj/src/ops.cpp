#include "tcas/ops.hpp"

#include <algorithm>
#include <cmath>

#include "tcas/error.hpp"
#include "tcas/kernels.hpp"

namespace tcas::nd {

namespace {

Tape& tape_of(Var a) {
  if (!a.tape()) throw UsageError("variable is not attached to a tape");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw UsageError("variables live on different tapes");
  return tape_of(a);
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

bool is_row_vector(const Tensor& t, std::size_t n) {
  return (t.rank() == 1 && t.dim(0) == n) || (t.rank() == 2 && t.dim(0) == 1 && t.dim(1) == n);
}

void require_row(const Tensor& x, const Tensor& v, const char* op) {
  require_matrix(x, op);
  if (!is_row_vector(v, x.cols()))
    throw DimensionError(std::string(op) + ": row operand " + shape_str(v.shape()) + " does not fit " +
                         shape_str(x.shape()));
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Elementwise unary op with derivative expressed through input and output.
template <typename F, typename D>
Var unary(Var x, F f, D deriv) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi, deriv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(xi);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows())
    throw DimensionError("matmul: inner extents differ, " + shape_str(av.shape()) + " · " + shape_str(bv.shape()));
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  kernels::gemm_nn(av.data(), bv.data(), out.data(), {m, k, n});
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {ai, bi}, [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor da({m, k});
      kernels::gemm_nt(g.data(), t.value(bi).data(), da.data(), {m, n, k});
      accumulate(t.grad(ai), da);
    }
    if (t.requires_grad(bi)) {
      Tensor db({k, n});
      kernels::gemm_tn(t.value(ai).data(), g.data(), db.data(), {k, m, n});
      accumulate(t.grad(bi), db);
    }
  });
}

Var matmul_tn(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_tn");
  require_matrix(bv, "matmul_tn");
  if (av.rows() != bv.rows())
    throw DimensionError("matmul_tn: leading extents differ, " + shape_str(av.shape()) + " vs " +
                         shape_str(bv.shape()));
  const std::size_t k = av.rows(), m = av.cols(), n = bv.cols();
  Tensor out({m, n});
  kernels::gemm_tn(av.data(), bv.data(), out.data(), {m, k, n});
  const std::size_t ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {ai, bi}, [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      // dA (k×m) = B · Gᵀ
      Tensor da({k, m});
      kernels::gemm_nt(t.value(bi).data(), g.data(), da.data(), {k, n, m});
      accumulate(t.grad(ai), da);
    }
    if (t.requires_grad(bi)) {
      // dB (k×n) = A · G
      Tensor db({k, n});
      kernels::gemm_nn(t.value(ai).data(), g.data(), db.data(), {k, m, n});
      accumulate(t.grad(bi), db);
    }
  });
}

Var transpose(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "transpose");
  const std::size_t r = xv.rows(), c = xv.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = xv.at(i, j);
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g.at(j, i);
  });
}

Var reshape(Var x, Shape shape) {
  Tape& tape = tape_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto gx = t.grad(xi).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var add(Var x, Var y) {
  Tape& tape = tape_of(x, y);
  require_same(x.value(), y.value(), "add");
  Tensor out = x.value();
  accumulate(out, y.value());
  const std::size_t xi = x.id(), yi = y.id();
  return tape.record(std::move(out), {xi, yi}, [xi, yi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) accumulate(t.grad(xi), g);
    if (t.requires_grad(yi)) accumulate(t.grad(yi), g);
  });
}

Var sub(Var x, Var y) { return add(x, scale(y, -1.0)); }

Var mul(Var x, Var y) {
  Tape& tape = tape_of(x, y);
  require_same(x.value(), y.value(), "mul");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y.value()[i];
  const std::size_t xi = x.id(), yi = y.id();
  return tape.record(std::move(out), {xi, yi}, [xi, yi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) {
      Tensor& gx = t.grad(xi);
      const Tensor& yv = t.value(yi);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i];
    }
    if (t.requires_grad(yi)) {
      Tensor& gy = t.grad(yi);
      const Tensor& xv = t.value(xi);
      for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * xv[i];
    }
  });
}

Var add_row(Var x, Var b) {
  Tape& tape = tape_of(x, b);
  require_row(x.value(), b.value(), "add_row");
  Tensor out = x.value();
  const std::size_t r = out.rows(), c = out.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += b.value()[j];
  const std::size_t xi = x.id(), bi = b.id();
  return tape.record(std::move(out), {xi, bi}, [xi, bi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) accumulate(t.grad(xi), g);
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g.at(i, j);
    }
  });
}

Var mul_row(Var x, Var gvec) {
  Tape& tape = tape_of(x, gvec);
  require_row(x.value(), gvec.value(), "mul_row");
  Tensor out = x.value();
  const std::size_t r = out.rows(), c = out.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= gvec.value()[j];
  const std::size_t xi = x.id(), gi = gvec.id();
  return tape.record(std::move(out), {xi, gi}, [xi, gi, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) {
      Tensor& gx = t.grad(xi);
      const Tensor& w = t.value(gi);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g.at(i, j) * w[j];
    }
    if (t.requires_grad(gi)) {
      Tensor& gw = t.grad(gi);
      const Tensor& xv = t.value(xi);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gw[j] += g.at(i, j) * xv.at(i, j);
    }
  });
}

Var add_scalar(Var x, Var s) {
  Tape& tape = tape_of(x, s);
  if (s.value().size() != 1) throw DimensionError("add_scalar: operand is not a scalar");
  Tensor out = x.value();
  const double sv = s.value()[0];
  for (auto& v : out.data()) v += sv;
  const std::size_t xi = x.id(), si = s.id();
  return tape.record(std::move(out), {xi, si}, [xi, si](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) accumulate(t.grad(xi), g);
    if (t.requires_grad(si)) {
      double acc = 0.0;
      for (double v : g.data()) acc += v;
      t.grad(si)[0] += acc;
    }
  });
}

Var scale_by(Var x, Var s) {
  Tape& tape = tape_of(x, s);
  if (s.value().size() != 1) throw DimensionError("scale_by: operand is not a scalar");
  Tensor out = x.value();
  const double sv = s.value()[0];
  for (auto& v : out.data()) v *= sv;
  const std::size_t xi = x.id(), si = s.id();
  return tape.record(std::move(out), {xi, si}, [xi, si](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(xi)) {
      const double sv = t.value(si)[0];
      Tensor& gx = t.grad(xi);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sv;
    }
    if (t.requires_grad(si)) {
      const Tensor& xv = t.value(xi);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
      t.grad(si)[0] += acc;
    }
  });
}

Var scale(Var x, double factor) {
  return unary(x, [factor](double v) { return factor * v; }, [factor](double, double) { return factor; });
}

Var tanh(Var x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var clamped_sqrt(Var x, double eps) {
  return unary(
      x, [eps](double v) { return std::sqrt(std::max(v, 0.0) + eps); },
      [](double v, double y) { return v > 0.0 ? 0.5 / y : 0.0; });
}

Var softmax_axis(Var x, std::size_t axis) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) throw DimensionError("softmax_axis: axis " + std::to_string(axis) + " out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const std::size_t len = xv.dim(axis);

  Tensor out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xv[base];
      for (std::size_t a = 1; a < len; ++a) mx = std::max(mx, xv[base + a * inner]);
      double total = 0.0;
      for (std::size_t a = 0; a < len; ++a) {
        const double e = std::exp(xv[base + a * inner] - mx);
        out[base + a * inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < len; ++a) out[base + a * inner] /= total;
    }
  }
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi, outer, inner, len](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double dot = 0.0;
        for (std::size_t a = 0; a < len; ++a) dot += g[base + a * inner] * y[base + a * inner];
        for (std::size_t a = 0; a < len; ++a) {
          const std::size_t i = base + a * inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const std::size_t xi = x.id();
  return tape.record(Tensor::scalar(acc), {xi}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(xi).data()) v += g;
  });
}

Var mean_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "mean_rows");
  if (begin >= end || end > xv.rows()) throw DimensionError("mean_rows: bad row range");
  const std::size_t c = xv.cols();
  const double inv = 1.0 / static_cast<double>(end - begin);
  Tensor out({1, c});
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += xv.at(i, j);
  for (auto& v : out.data()) v *= inv;
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi, begin, end, c, inv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g[j] * inv;
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  if (begin >= end || end > xv.rows()) throw DimensionError("slice_rows: bad row range");
  const std::size_t c = xv.cols();
  std::vector<double> data(xv.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                           xv.data().begin() + static_cast<std::ptrdiff_t>(end * c));
  const std::size_t xi = x.id();
  return tape.record(Tensor({end - begin, c}, std::move(data)), {xi}, [xi, begin, c](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto gx = t.grad(xi).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
  });
}

Var concat_rows(Var top, Var bottom) {
  Tape& tape = tape_of(top, bottom);
  const Tensor& a = top.value();
  const Tensor& b = bottom.value();
  require_matrix(a, "concat_rows");
  require_matrix(b, "concat_rows");
  if (a.cols() != b.cols()) throw DimensionError("concat_rows: column counts differ");
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  const std::size_t split = a.size();
  const std::size_t ai = top.id(), bi = bottom.id();
  return tape.record(Tensor({a.rows() + b.rows(), a.cols()}, std::move(data)), {ai, bi},
                     [ai, bi, split](Tape& t, std::size_t self) {
                       const auto g = t.grad(self).data();
                       if (t.requires_grad(ai)) {
                         auto ga = t.grad(ai).data();
                         for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
                       }
                       if (t.requires_grad(bi)) {
                         auto gb = t.grad(bi).data();
                         for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
                       }
                     });
}

Var concat_cols(Var left, Var right) {
  Tape& tape = tape_of(left, right);
  const Tensor& a = left.value();
  const Tensor& b = right.value();
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  if (a.rows() != b.rows()) throw DimensionError("concat_cols: row counts differ");
  const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out({r, ca + cb});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = b.at(i, j);
  }
  const std::size_t ai = left.id(), bi = right.id();
  return tape.record(std::move(out), {ai, bi}, [ai, bi, r, ca, cb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor& ga = t.grad(ai);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
    }
    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad(bi);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
    }
  });
}

Var affine(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var batch_norm(Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormOptions& options, Mode mode) {
  Tape& tape = tape_of(x, gamma);
  tape_of(x, beta);
  const Tensor& xv = x.value();
  require_matrix(xv, "batch_norm");
  const std::size_t n = xv.rows(), c = xv.cols();
  if (!is_row_vector(gamma.value(), c) || !is_row_vector(beta.value(), c) || running_mean.size() != c ||
      running_var.size() != c)
    throw DimensionError("batch_norm: parameter extents do not match " + shape_str(xv.shape()));
  if (options.eps < 0.0 || options.momentum < 0.0 || options.momentum > 1.0)
    throw ConfigError("batch_norm: eps must be >= 0 and momentum in [0, 1]");

  std::vector<double> mean(c, 0.0), inv_std(c, 0.0);
  if (mode == Mode::train) {
    if (n < 2) throw DegenerateBatchError("batch_norm: train mode needs a batch of at least 2 rows");
    std::vector<double> var(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) mean[j] += xv.at(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv.at(i, j) - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j) {
      var[j] /= static_cast<double>(n);
      inv_std[j] = 1.0 / std::sqrt(var[j] + options.eps);
      const double unbiased = var[j] * static_cast<double>(n) / static_cast<double>(n - 1);
      running_mean[j] = (1.0 - options.momentum) * running_mean[j] + options.momentum * mean[j];
      running_var[j] = (1.0 - options.momentum) * running_var[j] + options.momentum * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = running_mean[j];
      inv_std[j] = 1.0 / std::sqrt(running_var[j] + options.eps);
    }
  }
  if (!std::all_of(inv_std.begin(), inv_std.end(), [](double v) { return std::isfinite(v); }))
    throw NumericError("batch_norm: zero variance with eps = 0");

  Tensor xhat({n, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) xhat.at(i, j) = (xv.at(i, j) - mean[j]) * inv_std[j];
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = gamma.value()[j] * xhat.at(i, j) + beta.value()[j];

  const std::size_t xi = x.id(), gi = gamma.id(), bi = beta.id();
  const bool batch_stats = mode == Mode::train;
  return tape.record(
      std::move(out), {xi, gi, bi},
      [xi, gi, bi, n, c, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                            std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gam = t.value(gi);
        if (t.requires_grad(gi)) {
          Tensor& gg = t.grad(gi);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g.at(i, j) * xhat.at(i, j);
        }
        if (t.requires_grad(bi)) {
          Tensor& gb = t.grad(bi);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g.at(i, j);
        }
        if (!t.requires_grad(xi)) return;
        Tensor& gx = t.grad(xi);
        if (!batch_stats) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g.at(i, j) * gam[j] * inv_std[j];
          return;
        }
        const double nn = static_cast<double>(n);
        for (std::size_t j = 0; j < c; ++j) {
          double sum_d = 0.0, sum_dx = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double d = g.at(i, j) * gam[j];
            sum_d += d;
            sum_dx += d * xhat.at(i, j);
          }
          for (std::size_t i = 0; i < n; ++i) {
            const double d = g.at(i, j) * gam[j];
            gx.at(i, j) += inv_std[j] / nn * (nn * d - sum_d - xhat.at(i, j) * sum_dx);
          }
        }
      });
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) return x;
  Tape& tape = tape_of(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (auto& m : mask.data()) m = rng.uniform() >= rate ? keep_scale : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t xi = x.id();
  return tape.record(std::move(out), {xi}, [xi, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

}  // namespace tcas::nd
