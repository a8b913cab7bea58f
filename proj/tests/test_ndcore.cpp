#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "tcas/error.hpp"
#include "tcas/gradcheck.hpp"
#include "tcas/kernels.hpp"
#include "tcas/ops.hpp"
#include "tcas/rng.hpp"

using namespace tcas;
using namespace tcas::nd;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("tensor construction checks extents") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
}

TEST_CASE("gemm kernels: parallel equals serial bitwise") {
  Rng rng(3);
  const kernels::GemmDims shapes[] = {{1, 1, 1}, {7, 5, 3}, {64, 48, 80}, {129, 33, 65}};
  for (const auto& d : shapes) {
    std::vector<double> a(d.m * d.k), b(d.k * d.n), bt(d.n * d.k), at(d.k * d.m);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    for (auto& v : bt) v = rng.normal();
    for (auto& v : at) v = rng.normal();
    std::vector<double> s(d.m * d.n), p(d.m * d.n);
    kernels::serial::gemm_nn(a, b, s, d);
    kernels::parallel::gemm_nn(a, b, p, d);
    CHECK(bitwise_equal(s, p));
    kernels::serial::gemm_tn(at, b, s, d);
    kernels::parallel::gemm_tn(at, b, p, d);
    CHECK(bitwise_equal(s, p));
    kernels::serial::gemm_nt(a, bt, s, d);
    kernels::parallel::gemm_nt(a, bt, p, d);
    CHECK(bitwise_equal(s, p));
  }
}

TEST_CASE("gemm kernels agree with a naive triple loop") {
  Rng rng(4);
  const kernels::GemmDims d{5, 4, 3};
  std::vector<double> a(20), b(12), c(15);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  kernels::gemm_nn(a, b, c, d);
  for (std::size_t i = 0; i < d.m; ++i)
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < d.k; ++q) s += a[i * d.k + q] * b[q * d.n + j];
      CHECK(c[i * d.n + j] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("matmul examples") {
  Tape tape;
  const Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  const Var b = tape.constant(Tensor::matrix({{5}, {6}}));
  CHECK(matmul(a, b).value() == Tensor::matrix({{17}, {39}}));

  Rng rng(1);
  const Tensor x = random_tensor({3, 4}, rng);
  CHECK(matmul(tape.constant(x), tape.constant(Tensor::identity(4))).value() == x);
  CHECK(matmul(tape.constant(x), tape.constant(Tensor({4, 2}))).value() == Tensor({3, 2}));
  CHECK_THROWS_AS(matmul(a, tape.constant(Tensor({3, 1}))), DimensionError);
}

TEST_CASE("softmax examples and invariants") {
  Tape tape;
  const Var x = tape.constant(Tensor({3}, std::vector<double>{0.0, std::log(2.0), std::log(3.0)}));
  const Tensor s = softmax_axis(x, 0).value();
  CHECK(s[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(s[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-15));

  const Tensor flat = softmax_axis(tape.constant(Tensor({5}, 2.5)), 0).value();
  for (double v : flat.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  Rng rng(5);
  const Tensor m = random_tensor({4, 6}, rng);
  Tensor shifted = m;
  for (auto& v : shifted.data()) v += 123.0;
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const Tensor a = softmax_axis(tape.constant(m), axis).value();
    const Tensor b = softmax_axis(tape.constant(shifted), axis).value();
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] > 0.0);
      CHECK(a[i] < 1.0);
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
    }
    const std::size_t outer = axis == 0 ? m.cols() : m.rows(), inner = axis == 0 ? m.rows() : m.cols();
    for (std::size_t o = 0; o < outer; ++o) {
      double sum = 0.0;
      for (std::size_t i = 0; i < inner; ++i) sum += axis == 0 ? a.at(i, o) : a.at(o, i);
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
  const Tensor big = softmax_axis(tape.constant(Tensor::vector({1000.0, 0.0})), 0).value();
  CHECK(big[0] == doctest::Approx(1.0));
}

TEST_CASE("affine examples") {
  Tape tape;
  const Var x = tape.constant(Tensor::matrix({{1, 2}}));
  const Var w = tape.constant(Tensor::matrix({{1, 0}, {0, 2}}));
  const Var b = tape.constant(Tensor::vector({1, 1}));
  CHECK(affine(x, w, b).value() == Tensor::matrix({{2, 5}}));
  const Tensor xv = x.value();
  CHECK(affine(x, tape.constant(Tensor::identity(2)), tape.constant(Tensor({2}))).value() == xv);
  CHECK(affine(tape.constant(Tensor({3, 2})), w, b).value() == Tensor::matrix({{1, 1}, {1, 1}, {1, 1}}));
}

TEST_CASE("batch norm examples") {
  Tape tape;
  Tensor mean({1}), var({1}, 1.0);
  const Var out = batch_norm(tape.constant(Tensor::matrix({{1}, {3}})), tape.constant(Tensor({1}, 1.0)),
                             tape.constant(Tensor({1})), mean, var, {0.0, 0.1}, Mode::train);
  CHECK(out.value() == Tensor::matrix({{-1}, {1}}));
  CHECK(mean[0] == doctest::Approx(0.2));
  CHECK(var[0] == doctest::Approx(0.9 + 0.1 * 2.0));

  Rng rng(6);
  const Tensor x = random_tensor({20, 5}, rng);
  Tensor m5({5}), v5({5}, 1.0);
  const Tensor y = batch_norm(tape.constant(x), tape.constant(Tensor({5}, 1.0)), tape.constant(Tensor({5})), m5, v5,
                              {1e-12, 0.1}, Mode::train)
                       .value();
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < 20; ++r) s += y.at(r, c);
    for (std::size_t r = 0; r < 20; ++r) s2 += y.at(r, c) * y.at(r, c);
    CHECK(std::abs(s / 20.0) < 1e-7);
    CHECK(std::abs(s2 / 20.0 - 1.0) < 1e-7);
  }

  const Tensor beta = Tensor::vector({0.5, -1, 2, 0, 3});
  const Tensor z = batch_norm(tape.constant(x), tape.constant(Tensor({5})), tape.constant(beta), m5, v5, {}, Mode::train)
                       .value();
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 5; ++c) CHECK(z.at(r, c) == beta[c]);

  Tensor m1({5}), v1({5}, 1.0);
  CHECK_THROWS_AS(batch_norm(tape.constant(Tensor({1, 5})), tape.constant(Tensor({5}, 1.0)), tape.constant(Tensor({5})),
                             m1, v1, {}, Mode::train),
                  DegenerateBatchError);
  const Tensor e = batch_norm(tape.constant(Tensor({1, 5}, 2.0)), tape.constant(Tensor({5}, 1.0)),
                              tape.constant(Tensor({5})), m1, v1, {0.0, 0.1}, Mode::eval)
                       .value();
  for (double v : e.data()) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("dropout") {
  Tape tape;
  Rng rng(8);
  const Tensor x = random_tensor({4, 3}, rng);
  CHECK(dropout(tape.constant(x), 0.0, Mode::train, rng).value() == x);
  CHECK(dropout(tape.constant(x), 0.5, Mode::eval, rng).value() == x);
  CHECK_THROWS_AS(dropout(tape.constant(x), 1.0, Mode::train, rng), ConfigError);
  CHECK_THROWS_AS(dropout(tape.constant(x), -0.1, Mode::train, rng), ConfigError);

  const Tensor ones({1, 4}, std::vector<double>{1.0, 2.0, -3.0, 0.5});
  std::vector<double> mean(4, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    Tape t;
    const Tensor y = dropout(t.constant(ones), 0.2, Mode::train, rng).value();
    for (std::size_t j = 0; j < 4; ++j) mean[j] += y[j] / draws;
  }
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mean[j] - ones[j]) <= 0.01 * std::abs(ones[j]));

  Rng r1 = Rng::stream(42, "dropout"), r2 = Rng::stream(42, "dropout");
  Tape t1, t2;
  CHECK(dropout(t1.constant(x), 0.3, Mode::train, r1).value() == dropout(t2.constant(x), 0.3, Mode::train, r2).value());
}

TEST_CASE("backward: closed forms and unreachable params") {
  Param x("x", Tensor::vector({1.0, -2.0, 3.0}));
  Param unused("unused", Tensor::vector({5.0}));
  Tape tape;
  const Var vx = tape.param(x);
  tape.param(unused);
  tape.backward(sum(mul(vx, vx)));
  CHECK(x.grad == Tensor::vector({2.0, -4.0, 6.0}));
  CHECK(unused.grad == Tensor::vector({0.0}));
  CHECK_THROWS_AS(tape.backward(vx), UsageError);
}

TEST_CASE("non-finite values are rejected") {
  Tape tape;
  CHECK_THROWS_AS(tape.constant(Tensor::vector({1.0, NAN})), NumericError);
  const Var big = tape.constant(Tensor::vector({1e300}));
  CHECK_THROWS_AS(mul(big, big), NumericError);
}

TEST_CASE("grad_check examples") {
  // Central differences of a linear f are exact up to the rounding of f
  // itself, so evaluate where f is small.
  Param x("x", Tensor({6}));
  const LossFn linear = [&](Tape& t) {
    return sum(mul(t.param(x), t.constant(Tensor::vector({1.0, -2.0, 3.0, 0.5, 4.0, -1.5}))));
  };
  CHECK(grad_check(linear, {&x}).max_rel_error <= 1e-10);
  x.value = Tensor({6}, 1.0);
  const LossFn square = [&](Tape& t) {
    const Var v = t.param(x);
    return sum(mul(v, v));
  };
  const auto r = grad_check(square, {&x});
  CHECK(r.max_rel_error <= 1e-8);
  CHECK(r.checked == 6);
  CHECK(x.grad == Tensor({6}, 2.0));
  CHECK_THROWS_AS(grad_check(square, {&x}, 0.0), UsageError);
}
