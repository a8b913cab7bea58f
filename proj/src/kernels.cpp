#include "tcas/kernels.hpp"

#include <omp.h>

namespace tcas::kernels {

namespace {

inline double dot_nn(const double* a_row, const double* b, std::size_t k, std::size_t n, std::size_t col) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b[p * n + col];
  return acc;
}

inline double dot_tn(const double* a, const double* b, std::size_t k, std::size_t m, std::size_t n,
                     std::size_t row, std::size_t col) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += a[p * m + row] * b[p * n + col];
  return acc;
}

inline double dot_nt(const double* a_row, const double* b_row, std::size_t k) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
  return acc;
}

bool large(GemmDims d) { return d.m * d.k * d.n >= kParallelThreshold; }

}  // namespace

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  for (std::size_t i = 0; i < d.m; ++i)
    for (std::size_t j = 0; j < d.n; ++j) c[i * d.n + j] = dot_nn(a.data() + i * d.k, b.data(), d.k, d.n, j);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  for (std::size_t i = 0; i < d.m; ++i)
    for (std::size_t j = 0; j < d.n; ++j) c[i * d.n + j] = dot_tn(a.data(), b.data(), d.k, d.m, d.n, i, j);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  for (std::size_t i = 0; i < d.m; ++i)
    for (std::size_t j = 0; j < d.n; ++j) c[i * d.n + j] = dot_nt(a.data() + i * d.k, b.data() + j * d.k, d.k);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  const auto rows = static_cast<std::ptrdiff_t>(d.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < d.n; ++j) c[r * d.n + j] = dot_nn(a.data() + r * d.k, b.data(), d.k, d.n, j);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  const auto rows = static_cast<std::ptrdiff_t>(d.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < d.n; ++j) c[r * d.n + j] = dot_tn(a.data(), b.data(), d.k, d.m, d.n, r, j);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  const auto rows = static_cast<std::ptrdiff_t>(d.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < d.n; ++j)
      c[r * d.n + j] = dot_nt(a.data() + r * d.k, b.data() + j * d.k, d.k);
  }
}

}  // namespace parallel

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  if (large(d) && !omp_in_parallel()) parallel::gemm_nn(a, b, c, d);
  else serial::gemm_nn(a, b, c, d);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  if (large(d) && !omp_in_parallel()) parallel::gemm_tn(a, b, c, d);
  else serial::gemm_tn(a, b, c, d);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d) {
  if (large(d) && !omp_in_parallel()) parallel::gemm_nt(a, b, c, d);
  else serial::gemm_nt(a, b, c, d);
}

}  // namespace tcas::kernels
