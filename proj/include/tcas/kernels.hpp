#pragma once

// Dense row-major GEMM kernels. Every output element is accumulated by a
// single thread in a fixed k order, so the OpenMP variants are bitwise equal
// to the serial reference regardless of thread count.

#include <cstddef>
#include <span>

namespace tcas::kernels {

struct GemmDims {
  std::size_t m;
  std::size_t k;
  std::size_t n;
};

namespace serial {

// C(m×n) = A(m×k) · B(k×n)
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
// C(m×n) = A(k×m)ᵀ · B(k×n)
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
// C(m×n) = A(m×k) · B(n×k)ᵀ
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);

}  // namespace parallel

/// Below this many multiply-adds the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, GemmDims d);

}  // namespace tcas::kernels
