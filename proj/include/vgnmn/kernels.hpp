#pragma once

#include <cstddef>
#include <span>

// Dense GEMM kernels on row-major buffers. All variants accumulate into C.
//
//   nn: C[m×n] += A[m×k] · B[k×n]
//   nt: C[m×n] += A[m×k] · B[n×k]ᵀ
//   tn: C[m×n] += A[k×m]ᵀ · B[k×n]
//
// `serial` holds the textbook triple loops and is the reference the tests
// compare against. `parallel` splits output rows across OpenMP threads; every
// element is still reduced over k in ascending order by a single thread, so
// results do not depend on the thread count.
namespace vgnmn::kernels {

namespace serial {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
}  // namespace serial

namespace parallel {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
}  // namespace parallel

/// Work (m·n·k) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

int max_threads();

}  // namespace vgnmn::kernels
