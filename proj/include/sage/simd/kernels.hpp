#pragma once
// Data-parallel inner loops used by the solvers.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant compiled in its own translation unit. The active table is chosen
// once at runtime from the CPU capabilities; SAGE_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace sage::simd {

using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

struct KernelTable {
  std::string_view name;

  double (*dot)(ConstSpan a, ConstSpan b);
  double (*sum_squares)(ConstSpan a);
  // y += a * x
  void (*axpy)(double a, ConstSpan x, MutSpan y);
  // out_i = sign(x_i) * max(|x_i| - t, 0); out may alias x.
  void (*soft_threshold)(ConstSpan x, double t, MutSpan out);
  // sum_i max(|x_i| - alpha, 0)^2, i.e. the squared norm of H_alpha(x).
  double (*thresholded_sum_squares)(ConstSpan x, double alpha);
  // For |x_i| > alpha: x_i <- sign(x_i) * (alpha + scale * (|x_i| - alpha)). Others untouched.
  void (*shrink_exceedance)(MutSpan x, double alpha, double scale);
  // Column-major A (rows x cols, leading dimension ld).
  // y = A x
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y);
  // y = A^T x
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Best table for this process (honours SAGE_SIMD=scalar).
const KernelTable& kernels();

}  // namespace sage::simd
