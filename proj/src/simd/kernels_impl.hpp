#pragma once
// Per-ISA kernel declarations; only dispatch.cpp and the tests' table accessors see these.

#include "sage/simd/kernels.hpp"

#define SAGE_DECLARE_KERNELS                                                                               \
  double dot(ConstSpan a, ConstSpan b);                                                                    \
  double sum_squares(ConstSpan a);                                                                         \
  void axpy(double a, ConstSpan x, MutSpan y);                                                             \
  void soft_threshold(ConstSpan x, double t, MutSpan out);                                                 \
  double thresholded_sum_squares(ConstSpan x, double alpha);                                               \
  void shrink_exceedance(MutSpan x, double alpha, double scale);                                           \
  void gemv(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y);  \
  void gemv_t(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y);

namespace sage::simd::scalar {
SAGE_DECLARE_KERNELS
}

namespace sage::simd::avx2 {
SAGE_DECLARE_KERNELS
}

#undef SAGE_DECLARE_KERNELS
