// AVX2/FMA kernels. Compiled with -mavx2 -mfma; only reached after the
// runtime CPU check in dispatch.cpp.
#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace sage::simd::avx2 {
namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }
inline __m256d sign_pd(__m256d v) { return _mm256_and_pd(_mm256_set1_pd(-0.0), v); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(ConstSpan a, ConstSpan b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(ConstSpan a) { return dot(a, a); }

void axpy(double a, ConstSpan x, MutSpan y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  for (; i < n; ++i) y[i] += a * x[i];
}

void soft_threshold(ConstSpan x, double t, MutSpan out) {
  const std::size_t n = x.size();
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    const __m256d mag = _mm256_max_pd(_mm256_sub_pd(abs_pd(v), vt), zero);
    // keep the sign only where the magnitude survives, so killed entries are +0
    const __m256d alive = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(&out[i], _mm256_or_pd(mag, _mm256_and_pd(sign_pd(v), alive)));
  }
  for (; i < n; ++i) {
    const double mag = std::fabs(x[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

double thresholded_sum_squares(ConstSpan x, double alpha) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_max_pd(_mm256_sub_pd(abs_pd(_mm256_loadu_pd(&x[i])), va), zero);
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double e = std::fabs(x[i]) - alpha;
    if (e > 0.0) s += e * e;
  }
  return s;
}

void shrink_exceedance(MutSpan x, double alpha, double scale) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(&x[i]);
    const __m256d e = _mm256_sub_pd(abs_pd(v), va);
    const __m256d over = _mm256_cmp_pd(e, zero, _CMP_GT_OQ);
    const __m256d shrunk = _mm256_or_pd(_mm256_fmadd_pd(vs, e, va), sign_pd(v));
    _mm256_storeu_pd(&x[i], _mm256_blendv_pd(v, shrunk, over));
  }
  for (; i < n; ++i) {
    const double e = std::fabs(x[i]) - alpha;
    if (e > 0.0) x[i] = std::copysign(alpha + scale * e, x[i]);
  }
}

void gemv(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    const double* c0 = a + c * ld;
    const double* c1 = c0 + ld;
    const double* c2 = c1 + ld;
    const double* c3 = c2 + ld;
    const __m256d x0 = _mm256_set1_pd(x[c]), x1 = _mm256_set1_pd(x[c + 1]);
    const __m256d x2 = _mm256_set1_pd(x[c + 2]), x3 = _mm256_set1_pd(x[c + 3]);
    std::size_t i = 0;
    for (; i + 4 <= rows; i += 4) {
      __m256d acc = _mm256_loadu_pd(&y[i]);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(c0 + i), x0, acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(c1 + i), x1, acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), x2, acc);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(c3 + i), x3, acc);
      _mm256_storeu_pd(&y[i], acc);
    }
    for (; i < rows; ++i) y[i] += c0[i] * x[c] + c1[i] * x[c + 1] + c2[i] * x[c + 2] + c3[i] * x[c + 3];
  }
  for (; c < cols; ++c) axpy(x[c], ConstSpan(a + c * ld, rows), y.first(rows));
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    const double* c0 = a + c * ld;
    const double* c1 = c0 + ld;
    const double* c2 = c1 + ld;
    const double* c3 = c2 + ld;
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= rows; i += 4) {
      const __m256d xv = _mm256_loadu_pd(&x[i]);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(c0 + i), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(c1 + i), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(c3 + i), xv, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; i < rows; ++i) {
      s0 += c0[i] * x[i];
      s1 += c1[i] * x[i];
      s2 += c2[i] * x[i];
      s3 += c3[i] * x[i];
    }
    y[c] = s0;
    y[c + 1] = s1;
    y[c + 2] = s2;
    y[c + 3] = s3;
  }
  for (; c < cols; ++c) y[c] = dot(ConstSpan(a + c * ld, rows), x.first(rows));
}

}  // namespace sage::simd::avx2
