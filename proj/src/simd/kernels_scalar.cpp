#include <cmath>

#include "kernels_impl.hpp"

namespace sage::simd::scalar {

double dot(ConstSpan a, ConstSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(ConstSpan a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

void axpy(double a, ConstSpan x, MutSpan y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void soft_threshold(ConstSpan x, double t, MutSpan out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mag = std::fabs(x[i]) - t;
    out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
}

double thresholded_sum_squares(ConstSpan x, double alpha) {
  double s = 0.0;
  for (double v : x) {
    const double e = std::fabs(v) - alpha;
    if (e > 0.0) s += e * e;
  }
  return s;
}

void shrink_exceedance(MutSpan x, double alpha, double scale) {
  for (double& v : x) {
    const double e = std::fabs(v) - alpha;
    if (e > 0.0) v = std::copysign(alpha + scale * e, v);
  }
}

void gemv(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const double xc = x[c];
    const double* col = a + c * ld;
    for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xc;
  }
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, std::size_t ld, ConstSpan x, MutSpan y) {
  for (std::size_t c = 0; c < cols; ++c) {
    const double* col = a + c * ld;
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += col[i] * x[i];
    y[c] = s;
  }
}

}  // namespace sage::simd::scalar
