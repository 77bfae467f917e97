#pragma once

#include <span>
#include <vector>

#include "sage/core_types.hpp"
#include "sage/debias.hpp"
#include "sage/design.hpp"

namespace sage {

/// Residual-variance estimate from least squares restricted to a support:
/// 1/sigma^jj = ||z - W beta_ols||^2 / (n - |S|).
struct NoiseEstimate {
  int j = 0;
  double sigma_jj_hat = 0.0;
  std::vector<Index> support;
  Index df = 0;  // n - |S|
  Index n = 0;
  Vector beta_ols;  // length L, zero off the support
};

NoiseEstimate estimate_noise(const NodeDesign& design, std::span<const Index> support);

struct Interval {
  double lo;
  double hi;
};

struct WaldResult {
  double z;
  double p;
};

/// sqrt(variance_factor / (n sigma_hat)).
double standard_error(double variance_factor, const NoiseEstimate& noise);

Interval confidence_interval(const DebiasColumn& col, double estimate, const NoiseEstimate& noise, double level);
WaldResult wald_test(const DebiasColumn& col, double estimate, const NoiseEstimate& noise, double null_value = 0.0);

struct CoordinateInference {
  Index l = 0;
  double estimate = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  double z = 0.0;
  double p = 1.0;
};

/// CI and Wald test for every debiased coordinate of `sage`, in column order.
std::vector<CoordinateInference> infer_coordinates(const SageEstimate& sage, const NoiseEstimate& noise,
                                                   double level);

struct ContrastReport {
  Vector estimate;    // A beta_u
  Vector null_value;  // a_0
  Matrix covariance;  // A M^T Sigma_hat M A^T / (n sigma_hat)
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
};

/// Joint Wald test of A beta_j = a_0. Every coordinate touched by A needs a debias column.
ContrastReport contrast_infer(const Matrix& A, const Vector& null_value, const SageEstimate& sage,
                              const NodeDesign& design, const NoiseEstimate& noise);

/// True when a_true lies inside the level-`level` chi-square ellipsoid of the report.
bool contrast_covers(const ContrastReport& report, const Vector& a_true, double level);

/// Cov^{-1/2} (A beta_u - A beta), the whitened contrast error.
Vector standardized_contrast(const ContrastReport& report, const Vector& a_true);

/// sqrt(n sigma_hat / variance_factor) (beta_u_l - beta_l) for each debiased column, in column order.
Vector standardized_estimates(const SageEstimate& sage, const Vector& truth_j, const NoiseEstimate& noise);

/// Everything `sage infer` reports for one node.
struct InferenceReport {
  int j = 0;
  double level = 0.95;
  double alpha = 0.0;
  double gamma = 0.0;
  NoiseEstimate noise;
  std::vector<CoordinateInference> coords;
  std::vector<ContrastReport> contrasts;
};

}  // namespace sage
