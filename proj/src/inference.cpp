#include "sage/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sage/error.hpp"
#include "sage/stats.hpp"

namespace sage {
namespace {

double clamp_p(double p) { return std::clamp(p, 1e-300, 1.0); }

double two_sided_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0,1)");
  return stats::normal_quantile(1.0 - (1.0 - level) / 2.0);
}

}  // namespace

NoiseEstimate estimate_noise(const NodeDesign& design, std::span<const Index> support) {
  const Index n = design.n();
  const Index s = static_cast<Index>(support.size());
  if (s >= n)
    throw SupportTooLarge("estimate_noise: support size " + std::to_string(s) + " is not below n = " +
                          std::to_string(n));
  NoiseEstimate out;
  out.j = design.j;
  out.support.assign(support.begin(), support.end());
  out.n = n;
  out.df = n - s;
  out.beta_ols = Vector::Zero(design.length());

  Vector resid = design.z;
  if (s > 0) {
    Matrix ws(n, s);
    for (Index c = 0; c < s; ++c) {
      if (support[c] < 0 || support[c] >= design.length())
        throw InvalidArgument("estimate_noise: support index out of range");
      ws.col(c) = design.W.col(support[c]);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(ws);
    if (qr.rank() < s) throw SingularRestrictedDesign("estimate_noise: restricted design is rank deficient");
    const Vector b = qr.solve(design.z);
    for (Index c = 0; c < s; ++c) out.beta_ols[support[c]] = b[c];
    resid -= ws * b;
  }
  const double rss = resid.squaredNorm();
  if (!(rss > 1e-24 * std::max(design.z.squaredNorm(), 1e-300)))
    throw DegenerateNoise("estimate_noise: zero residual, the noise level cannot be estimated");
  out.sigma_jj_hat = static_cast<double>(out.df) / rss;
  return out;
}

double standard_error(double variance_factor, const NoiseEstimate& noise) {
  return std::sqrt(variance_factor / (static_cast<double>(noise.n) * noise.sigma_jj_hat));
}

Interval confidence_interval(const DebiasColumn& col, double estimate, const NoiseEstimate& noise, double level) {
  const double half = two_sided_quantile(level) * standard_error(col.variance_factor, noise);
  return {estimate - half, estimate + half};
}

WaldResult wald_test(const DebiasColumn& col, double estimate, const NoiseEstimate& noise, double null_value) {
  const double se = standard_error(col.variance_factor, noise);
  const double diff = estimate - null_value;
  if (diff == 0.0) return {0.0, 1.0};
  const double z = diff / se;
  return {z, clamp_p(2.0 * stats::normal_sf(std::fabs(z)))};
}

std::vector<CoordinateInference> infer_coordinates(const SageEstimate& sage, const NoiseEstimate& noise,
                                                   double level) {
  std::vector<CoordinateInference> out;
  out.reserve(sage.columns.size());
  for (const auto& col : sage.columns) {
    CoordinateInference ci;
    ci.l = col.l;
    ci.estimate = sage.beta_u[col.l];
    ci.se = standard_error(col.variance_factor, noise);
    const Interval iv = confidence_interval(col, ci.estimate, noise, level);
    ci.lo = iv.lo;
    ci.hi = iv.hi;
    ci.level = level;
    const WaldResult w = wald_test(col, ci.estimate, noise, 0.0);
    ci.z = w.z;
    ci.p = w.p;
    out.push_back(ci);
  }
  return out;
}

ContrastReport contrast_infer(const Matrix& A, const Vector& null_value, const SageEstimate& sage,
                              const NodeDesign& design, const NoiseEstimate& noise) {
  const Index L = sage.beta_u.size();
  if (A.cols() != L) throw InvalidArgument("contrast_infer: A must have L columns");
  if (A.rows() < 1) throw InvalidArgument("contrast_infer: A has no rows");
  if (null_value.size() != A.rows()) throw InvalidArgument("contrast_infer: null vector length must equal rows of A");

  std::vector<Index> touched;
  std::vector<const DebiasColumn*> cols;
  for (Index l = 0; l < L; ++l) {
    if (A.col(l).isZero(0.0)) continue;
    const DebiasColumn* c = sage.column(l);
    if (c == nullptr)
      throw InvalidArgument("contrast_infer: coordinate " + std::to_string(l) + " is used by the contrast but was not debiased");
    touched.push_back(l);
    cols.push_back(c);
  }
  const Index t = static_cast<Index>(touched.size());
  if (t == 0) throw InvalidArgument("contrast_infer: A is identically zero");

  // M^T Sigma_hat M on the touched columns, via W m / sqrt(n).
  Matrix wm(design.n(), t);
  for (Index c = 0; c < t; ++c) wm.col(c) = design.W * cols[c]->m;
  const Matrix mtsm = wm.transpose() * wm / static_cast<double>(design.n());
  Matrix At(A.rows(), t);
  Vector bt(t);
  for (Index c = 0; c < t; ++c) {
    At.col(c) = A.col(touched[c]);
    bt[c] = sage.beta_u[touched[c]];
  }

  ContrastReport rep;
  rep.estimate = At * bt;
  rep.null_value = null_value;
  rep.covariance = At * mtsm * At.transpose() / (static_cast<double>(noise.n) * noise.sigma_jj_hat);
  rep.covariance = 0.5 * (rep.covariance + rep.covariance.transpose());
  rep.df = static_cast<int>(Eigen::FullPivLU<Matrix>(A).rank());

  Eigen::SelfAdjointEigenSolver<Matrix> es(rep.covariance);
  const double top = es.eigenvalues().maxCoeff();
  if (rep.df < A.rows() || !(top > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * top)
    throw SingularContrastCovariance("contrast_infer: contrast covariance is singular (rank-deficient A or collinear columns)");
  const Vector d = rep.estimate - null_value;
  rep.chi2 = d.dot(rep.covariance.ldlt().solve(d));
  rep.p = rep.chi2 == 0.0 ? 1.0 : clamp_p(stats::chi_square_sf(rep.chi2, rep.df));
  return rep;
}

bool contrast_covers(const ContrastReport& report, const Vector& a_true, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("contrast_covers: level must lie in (0,1)");
  const Vector d = report.estimate - a_true;
  const double stat = d.dot(report.covariance.ldlt().solve(d));
  return stats::chi_square_sf(stat, report.df) >= 1.0 - level;
}

Vector standardized_contrast(const ContrastReport& report, const Vector& a_true) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(report.covariance);
  return es.operatorInverseSqrt() * (report.estimate - a_true);
}

Vector standardized_estimates(const SageEstimate& sage, const Vector& truth_j, const NoiseEstimate& noise) {
  if (truth_j.size() != sage.beta_u.size()) throw InvalidArgument("standardized_estimates: truth has the wrong length");
  Vector out(static_cast<Index>(sage.columns.size()));
  for (std::size_t i = 0; i < sage.columns.size(); ++i) {
    const auto& c = sage.columns[i];
    out[static_cast<Index>(i)] = (sage.beta_u[c.l] - truth_j[c.l]) / standard_error(c.variance_factor, noise);
  }
  return out;
}

}  // namespace sage
