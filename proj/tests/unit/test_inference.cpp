#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sage/design.hpp"
#include "sage/error.hpp"
#include "sage/inference.hpp"
#include "sage/sgl_fit.hpp"
#include "sage/stats.hpp"

using namespace sage;

namespace {

NoiseEstimate unit_noise(Index n) {
  NoiseEstimate ne;
  ne.n = n;
  ne.sigma_jj_hat = 1.0;
  ne.df = n;
  return ne;
}

DebiasColumn column_with_factor(double vf) {
  DebiasColumn c;
  c.variance_factor = vf;
  return c;
}

}  // namespace

TEST(Stats, NormalFunctionsAgreeWithErfc) {
  for (double x = -8.0; x <= 8.0; x += 0.25) {
    const double ref = 0.5 * std::erfc(-x / std::sqrt(2.0));
    EXPECT_NEAR(stats::normal_cdf(x), ref, 1e-15 + 1e-12 * ref);
    EXPECT_NEAR(stats::normal_sf(x), 1.0 - ref, 1e-12);
  }
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999}) {
    const double x = stats::normal_quantile(p);
    EXPECT_NEAR(stats::normal_cdf(x), p, 1e-12 * std::max(p, 1e-3));
  }
  EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Stats, ChiSquareOneDegreeIsSquaredNormal) {
  for (double z : {0.1, 0.5, 1.0, 1.959964, 3.0, 6.0}) {
    EXPECT_NEAR(stats::chi_square_sf(z * z, 1.0), 2.0 * stats::normal_sf(z), 1e-13);
  }
  EXPECT_NEAR(stats::chi_square_sf(2.0 * std::log(20.0), 2.0), 0.05, 1e-14);
}

TEST(Interval, HalfWidthExample) {
  const Interval iv = confidence_interval(column_with_factor(1.0), 0.0, unit_noise(400), 0.95);
  EXPECT_NEAR(iv.hi, 0.0979981992270027, 1e-12);
  EXPECT_NEAR(iv.lo, -iv.hi, 1e-15);
  EXPECT_THROW(confidence_interval(column_with_factor(1.0), 0.0, unit_noise(400), 1.0), InvalidArgument);
}

TEST(Interval, DegeneratesAsLevelShrinks) {
  const Interval iv = confidence_interval(column_with_factor(1.0), 0.7, unit_noise(400), 1e-12);
  EXPECT_NEAR(iv.lo, 0.7, 1e-12);
  EXPECT_NEAR(iv.hi, 0.7, 1e-12);
}

TEST(Interval, HalfWidthScalesWithRootN) {
  const Interval a = confidence_interval(column_with_factor(2.5), 0.0, unit_noise(100), 0.9);
  const Interval b = confidence_interval(column_with_factor(2.5), 0.0, unit_noise(400), 0.9);
  EXPECT_NEAR(a.hi / b.hi, 2.0, 1e-14);
  NoiseEstimate ne = unit_noise(100);
  ne.sigma_jj_hat = 4.0;
  const Interval c = confidence_interval(column_with_factor(2.5), 0.0, ne, 0.9);
  EXPECT_NEAR(a.hi / c.hi, 2.0, 1e-14);
}

TEST(Wald, Examples) {
  const WaldResult same = wald_test(column_with_factor(1.0), 0.3, unit_noise(400), 0.3);
  EXPECT_EQ(same.z, 0.0);
  EXPECT_EQ(same.p, 1.0);
  // se = 1/20, so an estimate of 1.959964/20 gives |z| = 1.959964
  const WaldResult w = wald_test(column_with_factor(1.0), -1.959964 / 20.0, unit_noise(400));
  EXPECT_NEAR(w.z, -1.959964, 1e-12);
  EXPECT_NEAR(w.p, 0.05, 1e-6);
  const WaldResult tiny = wald_test(column_with_factor(1.0), 100.0, unit_noise(400));
  EXPECT_GE(tiny.p, 1e-300);
}

TEST(Noise, EmptySupport) {
  std::mt19937_64 rng(1);
  NodeDesign w;
  w.W = oracle::random_matrix(30, 4, rng);
  w.z = oracle::random_matrix(30, 1, rng).col(0);
  const NoiseEstimate ne = estimate_noise(w, {});
  EXPECT_NEAR(1.0 / ne.sigma_jj_hat, w.z.squaredNorm() / 30.0, 1e-14);
  EXPECT_EQ(ne.df, 30);
}

TEST(Noise, RestrictedLeastSquares) {
  std::mt19937_64 rng(2);
  NodeDesign w;
  w.W = oracle::random_matrix(30, 6, rng);
  w.z = oracle::random_matrix(30, 1, rng).col(0);
  std::vector<Index> s{1, 4};
  const NoiseEstimate ne = estimate_noise(w, s);
  Matrix ws(30, 2);
  ws << w.W.col(1), w.W.col(4);
  const Vector b = oracle::normal_equations_ls(ws, w.z);
  EXPECT_NEAR(ne.beta_ols[1], b[0], 1e-12);
  EXPECT_NEAR(ne.beta_ols[4], b[1], 1e-12);
  EXPECT_EQ(ne.beta_ols[0], 0.0);
  EXPECT_NEAR(1.0 / ne.sigma_jj_hat, (w.z - ws * b).squaredNorm() / 28.0, 1e-12);
}

TEST(Noise, Errors) {
  std::mt19937_64 rng(3);
  NodeDesign w;
  w.W = oracle::random_matrix(5, 8, rng);
  w.z = w.W.col(2) * 0.5;
  std::vector<Index> s{2};
  EXPECT_THROW(estimate_noise(w, s), DegenerateNoise);
  std::vector<Index> big{0, 1, 2, 3, 4};
  EXPECT_THROW(estimate_noise(w, big), SupportTooLarge);
  w.W.col(3) = w.W.col(1);
  w.z = oracle::random_matrix(5, 1, rng).col(0);
  std::vector<Index> dup{1, 3};
  EXPECT_THROW(estimate_noise(w, dup), SingularRestrictedDesign);
}

TEST(Noise, ConsistentAtLargeN) {
  const Dataset d = sample(paper_default_model(6, 2), 3000, 5);
  const NodeDesign w = build_node_design(d, 0);
  const CoefLayout layout(6, 2);
  std::vector<Index> truth{layout.index_of(0, 1, 1), layout.index_of(0, 1, 2)};
  EXPECT_NEAR(estimate_noise(w, truth).sigma_jj_hat, 1.0, 0.08);
}

namespace {

struct Fixture {
  Dataset data;
  NodeDesign design;
  SageEstimate sage;
  NoiseEstimate noise;
};

Fixture debiased_node(std::uint64_t seed, std::vector<Index> coords) {
  Fixture f;
  f.data = sample(paper_default_model(6, 2), 120, seed);
  FitConfig c;
  c.lambda_e = 0.1;
  c.lambda_g = 0.07;
  const FitResult r = fit(f.data, c);
  f.design = build_node_design(f.data, 0);
  const CoefLayout layout(6, 2);
  auto cols = solve_columns(eigen_factor(f.design), layout, coords, DebiasConfig::for_sample_size(120));
  f.sage = sage_update(r.beta.node(0), f.design, std::move(cols));
  f.noise = estimate_noise(f.design, r.support[0]);
  return f;
}

}  // namespace

TEST(Contrast, SingleRowReducesToWald) {
  const Fixture f = debiased_node(3, {0, 5, 7});
  for (Index l : {0, 5, 7}) {
    Matrix A = Matrix::Zero(1, 15);
    A(0, l) = 1.0;
    Vector null(1);
    null << -0.1;
    const ContrastReport rep = contrast_infer(A, null, f.sage, f.design, f.noise);
    const WaldResult w = wald_test(*f.sage.column(l), f.sage.beta_u[l], f.noise, -0.1);
    EXPECT_NEAR(rep.chi2, w.z * w.z, 1e-12 * std::max(1.0, rep.chi2));
    EXPECT_NEAR(rep.p, w.p, 1e-12);
    EXPECT_EQ(rep.df, 1);
  }
}

TEST(Contrast, CovarianceSymmetricPsd) {
  const Fixture f = debiased_node(4, {0, 1, 5, 6});
  Matrix A = Matrix::Zero(3, 15);
  A(0, 0) = 1;
  A(0, 5) = -1;
  A(1, 1) = 2;
  A(1, 6) = 1;
  A(2, 0) = 1;
  A(2, 1) = 1;
  const ContrastReport rep = contrast_infer(A, Vector::Zero(3), f.sage, f.design, f.noise);
  EXPECT_LE((rep.covariance - rep.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rep.covariance);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_EQ(rep.df, 3);
  const Vector zs = standardized_contrast(rep, rep.estimate);
  EXPECT_LE(zs.norm(), 1e-14);
}

TEST(Contrast, Errors) {
  const Fixture f = debiased_node(5, {0, 5});
  Matrix A = Matrix::Zero(1, 15);
  A(0, 3) = 1.0;
  EXPECT_THROW(contrast_infer(A, Vector::Zero(1), f.sage, f.design, f.noise), InvalidArgument);
  Matrix R = Matrix::Zero(2, 15);
  R(0, 0) = 1;
  R(1, 0) = 2;
  EXPECT_THROW(contrast_infer(R, Vector::Zero(2), f.sage, f.design, f.noise), SingularContrastCovariance);
  EXPECT_THROW(contrast_infer(Matrix::Zero(1, 15), Vector::Zero(1), f.sage, f.design, f.noise), InvalidArgument);
}

TEST(Standardized, ZeroAtTruth) {
  const Fixture f = debiased_node(6, {0, 5});
  EXPECT_TRUE(standardized_estimates(f.sage, f.sage.beta_u, f.noise).isZero(0.0));
}

TEST(Inference, ScalingLeavesZStatisticsUnchanged) {
  const Fixture f = debiased_node(7, {0, 5, 6});
  const double c = 3.7;
  NodeDesign scaled = f.design;
  scaled.z *= c;
  // the penalised fit of scaled data is not the same, so scale the estimate directly
  Vector beta = f.sage.beta_u;
  for (const auto& col : f.sage.columns) beta[col.l] = 0.0;
  std::vector<DebiasColumn> cols = f.sage.columns;
  const SageEstimate base = sage_update(beta, f.design, cols);
  const SageEstimate big = sage_update(c * beta, scaled, cols);
  const NoiseEstimate n1 = estimate_noise(f.design, f.noise.support);
  const NoiseEstimate n2 = estimate_noise(scaled, f.noise.support);
  const auto a = infer_coordinates(base, n1, 0.95);
  const auto b = infer_coordinates(big, n2, 0.95);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].z, b[i].z, 1e-8);
    EXPECT_NEAR(c * a[i].estimate, b[i].estimate, 1e-10);
  }
}

TEST(Inference, CoordinateRowsAreConsistent) {
  const Fixture f = debiased_node(8, {0, 5, 6});
  for (const auto& ci : infer_coordinates(f.sage, f.noise, 0.95)) {
    EXPECT_LE(ci.lo, ci.estimate);
    EXPECT_GE(ci.hi, ci.estimate);
    EXPECT_NEAR(ci.hi - ci.estimate, stats::normal_quantile(0.975) * ci.se, 1e-14);
    EXPECT_GE(ci.p, 0.0);
    EXPECT_LE(ci.p, 1.0);
  }
}
