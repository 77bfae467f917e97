#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sage/design.hpp"
#include "sage/error.hpp"

using namespace sage;

TEST(Design, SmallestCase) {
  Matrix U(3, 1), X(3, 2);
  U << 1, 0, 1;
  X << 1, 2, 3, 4, 5, 6;
  const Dataset d = Dataset::from_observations(U, X);
  const NodeDesign w = build_node_design(d, 0);
  ASSERT_EQ(w.W.rows(), 3);
  ASSERT_EQ(w.W.cols(), 2);
  Matrix expect(3, 2);
  expect << 2, 2, 4, 0, 6, 6;
  EXPECT_EQ(w.W, expect);
  EXPECT_EQ(w.z, X.col(0));
  EXPECT_THROW(build_node_design(d, 2), InvalidArgument);
}

TEST(Design, ZeroCovariatesZeroInteractions) {
  std::mt19937_64 rng(1);
  Dataset d = oracle::random_dataset(10, 4, 3, rng);
  d = Dataset::from_observations(Matrix::Zero(10, 3), d.X);
  const NodeDesign w = build_node_design(d, 1);
  EXPECT_TRUE(w.W.rightCols(9).isZero(0.0));
  EXPECT_FALSE(w.W.leftCols(3).isZero(0.0));
}

TEST(Design, MatchesDefinitionAndCrossMoment) {
  std::mt19937_64 rng(2);
  const Dataset d = sample(paper_default_model(4, 2), 5, 77);
  for (int j = 0; j < 4; ++j) {
    const NodeDesign w = build_node_design(d, j);
    const Matrix ref = oracle::naive_design(d, j);
    EXPECT_EQ(w.W, ref);
    const Vector c = cross_moment(w);
    for (Index l = 0; l < ref.cols(); ++l) {
      double s = 0.0;
      for (Index i = 0; i < 5; ++i) s += ref(i, l) * d.Z(i, j);
      EXPECT_NEAR(c[l], s / 5.0, 1e-14);
    }
  }
}

TEST(Design, GramMatchesTripleLoop) {
  std::mt19937_64 rng(3);
  NodeDesign w;
  w.W = oracle::random_matrix(5, 6, rng);
  w.z = Vector::Zero(5);
  EXPECT_LE((gram(w) - oracle::naive_gram(w.W)).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix g = gram(w);
  EXPECT_EQ(g, g.transpose());
}

TEST(Design, GramSpecialCases) {
  NodeDesign w;
  w.W = std::sqrt(4.0) * Matrix::Identity(4, 4);
  EXPECT_TRUE(gram(w).isIdentity(1e-15));
  w.W = Matrix(1, 3);
  w.W << 1, 2, 3;
  const Matrix g = gram(w);
  Eigen::FullPivLU<Matrix> lu(g);
  EXPECT_EQ(lu.rank(), 1);
  EXPECT_DOUBLE_EQ(g(1, 2), 6.0);
}

TEST(EigenFactor, ScaledIdentity) {
  NodeDesign w;
  w.W = std::sqrt(6.0) * Matrix::Identity(6, 6);
  const EigenFactor e = eigen_factor(w);
  EXPECT_EQ(e.rank(), 6);
  EXPECT_LE((e.D - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EigenFactor, DuplicatedRows) {
  std::mt19937_64 rng(4);
  NodeDesign w;
  const Matrix two = oracle::random_matrix(2, 7, rng);
  w.W.resize(4, 7);
  w.W << two, two;
  EXPECT_EQ(eigen_factor(w).rank(), 2);
}

TEST(EigenFactor, ZeroDesignIsDegenerate) {
  NodeDesign w;
  w.W = Matrix::Zero(3, 5);
  EXPECT_THROW(eigen_factor(w), DegenerateDesign);
}

TEST(EigenFactor, ReconstructionBothShapes) {
  std::mt19937_64 rng(5);
  for (auto [n, L] : {std::pair<Index, Index>{10, 24}, {40, 12}, {15, 15}}) {
    NodeDesign w;
    w.W = oracle::random_matrix(n, L, rng);
    const EigenFactor e = eigen_factor(w);
    const Matrix g = oracle::naive_gram(w.W);
    const Matrix rec = e.V * e.D.asDiagonal() * e.V.transpose();
    EXPECT_LE((rec - g).norm() / g.norm(), 1e-8) << n << "x" << L;
    EXPECT_LE((e.V.transpose() * e.V - Matrix::Identity(e.rank(), e.rank())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(e.rank(), std::min(n, L));
    for (Index i = 1; i < e.rank(); ++i) EXPECT_GE(e.D[i - 1], e.D[i]);
    EXPECT_GT(e.D.minCoeff(), 0.0);
    // W / sqrt(n) = U D^{1/2} V^T
    const Matrix ws = e.U * e.D.cwiseSqrt().asDiagonal() * e.V.transpose();
    EXPECT_LE((ws - w.W / std::sqrt(double(n))).norm(), 1e-8 * w.W.norm());
  }
}

TEST(Design, SimulatedGramDiagonalPositive) {
  const Dataset d = sample(paper_default_model(6, 3), 100, 3);
  for (int j = 0; j < 6; ++j) {
    const Matrix g = gram(build_node_design(d, j));
    EXPECT_GT(g.diagonal().minCoeff(), 0.0);
    EXPECT_TRUE(g.allFinite());
  }
}
