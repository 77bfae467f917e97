#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sage/core_types.hpp"
#include "sage/error.hpp"

using namespace sage;

TEST(CoefLayout, Lengths) {
  CoefLayout l(4, 2);
  EXPECT_EQ(l.node_length(), 9);
  EXPECT_EQ(l.total_length(), 36);
  EXPECT_EQ(l.group_size(), 3);
  EXPECT_EQ(l.group_count(), 3);
}

TEST(CoefLayout, IndexExamples) {
  CoefLayout l(4, 2);
  EXPECT_EQ(l.index_of(0, 1, 0), 0);
  EXPECT_EQ(l.index_of(0, 3, 2), 8);
  EXPECT_EQ(l.index_of(2, 3, 1), 5);
}

TEST(CoefLayout, RejectsBadArguments) {
  EXPECT_THROW(CoefLayout(1, 1), InvalidArgument);
  EXPECT_THROW(CoefLayout(3, 0), InvalidArgument);
  CoefLayout l(4, 2);
  EXPECT_THROW(l.index_of(1, 1, 0), InvalidArgument);
  EXPECT_THROW(l.index_of(0, 4, 0), InvalidArgument);
  EXPECT_THROW(l.index_of(0, 1, 3), InvalidArgument);
  EXPECT_THROW(l.index_of(0, 1, -1), InvalidArgument);
}

TEST(CoefLayout, BijectionExhaustive) {
  for (int p = 2; p <= 10; ++p) {
    for (int q = 1; q <= 10; ++q) {
      CoefLayout l(p, q);
      for (int j = 0; j < p; ++j) {
        std::set<Index> seen;
        for (int h = 0; h <= q; ++h) {
          for (int k = 0; k < p; ++k) {
            if (k == j) continue;
            const Index f = l.index_of(j, k, h);
            ASSERT_GE(f, 0);
            ASSERT_LT(f, l.node_length());
            ASSERT_TRUE(seen.insert(f).second);
            const auto [k2, h2] = l.partner_of(j, f);
            ASSERT_EQ(k2, k);
            ASSERT_EQ(h2, h);
          }
        }
        ASSERT_EQ(static_cast<Index>(seen.size()), l.node_length());
      }
    }
  }
}

TEST(GroupNorm, Examples) {
  CoefLayout l(3, 1);
  std::vector<double> v{3, 4, 0, 0};
  EXPECT_DOUBLE_EQ(group_norm(v, l, GroupNorm::inf2), 5.0);
  EXPECT_DOUBLE_EQ(group_norm(v, l, GroupNorm::one2), 5.0);
  std::vector<double> zero(4, 0.0);
  EXPECT_EQ(group_norm(zero, l, GroupNorm::inf2), 0.0);
  CoefLayout big(5, 3);
  std::vector<double> e1(big.node_length(), 0.0);
  e1[0] = 1.0;
  EXPECT_EQ(group_norm(e1, big, GroupNorm::inf2), 1.0);
  EXPECT_EQ(group_norm(e1, big, GroupNorm::one2), 1.0);
  std::vector<double> wrong(3, 1.0);
  EXPECT_THROW(group_norm(wrong, l, GroupNorm::inf2), InvalidArgument);
}

TEST(GroupNorm, NormProperties) {
  CoefLayout l(6, 4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const auto L = static_cast<std::size_t>(l.node_length());
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x(L), y(L), s(L), c(L);
    const double a = nd(rng);
    for (std::size_t i = 0; i < L; ++i) {
      x[i] = nd(rng);
      y[i] = nd(rng);
      s[i] = x[i] + y[i];
      c[i] = a * x[i];
    }
    for (auto mode : {GroupNorm::inf2, GroupNorm::one2}) {
      const double nx = group_norm(x, l, mode), ny = group_norm(y, l, mode);
      EXPECT_LE(group_norm(s, l, mode), nx + ny + 1e-12);
      EXPECT_NEAR(group_norm(c, l, mode), std::fabs(a) * nx, 1e-12 * (1 + nx));
    }
    EXPECT_GE(group_norm(x, l, GroupNorm::one2), group_norm(x, l, GroupNorm::inf2));
  }
}

TEST(MultiTaskCoef, CrossTaskGroupRoundTrip) {
  CoefLayout l(5, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Vector v(l.total_length());
  for (Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
  MultiTaskCoef beta(l, v);
  EXPECT_EQ(beta.values().size(), 5 * 4 * 4);
  MultiTaskCoef rebuilt(l);
  for (int h = 0; h <= 3; ++h) {
    const Vector b = beta.cross_task_group(h);
    ASSERT_EQ(b.size(), 5 * 4);
    for (int j = 0; j < 5; ++j)
      for (int r = 0; r < 4; ++r) EXPECT_EQ(b[j * 4 + r], beta.node(j)[h * 4 + r]);
    rebuilt.set_cross_task_group(h, b);
  }
  EXPECT_EQ(rebuilt.values(), beta.values());
  EXPECT_EQ(beta.at(2, 4, 1), v[2 * 16 + 1 * 4 + 3]);
}
