#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sage/simd/kernels.hpp"

using namespace sage::simd;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    fast = avx2_kernels();
    if (!fast) GTEST_SKIP() << "no AVX2/FMA on this machine";
  }
  const KernelTable& ref = scalar_kernels();
  const KernelTable* fast = nullptr;
  std::mt19937_64 rng{11};
};

}  // namespace

TEST_F(KernelEquivalence, Reductions) {
  for (std::size_t n = 0; n < 70; ++n) {
    for (std::size_t off = 0; off < 3; ++off) {
      auto a = random_vec(n + off, rng), b = random_vec(n + off, rng);
      ConstSpan sa(a.data() + off, n), sb(b.data() + off, n);
      EXPECT_LE(rel(fast->dot(sa, sb), ref.dot(sa, sb)), 1e-13) << n;
      EXPECT_LE(rel(fast->sum_squares(sa), ref.sum_squares(sa)), 1e-13) << n;
      EXPECT_LE(rel(fast->thresholded_sum_squares(sa, 0.4), ref.thresholded_sum_squares(sa, 0.4)), 1e-13) << n;
    }
  }
}

TEST_F(KernelEquivalence, Elementwise) {
  for (std::size_t n = 0; n < 70; ++n) {
    auto x = random_vec(n, rng), y1 = random_vec(n, rng);
    auto y2 = y1;
    ref.axpy(0.7, x, y1);
    fast->axpy(0.7, x, y2);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14);

    std::vector<double> s1(n), s2(n);
    ref.soft_threshold(x, 0.5, s1);
    fast->soft_threshold(x, 0.5, s2);
    EXPECT_EQ(s1, s2);

    auto e1 = x, e2 = x;
    ref.shrink_exceedance(e1, 0.3, 0.25);
    fast->shrink_exceedance(e2, 0.3, 0.25);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(e1[i], e2[i], 1e-15);
  }
}

TEST_F(KernelEquivalence, Gemv) {
  for (std::size_t rows : {1u, 3u, 8u, 13u}) {
    for (std::size_t cols : {1u, 4u, 5u, 11u}) {
      const std::size_t ld = rows + 2;
      auto a = random_vec(ld * cols, rng);
      auto x = random_vec(cols, rng), xt = random_vec(rows, rng);
      std::vector<double> y1(rows), y2(rows), t1(cols), t2(cols);
      ref.gemv(a.data(), rows, cols, ld, x, y1);
      fast->gemv(a.data(), rows, cols, ld, x, y2);
      ref.gemv_t(a.data(), rows, cols, ld, xt, t1);
      fast->gemv_t(a.data(), rows, cols, ld, xt, t2);
      for (std::size_t i = 0; i < rows; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-12);
      for (std::size_t i = 0; i < cols; ++i) EXPECT_NEAR(t1[i], t2[i], 1e-12);
    }
  }
}

TEST(Kernels, ScalarMatchesDefinition) {
  const KernelTable& k = scalar_kernels();
  std::vector<double> x{3.0, -3.0, 0.5, -0.2};
  std::vector<double> out(4);
  k.soft_threshold(x, 1.0, out);
  EXPECT_EQ(out, (std::vector<double>{2.0, -2.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(k.thresholded_sum_squares(x, 1.0), 8.0);
  k.shrink_exceedance(x, 1.0, 0.5);
  EXPECT_EQ(x, (std::vector<double>{2.0, -2.0, 0.5, -0.2}));
}

TEST(Kernels, ActiveTableIsOneOfTheTwo) {
  const KernelTable& k = kernels();
  EXPECT_TRUE(&k == &scalar_kernels() || &k == avx2_kernels());
}
