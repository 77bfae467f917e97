// One PASS/FAIL line per gated criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sage/debias.hpp"
#include "sage/design.hpp"
#include "sage/harness.hpp"
#include "sage/inference.hpp"
#include "sage/rng.hpp"
#include "sage/sgl_fit.hpp"
#include "sage/simd/kernels.hpp"

using namespace sage;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s  %-34s %s  [%.1fs]\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void criterion(const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(name, ok, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char* f, double a) {
  char b[96];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

double resid_norm(const Vector& r, const CoefLayout& layout, double alpha) {
  return thresholded_group_norm(std::span<const double>(r.data(), r.size()), layout, alpha);
}

StudyConfig table_config(Index n) {
  StudyConfig c;
  c.p = 30;
  c.q = 10;
  c.n = n;
  c.reps = 100;
  c.seed = 2024;
  c.lambda.lambda_e = 0.3;
  c.lambda.lambda_g = 0.3 / std::sqrt(2.0);
  c.oracle = false;
  return c;
}

struct TableStats {
  double pre = 0, post = 0, sd_lo = 1e9, sd_hi = 0, cov_lo = 1, cov_hi = 0, rej_lo = 1;
};

TableStats table_stats(const StudySummary& s) {
  TableStats t;
  for (const auto& r : s.tracked) {
    t.pre += std::fabs(r.pre_bias_mean) / s.tracked.size();
    t.post += std::fabs(r.post_bias_mean) / s.tracked.size();
    t.sd_lo = std::min(t.sd_lo, r.emp_sd);
    t.sd_hi = std::max(t.sd_hi, r.emp_sd);
    t.cov_lo = std::min(t.cov_lo, r.coverage);
    t.cov_hi = std::max(t.cov_hi, r.coverage);
    t.rej_lo = std::min(t.rej_lo, r.reject_zero);
  }
  return t;
}

void print_table(const StudySummary& s) {
  for (const auto& r : s.tracked)
    std::printf("      index %-5ld pre %.3f(%.3f) post %.3f(%.3f) sd %.3f cov %.3f rej %.3f\n",
                static_cast<long>(r.index + 1), r.pre_bias_mean, r.pre_bias_sd, r.post_bias_mean, r.post_bias_sd,
                r.emp_sd, r.coverage, r.reject_zero);
}

}  // namespace

int main() {
  std::printf("kernels: %s\n", std::string(simd::kernels().name).c_str());

  criterion("projected/direct equivalence", [](std::string& d) {
    const Index n = 20;
    const CoefLayout layout(8, 3);
    const DebiasConfig c = DebiasConfig::for_sample_size(n);
    double worst_fwd = 0, worst_rev = 0, worst_slack = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Dataset data = sample(paper_default_model(8, 3), n, substream_seed(77, {s}));
      const NodeDesign w = build_node_design(data, static_cast<int>(s % 8));
      const Matrix g = gram(w);
      const EigenFactor e = eigen_factor(w);
      const Index l = static_cast<Index>((s * 7) % layout.node_length());
      const DebiasColumn proj = solve_projected(e, layout, l, c);
      const DebiasColumn dir = solve_direct(g, layout, l, c);
      const DebiasColumn lifted = evaluate_column(g, layout, l, proj.m, c);
      worst_slack = std::min(worst_slack, lifted.feasibility_slack + c.feas_tol);
      worst_fwd = std::max(worst_fwd, std::fabs(lifted.variance_factor - dir.variance_factor) / dir.variance_factor);
      const Vector theta = e.V.transpose() * dir.m;
      Vector r = e.V * (e.D.asDiagonal() * theta);
      r[l] -= 1.0;
      worst_slack = std::min(worst_slack, c.gamma + c.feas_tol + 1e-9 - resid_norm(r, layout, c.alpha));
      worst_rev = std::max(worst_rev, std::fabs(theta.dot(e.D.asDiagonal() * theta) - dir.variance_factor) /
                                          dir.variance_factor);
    }
    d = fmt("max rel gap lifted %.2e", worst_fwd) + fmt(", reduced %.2e", worst_rev) +
        fmt(", min slack %.1e (tol 1e-6)", worst_slack);
    return worst_fwd <= 1e-6 && worst_rev <= 1e-6 && worst_slack >= 0.0;
  });

  criterion("OLS reduction identity", [](std::string& d) {
    const Dataset data = sample(paper_default_model(5, 2), 200, 5);
    FitConfig fc;
    fc.tol = 1e-12;
    fc.kkt_tol = 1e-9;
    const FitResult f = fit(data, fc);
    double worst = 0;
    for (int j = 0; j < 5; ++j) {
      const NodeDesign w = build_node_design(data, j);
      const Matrix inv = gram(w).inverse();
      std::vector<DebiasColumn> cols;
      for (Index l = 0; l < w.length(); ++l) {
        DebiasColumn col;
        col.l = l;
        col.m = inv.col(l);
        cols.push_back(col);
      }
      const Vector start = f.beta.node(j) + Vector::Constant(w.length(), 0.05);
      const SageEstimate s = sage_update(start, w, cols);
      worst = std::max(worst, (s.beta_u - oracle::normal_equations_ls(w.W, w.z)).cwiseAbs().maxCoeff());
    }
    d = fmt("max |beta_u - ls| %.2e (tol 1e-8)", worst);
    return worst <= 1e-8;
  });

  StudySummary s400;
  criterion("table analogue n=400", [&](std::string& d) {
    StudyConfig c = table_config(400);
    c.oracle = true;
    s400 = run_study(c).summary;
    print_table(s400);
    const TableStats t = table_stats(s400);
    char b[256];
    std::snprintf(b, sizeof b, "pre %.3f>=.08 post %.4f<=.02 sd [%.2f,%.2f] cov [%.3f,%.3f] rej %.2f", t.pre, t.post,
                  t.sd_lo, t.sd_hi, t.cov_lo, t.cov_hi, t.rej_lo);
    d = b;
    return t.pre >= 0.08 && t.post <= 0.02 && t.sd_lo >= 0.8 && t.sd_hi <= 1.4 && t.cov_lo >= 0.85 &&
           t.cov_hi <= 0.99 && t.rej_lo == 1.0;
  });

  criterion("sample-size trend", [&](std::string& d) {
    if (s400.tracked.empty()) {
      d = "n=400 study unavailable";
      return false;
    }
    const StudySummary s200 = run_study(table_config(200)).summary;
    print_table(s200);
    const StudySummary s800 = run_study(table_config(800)).summary;
    print_table(s800);
    const TableStats a = table_stats(s200), b = table_stats(s400), c = table_stats(s800);
    double cov200 = 0, cov800 = 0;
    for (const auto& r : s200.tracked) cov200 += r.coverage / s200.tracked.size();
    for (const auto& r : s800.tracked) cov800 += r.coverage / s800.tracked.size();
    char buf[256];
    std::snprintf(buf, sizeof buf, "post %.4f -> %.4f -> %.4f, coverage %.3f -> %.3f", a.post, b.post, c.post, cov200,
                  cov800);
    d = buf;
    return a.post >= b.post && b.post >= c.post && cov800 >= cov200 - 0.02;
  });

  criterion("contrast suite", [](std::string& d) {
    StudyConfig c = table_config(400);
    c.lambda.lambda_e = 0.6;
    c.lambda.lambda_g = 0.6 / std::sqrt(2.0);
    c.contrasts = {true, true, true, true};
    c.tracked = {0};
    const StudySummary s = run_study(c).summary;
    double ave = 0, sd_lo = 1e9, sd_hi = 0, cov = 1, rho = 0;
    for (const auto& cs : s.contrasts) {
      std::printf("      case %-3s ave", contrast_name(cs.which));
      for (double v : cs.emp_ave) std::printf(" %.3f", v);
      std::printf(" sd");
      for (double v : cs.emp_sd) std::printf(" %.3f", v);
      std::printf(" cov %.3f", cs.coverage);
      if (cs.correlation) std::printf(" rho %.3f", *cs.correlation);
      std::printf("\n");
      for (double v : cs.emp_ave) ave = std::max(ave, std::fabs(v));
      for (double v : cs.emp_sd) sd_lo = std::min(sd_lo, v), sd_hi = std::max(sd_hi, v);
      cov = std::min(cov, cs.coverage);
      if (cs.correlation) rho = std::fabs(*cs.correlation);
    }
    char b[256];
    std::snprintf(b, sizeof b, "|ave| %.3f<=.25 sd [%.2f,%.2f] cov %.3f>=.85 |rho| %.3f<=.2", ave, sd_lo, sd_hi, cov,
                  rho);
    d = b;
    return s.contrasts.size() == 4 && ave <= 0.25 && sd_lo >= 0.8 && sd_hi <= 1.4 && cov >= 0.85 && rho <= 0.2;
  });

  criterion("timing speedup", [](std::string& d) {
    BenchConfig b;
    b.n_list = {100};
    b.p_list = {100};
    b.q = 20;
    b.l = 0;
    b.runs = 3;
    const BenchRow r = timing_bench(b).at(0);
    char buf[256];
    std::snprintf(buf, sizeof buf, "direct %.3fs projected %.4fs speedup %.1fx (>=20), objectives %.6g/%.6g",
                  r.direct_seconds, r.projected_seconds, r.speedup(), r.direct_objective, r.projected_objective);
    d = buf;
    return r.speedup() >= 20.0;
  });

  criterion("soft-threshold identities", [](std::string& d) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<long> xs(-(1L << 21), 1L << 21), as(0, 1L << 20);
    const double unit = std::ldexp(1.0, -18);
    long bad = 0;
    Vector x(1), y(1), xy(1);
    for (int i = 0; i < 100000; ++i) {
      const double a = as(rng) * unit, b = as(rng) * unit;
      x[0] = xs(rng) * unit;
      y[0] = xs(rng) * unit;
      xy[0] = x[0] + y[0];
      const double hx = soft_threshold(x, a)[0], hy = soft_threshold(y, b)[0], hxy = soft_threshold(xy, a + b)[0];
      if (std::fabs(hxy) > std::fabs(hx) + std::fabs(hy)) ++bad;
      if (std::fabs(hx) != std::max(std::fabs(x[0]) - a, 0.0)) ++bad;
      if (hx != 0.0 && std::signbit(hx) != std::signbit(x[0])) ++bad;
      if (std::fabs(x[0] - hx) > a) ++bad;
    }
    d = std::to_string(bad) + " violations in 1e5 cases";
    return bad == 0;
  });

  criterion("prox vs numeric minimisation", [](std::string& d) {
    CoefLayout l(2, 2);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 1.5);
    std::uniform_real_distribution<double> ud(0.05, 1.0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      MultiTaskCoef v(l);
      for (Index i = 0; i < v.values().size(); ++i) v.values()[i] = nd(rng);
      const double t = ud(rng), le = ud(rng), lg = ud(rng);
      const MultiTaskCoef x = prox_sparse_group(v, t, le, lg);
      for (int h = 0; h <= 2; ++h) {
        const auto [x1, x2] = oracle::prox_pair_numeric(v.at(0, 1, h), v.at(1, 0, h), t, le, h == 0 ? 0.0 : lg);
        worst = std::max({worst, std::fabs(x.at(0, 1, h) - x1), std::fabs(x.at(1, 0, h) - x2)});
      }
    }
    d = fmt("max deviation %.2e (tol 1e-4)", worst);
    return worst <= 1e-4;
  });

  criterion("eigen-factor reconstruction", [](std::string& d) {
    double worst = 0;
    for (auto [n, p, q] : {std::tuple{20, 8, 3}, std::tuple{400, 10, 4}, std::tuple{100, 30, 10}}) {
      const NodeDesign w = build_node_design(sample(paper_default_model(p, q), n, 3), 0);
      const EigenFactor e = eigen_factor(w);
      const Matrix g = gram(w);
      const Matrix rec = e.V * e.D.asDiagonal() * e.V.transpose();
      worst = std::max(worst, (rec - g).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
    d = fmt("max rel error %.2e (tol 1e-8)", worst);
    return worst <= 1e-8;
  });

  criterion("variance-factor lower bound", [](std::string& d) {
    long cols = 0, bad = 0;
    for (auto [n, p, q] : {std::tuple{20, 8, 3}, std::tuple{400, 30, 10}, std::tuple{60, 10, 4}}) {
      const CoefLayout layout(p, q);
      const NodeDesign w = build_node_design(sample(paper_default_model(p, q), n, 11), 1);
      const Matrix g = gram(w);
      const DebiasConfig c = DebiasConfig::for_sample_size(n);
      std::vector<Index> coords;
      for (Index l = 0; l < layout.node_length(); l += std::max<Index>(1, layout.node_length() / 40)) coords.push_back(l);
      for (const auto& col : solve_columns(eigen_factor(w), layout, coords, c)) {
        ++cols;
        const double bound = (1 - c.alpha - c.gamma) * (1 - c.alpha - c.gamma) / g(col.l, col.l);
        if (col.variance_factor < bound * (1 - 1e-9)) ++bad;
      }
    }
    d = std::to_string(bad) + " of " + std::to_string(cols) + " columns below the bound";
    return bad == 0;
  });

  criterion("noise precision at n=800", [](std::string& d) {
    const PrecisionModel m = paper_default_model(30, 10);
    const MultiTaskCoef truth = true_beta(m);
    std::vector<Index> support;
    for (Index l = 0; l < truth.layout().node_length(); ++l)
      if (truth.node(0)[l] != 0.0) support.push_back(l);
    int within = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      const NodeDesign w = build_node_design(sample(m, 800, substream_seed(5150, {r})), 0);
      const NoiseEstimate ne = estimate_noise(w, support);
      within += std::fabs(ne.sigma_jj_hat - m.sigma_diag[0]) <= 0.1 * m.sigma_diag[0];
    }
    d = std::to_string(within) + "/100 within 10% (need 90)";
    return within >= 90;
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures == 0 ? 0 : 1;
}
