#include "sage/sgl_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sage/design.hpp"
#include "sage/error.hpp"
#include "sage/parallel.hpp"
#include "sage/rng.hpp"
#include "sage/simd/kernels.hpp"

namespace sage {
namespace {

std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// In-place prox on the raw stacked vector.
void prox_in_place(Vector& v, const CoefLayout& layout, double t, double lambda_e, double lambda_g) {
  const auto& k = simd::kernels();
  if (lambda_e > 0.0) k.soft_threshold(as_span(v), t * lambda_e, as_span(v));
  if (lambda_g <= 0.0) return;
  const Index g = layout.group_size();
  const Index L = layout.node_length();
  const double thresh = t * lambda_g;
  for (int h = 1; h <= layout.q(); ++h) {
    double ss = 0.0;
    for (int j = 0; j < layout.p(); ++j) ss += k.sum_squares({v.data() + j * L + h * g, static_cast<std::size_t>(g)});
    const double nrm = std::sqrt(ss);
    const double scale = nrm > thresh ? 1.0 - thresh / nrm : 0.0;
    if (scale == 1.0) continue;
    for (int j = 0; j < layout.p(); ++j) v.segment(j * L + h * g, g) *= scale;
  }
}

double penalty_raw(const Vector& v, const CoefLayout& layout, double lambda_e, double lambda_g) {
  double pen = lambda_e > 0.0 ? lambda_e * v.lpNorm<1>() : 0.0;
  if (lambda_g > 0.0) {
    const Index g = layout.group_size();
    const Index L = layout.node_length();
    for (int h = 1; h <= layout.q(); ++h) {
      double ss = 0.0;
      for (int j = 0; j < layout.p(); ++j) ss += v.segment(j * L + h * g, g).squaredNorm();
      pen += lambda_g * std::sqrt(ss);
    }
  }
  return pen;
}

}  // namespace

void FitConfig::validate() const {
  if (!(lambda_e >= 0.0) || !(lambda_g >= 0.0)) throw InvalidArgument("FitConfig: penalties must be >= 0");
  if (!(tol > 0.0) || !(kkt_tol > 0.0)) throw InvalidArgument("FitConfig: tolerances must be > 0");
  if (max_iter < 1) throw InvalidArgument("FitConfig: max_iter must be >= 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("FitConfig: backtrack must lie in (0,1)");
}

MultiTaskCoef prox_sparse_group(const MultiTaskCoef& v, double t, double lambda_e, double lambda_g) {
  if (!(t > 0.0)) throw InvalidArgument("prox_sparse_group: step must be > 0");
  Vector out = v.values();
  prox_in_place(out, v.layout(), t, lambda_e, lambda_g);
  return MultiTaskCoef(v.layout(), std::move(out));
}

double sgl_penalty(const MultiTaskCoef& beta, double lambda_e, double lambda_g) {
  return penalty_raw(beta.values(), beta.layout(), lambda_e, lambda_g);
}

FitProblem FitProblem::build(const Dataset& data, Storage storage, int threads) {
  FitProblem prob;
  prob.layout_ = data.layout();
  prob.n_ = data.n();
  if (prob.n_ < 1) throw InvalidArgument("FitProblem: empty dataset");
  const int p = prob.layout_.p();
  const double L = static_cast<double>(prob.layout_.node_length());
  if (storage == Storage::automatic) storage = p * L * L <= 3.0e7 ? Storage::gram : Storage::design;
  prob.use_gram_ = storage == Storage::gram;
  prob.nodes_.resize(p);
  parallel_for(p, threads, [&](std::ptrdiff_t j) {
    NodeDesign d = build_node_design(data, static_cast<int>(j));
    Node& node = prob.nodes_[j];
    node.c = cross_moment(d);
    node.half_zz = d.z.squaredNorm() / (2.0 * static_cast<double>(d.n()));
    if (prob.use_gram_) {
      node.gram = gram(d);
    } else {
      node.W = std::move(d.W);
      node.z = std::move(d.z);
    }
  });
  return prob;
}

double FitProblem::loss_and_gradient(const Vector& beta, Vector& grad, int threads) const {
  const int p = layout_.p();
  const Index L = layout_.node_length();
  grad.resize(beta.size());
  std::vector<double> loss(p, 0.0);
  const auto& k = simd::kernels();
  parallel_for(p, threads, [&](std::ptrdiff_t j) {
    const Node& node = nodes_[j];
    const auto b = beta.segment(j * L, L);
    auto g = grad.segment(j * L, L);
    if (use_gram_) {
      // Sigma_hat * beta_j over the nonzero coordinates only.
      Vector s = Vector::Zero(L);
      for (Index l = 0; l < L; ++l)
        if (b[l] != 0.0) k.axpy(b[l], {node.gram.col(l).data(), static_cast<std::size_t>(L)}, as_span(s));
      loss[j] = 0.5 * b.dot(s) - node.c.dot(b) + node.half_zz;
      g = s - node.c;
    } else {
      Vector fitted = Vector::Zero(n_);
      for (Index l = 0; l < L; ++l)
        if (b[l] != 0.0) k.axpy(b[l], {node.W.col(l).data(), static_cast<std::size_t>(n_)}, as_span(fitted));
      const Vector resid = fitted - node.z;
      const double inv_n = 1.0 / static_cast<double>(n_);
      loss[j] = 0.5 * inv_n * resid.squaredNorm();
      Vector wt(L);
      k.gemv_t(node.W.data(), static_cast<std::size_t>(n_), static_cast<std::size_t>(L),
               static_cast<std::size_t>(n_), as_span(resid), as_span(wt));
      g = wt * inv_n;
    }
  });
  // fixed summation order keeps results independent of the thread count
  return std::accumulate(loss.begin(), loss.end(), 0.0);
}

double FitProblem::lipschitz_estimate(int iterations) const {
  const Index L = layout_.node_length();
  double best = 0.0;
  for (const Node& node : nodes_) {
    Vector v = Vector::Ones(L) / std::sqrt(static_cast<double>(L));
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Vector w = use_gram_ ? Vector(node.gram * v)
                           : Vector(node.W.transpose() * (node.W * v) / static_cast<double>(n_));
      const double nrm = w.norm();
      if (nrm == 0.0) break;
      lambda = nrm;
      v = w / nrm;
    }
    best = std::max(best, lambda);
  }
  return best;
}

double kkt_residual(const FitProblem& problem, const MultiTaskCoef& beta, double lambda_e, double lambda_g,
                    double step) {
  Vector grad;
  problem.loss_and_gradient(beta.values(), grad);
  Vector moved = beta.values() - step * grad;
  prox_in_place(moved, beta.layout(), step, lambda_e, lambda_g);
  return (beta.values() - moved).lpNorm<Eigen::Infinity>() / step;
}

FitResult fit(const FitProblem& problem, const FitConfig& config, const MultiTaskCoef* warm_start) {
  config.validate();
  const CoefLayout& layout = problem.layout();
  const double le = config.lambda_e;
  const double lg = config.lambda_g;
  const int threads = config.threads;

  Vector x = warm_start ? warm_start->values() : Vector::Zero(layout.total_length());
  if (x.size() != layout.total_length()) throw InvalidArgument("fit: warm start has the wrong layout");

  Vector gx, gy, gn;
  double fx = problem.loss_and_gradient(x, gx, threads);
  double F = fx + penalty_raw(x, layout, le, lg);

  const double lip = problem.lipschitz_estimate();
  double step = lip > 0.0 ? 1.0 / lip : 1.0;

  FitResult res{MultiTaskCoef(layout), {F}, 0.0, {}, 0, false, step};

  auto kkt_at = [&](const Vector& point, const Vector& grad) {
    Vector moved = point - step * grad;
    prox_in_place(moved, layout, step, le, lg);
    return (point - moved).lpNorm<Eigen::Infinity>() / step;
  };

  Vector y = x, x_old, xn;
  double fy = fx;
  gy = gx;
  double tk = 1.0;
  bool momentum = false;
  double kkt = kkt_at(x, gx);

  int it = 0;
  for (; it < config.max_iter; ++it) {
    double fn = 0.0;
    for (;;) {
      xn = y - step * gy;
      prox_in_place(xn, layout, step, le, lg);
      fn = problem.loss_and_gradient(xn, gn, threads);
      const Vector d = xn - y;
      const double bound = fy + gy.dot(d) + d.squaredNorm() / (2.0 * step);
      if (fn <= bound + 1e-12 * std::max(1.0, std::fabs(fy))) break;
      step *= config.backtrack;
    }
    const double Fn = fn + penalty_raw(xn, layout, le, lg);

    if (Fn > F) {
      if (momentum) {
        // restart from the last accepted point; the next step is a plain prox-gradient step
        y = x;
        fy = fx;
        gy = gx;
        tk = 1.0;
        momentum = false;
        continue;
      }
      // a plain step no longer decreases the objective: numerically stationary
      kkt = kkt_at(x, gx);
      res.converged = kkt <= config.kkt_tol;
      break;
    }

    x_old.swap(x);
    x.swap(xn);
    fx = fn;
    gx.swap(gn);
    const double rel = (F - Fn) / std::max(1.0, std::fabs(Fn));
    F = Fn;
    res.objective.push_back(F);
    kkt = kkt_at(x, gx);
    if (rel <= config.tol && kkt <= config.kkt_tol) {
      res.converged = true;
      ++it;
      break;
    }

    const double tk1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = x + ((tk - 1.0) / tk1) * (x - x_old);
    tk = tk1;
    momentum = true;
    fy = problem.loss_and_gradient(y, gy, threads);
  }

  res.iterations = it;
  res.kkt_residual = kkt;
  res.step = step;
  res.beta = MultiTaskCoef(layout, std::move(x));
  const Index L = layout.node_length();
  res.support.resize(layout.p());
  for (int j = 0; j < layout.p(); ++j)
    for (Index l = 0; l < L; ++l)
      if (res.beta.values()[j * L + l] != 0.0) res.support[j].push_back(l);
  return res;
}

FitResult fit(const Dataset& data, const FitConfig& config) {
  config.validate();
  return fit(FitProblem::build(data, FitProblem::Storage::automatic, config.threads), config);
}

TuningPair theory_lambdas(double C, double s_e, double s_g, Index n, int p, int q) {
  if (!(C > 0.0) || !(s_e > 0.0) || !(s_g > 0.0) || n < 1)
    throw InvalidArgument("theory_lambdas: C, s_e, s_g and n must be positive");
  const double e = std::exp(1.0);
  const double num = 2.0 * s_e * std::log(e * p) + s_g * std::log(e * q / s_g);
  const double le = C * std::sqrt(num / (static_cast<double>(n) * s_e));
  return {le, std::sqrt(s_e / s_g) * le};
}

CVResult cross_validate(const Dataset& data, const CVConfig& config) {
  if (config.grid.empty()) throw InvalidArgument("cross_validate: empty lambda grid");
  if (config.folds < 2) throw InvalidArgument("cross_validate: need at least 2 folds");
  const Index n = data.n();
  const int K = config.folds;
  if (n / K < 2 || n - (n + K - 1) / K < 2)
    throw InvalidArgument("cross_validate: fold too small (" + std::to_string(n) + " rows, " + std::to_string(K) +
                          " folds)");

  CVResult out;
  out.grid = config.grid;
  std::sort(out.grid.begin(), out.grid.end(), std::greater<>());
  out.error.assign(out.grid.size(), 0.0);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng = make_stream(config.seed, {0x43560000u});
  std::shuffle(perm.begin(), perm.end(), rng);

  const CoefLayout layout = data.layout();
  const Index L = layout.node_length();
  for (int f = 0; f < K; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (i % K == f ? test : train).push_back(perm[static_cast<std::size_t>(i)]);
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const Dataset tr = data.rows(train);
    const Dataset te = data.rows(test);
    const FitProblem prob = FitProblem::build(tr, FitProblem::Storage::automatic, config.fit.threads);
    std::vector<NodeDesign> test_designs;
    for (int j = 0; j < layout.p(); ++j) test_designs.push_back(build_node_design(te, j));

    MultiTaskCoef warm(layout);
    for (std::size_t g = 0; g < out.grid.size(); ++g) {
      FitConfig cfg = config.fit;
      cfg.lambda_e = out.grid[g];
      cfg.lambda_g = config.ratio * out.grid[g];
      FitResult r = fit(prob, cfg, &warm);
      double err = 0.0;
      for (int j = 0; j < layout.p(); ++j) {
        const auto b = r.beta.values().segment(j * L, L);
        err += (test_designs[j].z - test_designs[j].W * b).squaredNorm();
      }
      out.error[g] += err;
      warm = std::move(r.beta);
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < out.grid.size(); ++g)
    if (out.error[g] < out.error[best]) best = g;
  out.lambda_e = out.grid[best];
  out.lambda_g = config.ratio * out.grid[best];
  return out;
}

}  // namespace sage
