#include "sage/debias.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "sage/error.hpp"
#include "sage/parallel.hpp"
#include "sage/simd/kernels.hpp"

namespace sage {
namespace {

using Clock = std::chrono::steady_clock;

std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Lagrangian dual bound -1/4 y^T S y - y_l - alpha ||y||_1 - gamma ||y||_{1,2}, given q_form = y^T S y.
double dual_bound(const Vector& y, double q_form, Index l, const CoefLayout& layout, double alpha, double gamma) {
  const Index g = layout.group_size();
  double group_sum = 0.0;
  for (int h = 0; h < layout.group_count(); ++h) group_sum += y.segment(h * g, g).norm();
  return -0.25 * q_form - y[l] - alpha * y.lpNorm<1>() - gamma * group_sum;
}

struct AdmmOutcome {
  int iterations = 0;
  bool converged = false;
  double primal = 0.0;
  Vector u;  // scaled multiplier
  double rho = 1.0;
};

// Scaled-form ADMM for  min f(x)  s.t.  A x - e_l = r,  r in K.
// `update(b, rho, Ax)` minimises f(x) + rho/2 ||A x - b||^2, stores x internally and writes A x.
template <class Update>
AdmmOutcome run_admm(Update&& update, const CoefLayout& layout, Index l, const DebiasConfig& cfg) {
  const Index L = layout.node_length();
  const double gamma_eff = cfg.gamma * (1.0 - 1e-6);
  const double sqrtL = std::sqrt(static_cast<double>(L));

  Vector r = Vector::Zero(L);
  r[l] = -1.0;
  project_constraint_set(as_span(r), layout, cfg.alpha, gamma_eff);
  Vector u = Vector::Zero(L), b(L), Ax(L), v(L), r_old(L);
  double rho = cfg.rho;

  AdmmOutcome out;
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    b = r - u;
    b[l] += 1.0;
    update(b, rho, Ax);

    r_old = r;
    v = Ax + u;
    v[l] -= 1.0;
    r = v;
    project_constraint_set(as_span(r), layout, cfg.alpha, gamma_eff);
    u = v - r;

    Vector res = Ax - r;
    res[l] -= 1.0;
    const double pri = res.norm();
    const double dual = rho * (r - r_old).norm();
    const double eps_pri = cfg.tol * (sqrtL + std::max({Ax.norm(), r.norm(), 1.0}));
    const double eps_dual = cfg.tol * (sqrtL + rho * u.norm());
    out.primal = pri;

    if (pri <= eps_pri && dual <= eps_dual) {
      Vector shifted = Ax;
      shifted[l] -= 1.0;
      const double cn = thresholded_group_norm(as_span(shifted), layout, cfg.alpha);
      if (cn <= cfg.gamma + cfg.feas_tol) {
        out.converged = true;
        ++it;
        break;
      }
    }
    if (cfg.adapt_rho && (it + 1) % 25 == 0) {
      if (pri > 10.0 * dual) {
        rho *= 2.0;
        u *= 0.5;
      } else if (dual > 10.0 * pri) {
        rho *= 0.5;
        u *= 2.0;
      }
    }
  }
  out.iterations = it;
  out.u = std::move(u);
  out.rho = rho;
  return out;
}

void check_inputs(const CoefLayout& layout, Index L, Index l, const DebiasConfig& cfg) {
  cfg.validate();
  if (L != layout.node_length()) throw InvalidArgument("debias: factor dimension does not match the layout");
  if (l < 0 || l >= L) throw InvalidArgument("debias: coordinate " + std::to_string(l) + " out of range");
}

void finish(DebiasColumn& col, const AdmmOutcome& out) {
  col.iterations = out.iterations;
  col.status = out.converged ? SolveStatus::converged : SolveStatus::max_iter;
  if (!out.converged && out.primal > 1e-3) {
    throw Infeasible("debias: constraint set appears empty for coordinate " + std::to_string(col.l) +
                     " (primal residual " + std::to_string(out.primal) + " after " +
                     std::to_string(out.iterations) + " iterations); alpha/gamma too small for this design");
  }
}

}  // namespace

void DebiasConfig::validate() const {
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw InvalidArgument("DebiasConfig: alpha and gamma must be > 0");
  if (!(tol > 0.0) || !(feas_tol >= 0.0)) throw InvalidArgument("DebiasConfig: bad tolerances");
  if (max_iter < 1 || !(rho > 0.0)) throw InvalidArgument("DebiasConfig: bad iteration limit or rho");
}

DebiasConfig DebiasConfig::for_sample_size(Index n) {
  DebiasConfig c;
  c.alpha = 1.0 / std::sqrt(static_cast<double>(n));
  c.gamma = 2.0 / std::sqrt(static_cast<double>(n));
  return c;
}

DebiasParameters theory_debias_parameters(double C, double s_e, double s_g, Index n, int p, int q) {
  if (!(C > 0.0) || !(s_e > 0.0) || !(s_g > 0.0) || n < 1)
    throw InvalidArgument("theory_debias_parameters: C, s_e, s_g and n must be positive");
  const double a = C * std::sqrt(std::log(static_cast<double>(p) * q) / static_cast<double>(n));
  return {a, std::sqrt(s_e / s_g) * a};
}

Vector soft_threshold(const Vector& x, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("soft_threshold: alpha must be >= 0");
  Vector out(x.size());
  simd::kernels().soft_threshold(as_span(x), alpha, as_span(out));
  return out;
}

double thresholded_group_norm(std::span<const double> x, const CoefLayout& layout, double alpha) {
  if (static_cast<Index>(x.size()) != layout.node_length())
    throw InvalidArgument("thresholded_group_norm: length mismatch");
  const auto& k = simd::kernels();
  const std::size_t g = static_cast<std::size_t>(layout.group_size());
  double best = 0.0;
  for (int h = 0; h < layout.group_count(); ++h)
    best = std::max(best, k.thresholded_sum_squares(x.subspan(h * g, g), alpha));
  return std::sqrt(best);
}

void project_constraint_set(std::span<double> x, const CoefLayout& layout, double alpha, double gamma) {
  // Within a group the KKT conditions shrink every exceedance |x_i| - alpha by the
  // same factor, so the scale that puts the thresholded norm on gamma is explicit.
  const auto& k = simd::kernels();
  const std::size_t g = static_cast<std::size_t>(layout.group_size());
  for (int h = 0; h < layout.group_count(); ++h) {
    auto grp = x.subspan(h * g, g);
    const double excess = std::sqrt(k.thresholded_sum_squares(grp, alpha));
    if (excess > gamma) k.shrink_exceedance(grp, alpha, gamma / excess);
  }
}

DebiasColumn solve_projected(const EigenFactor& eigen, const CoefLayout& layout, Index l, const DebiasConfig& cfg) {
  const Index L = eigen.V.rows();
  check_inputs(layout, L, l, cfg);
  const auto start = Clock::now();
  const Index r = eigen.rank();
  const auto& k = simd::kernels();
  const double* V = eigen.V.data();
  const auto rows = static_cast<std::size_t>(L);
  const auto cols = static_cast<std::size_t>(r);

  Vector theta = Vector::Zero(r), vtb(r), dtheta(r);
  auto update = [&](const Vector& b, double rho, Vector& Ax) {
    // (2D + rho D V^T V D) theta = rho D V^T b  with V^T V = I  =>  diagonal solve
    k.gemv_t(V, rows, cols, rows, as_span(b), as_span(vtb));
    theta = (rho * vtb.array() / (2.0 + rho * eigen.D.array())).matrix();
    dtheta = eigen.D.cwiseProduct(theta);
    k.gemv(V, rows, cols, rows, as_span(dtheta), as_span(Ax));
  };
  const AdmmOutcome out = run_admm(update, layout, l, cfg);

  DebiasColumn col;
  col.l = l;
  col.theta = theta;
  col.m = eigen.V * theta;
  dtheta = eigen.D.cwiseProduct(theta);
  Vector Ax = eigen.V * dtheta;
  col.variance_factor = theta.dot(dtheta);
  Vector shifted = Ax;
  shifted[l] -= 1.0;
  col.feasibility_slack = cfg.gamma - thresholded_group_norm(as_span(shifted), layout, cfg.alpha);
  const Vector y = out.rho * out.u;
  const Vector half = eigen.D.cwiseSqrt().cwiseProduct(eigen.V.transpose() * y);
  col.duality_gap = col.variance_factor - dual_bound(y, half.squaredNorm(), l, layout, cfg.alpha, cfg.gamma);
  finish(col, out);
  col.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return col;
}

DebiasColumn solve_direct(const Matrix& gram, const CoefLayout& layout, Index l, const DebiasConfig& cfg) {
  const Index L = gram.rows();
  if (gram.cols() != L) throw InvalidArgument("solve_direct: Gram matrix must be square");
  check_inputs(layout, L, l, cfg);
  const auto start = Clock::now();

  // (2S + rho S^2) m = rho S b is solved by m = rho (2I + rho S)^{-1} b, and then S m = b - 2m/rho.
  std::map<double, Eigen::LLT<Matrix>> factors;
  Vector m = Vector::Zero(L);
  auto update = [&](const Vector& b, double rho, Vector& Ax) {
    auto it = factors.find(rho);
    if (it == factors.end()) {
      Matrix sys = rho * gram;
      sys.diagonal().array() += 2.0;
      it = factors.emplace(rho, Eigen::LLT<Matrix>(sys)).first;
      if (it->second.info() != Eigen::Success) throw NumericalError("solve_direct: factorisation failed");
    }
    m = rho * it->second.solve(b);
    Ax = b - (2.0 / rho) * m;
  };
  const AdmmOutcome out = run_admm(update, layout, l, cfg);

  DebiasColumn col = evaluate_column(gram, layout, l, m, cfg);
  const Vector y = out.rho * out.u;
  col.duality_gap = col.variance_factor - dual_bound(y, y.dot(gram * y), l, layout, cfg.alpha, cfg.gamma);
  finish(col, out);
  col.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return col;
}

DebiasColumn evaluate_column(const Matrix& gram, const CoefLayout& layout, Index l, const Vector& m,
                             const DebiasConfig& cfg) {
  check_inputs(layout, gram.rows(), l, cfg);
  if (m.size() != gram.rows()) throw InvalidArgument("evaluate_column: m has the wrong length");
  DebiasColumn col;
  col.l = l;
  col.m = m;
  const Vector sm = gram * m;
  col.variance_factor = m.dot(sm);
  Vector shifted = sm;
  shifted[l] -= 1.0;
  col.feasibility_slack = cfg.gamma - thresholded_group_norm(as_span(shifted), layout, cfg.alpha);
  col.status = SolveStatus::converged;
  return col;
}

std::vector<DebiasColumn> solve_columns(const EigenFactor& eigen, const CoefLayout& layout,
                                        std::span<const Index> coords, const DebiasConfig& config) {
  std::vector<DebiasColumn> cols(coords.size());
  parallel_for(static_cast<std::ptrdiff_t>(coords.size()), config.threads,
               [&](std::ptrdiff_t i) { cols[i] = solve_projected(eigen, layout, coords[i], config); });
  return cols;
}

const DebiasColumn* SageEstimate::column(Index l) const {
  for (const auto& c : columns)
    if (c.l == l) return &c;
  return nullptr;
}

SageEstimate sage_update(const Vector& beta_j, const NodeDesign& design, std::vector<DebiasColumn> columns) {
  if (beta_j.size() != design.length()) throw InvalidArgument("sage_update: beta has the wrong length");
  SageEstimate est;
  est.j = design.j;
  est.beta_u = beta_j;
  est.debiased.assign(static_cast<std::size_t>(beta_j.size()), false);
  const Vector resid = design.z - design.W * beta_j;
  const Vector score = design.W.transpose() * resid / static_cast<double>(design.n());
  for (const auto& c : columns) {
    if (c.m.size() != beta_j.size()) throw InvalidArgument("sage_update: column has the wrong length");
    est.beta_u[c.l] = beta_j[c.l] + c.m.dot(score);
    est.debiased[static_cast<std::size_t>(c.l)] = true;
  }
  est.columns = std::move(columns);
  return est;
}

}  // namespace sage
