#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sage/core_types.hpp"
#include "sage/design.hpp"

namespace sage {

struct DebiasConfig {
  double alpha = 0.05;      // soft-threshold level
  double gamma = 0.1;       // radius of the grouped constraint
  double tol = 1e-8;        // ADMM primal/dual residual tolerance
  double feas_tol = 1e-9;   // allowed excess of the constraint over gamma
  int max_iter = 50000;
  double rho = 1.0;         // initial ADMM penalty
  bool adapt_rho = true;    // residual balancing
  int threads = 1;          // used by solve_columns

  void validate() const;
  /// alpha = 1/sqrt(n), gamma = 2/sqrt(n).
  static DebiasConfig for_sample_size(Index n);
};

struct DebiasParameters {
  double alpha;
  double gamma;
};
/// alpha = C sqrt(log(pq)/n), gamma = sqrt(s_e/s_g) alpha.
DebiasParameters theory_debias_parameters(double C, double s_e, double s_g, Index n, int p, int q);

enum class SolveStatus { converged, max_iter };

/// One column m_l of the inverse-Gram surrogate.
struct DebiasColumn {
  Index l = 0;
  Vector m;      // length L
  Vector theta;  // length r (projected solver only)
  double variance_factor = 0.0;    // m^T Sigma_hat m
  double feasibility_slack = 0.0;  // gamma - ||H_alpha(Sigma_hat m - e_l)||_{inf,2}
  double duality_gap = 0.0;        // objective minus the Lagrangian dual bound at the final multiplier
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  double seconds = 0.0;
};

/// Pointwise sign(x) (|x| - alpha)_+.
Vector soft_threshold(const Vector& x, double alpha);

/// ||H_alpha(x)||_{inf,2} over the q+1 groups of size p-1.
double thresholded_group_norm(std::span<const double> x, const CoefLayout& layout, double alpha);

/// Euclidean projection onto {x : ||H_alpha(x_g)||_2 <= gamma for every group g}, in place.
void project_constraint_set(std::span<double> x, const CoefLayout& layout, double alpha, double gamma);

/// Projected problem: min theta^T D theta s.t. ||H_alpha(V D theta - e_l)||_{inf,2} <= gamma,
/// lifted to m = V theta. Per-iteration work is O(n L).
DebiasColumn solve_projected(const EigenFactor& eigen, const CoefLayout& layout, Index l, const DebiasConfig& config);

/// Full-space problem: min m^T S m s.t. ||H_alpha(S m - e_l)||_{inf,2} <= gamma with S = Sigma_hat.
/// Per-iteration work is O(L^2); kept as an oracle and timing baseline.
DebiasColumn solve_direct(const Matrix& gram, const CoefLayout& layout, Index l, const DebiasConfig& config);

/// Objective and slack of an arbitrary candidate m under the full-space constraint.
DebiasColumn evaluate_column(const Matrix& gram, const CoefLayout& layout, Index l, const Vector& m,
                             const DebiasConfig& config);

/// Solves the requested coordinates in parallel (config.threads) against one shared factor.
std::vector<DebiasColumn> solve_columns(const EigenFactor& eigen, const CoefLayout& layout,
                                        std::span<const Index> coords, const DebiasConfig& config);

/// Debiased node estimate; only coordinates with a column are updated.
struct SageEstimate {
  int j = 0;
  Vector beta_u;
  std::vector<bool> debiased;
  std::vector<DebiasColumn> columns;

  const DebiasColumn* column(Index l) const;
};

/// beta_u_l = beta_l + m_l^T W^T (z - W beta) / n for every supplied column.
SageEstimate sage_update(const Vector& beta_j, const NodeDesign& design, std::vector<DebiasColumn> columns);

}  // namespace sage
