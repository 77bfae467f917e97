#pragma once

#include <cstdint>
#include <vector>

#include "sage/core_types.hpp"
#include "sage/simulator.hpp"

namespace sage {

struct FitConfig {
  double lambda_e = 0.0;
  double lambda_g = 0.0;
  int max_iter = 20000;
  double tol = 1e-7;      // relative objective change
  double kkt_tol = 1e-5;  // sup-norm of the prox-gradient mapping
  double backtrack = 0.5;
  int threads = 1;

  void validate() const;
};

struct FitResult {
  MultiTaskCoef beta;
  std::vector<double> objective;  // accepted iterates, non-increasing
  double kkt_residual = 0.0;
  std::vector<std::vector<Index>> support;  // per node, flat positions with beta != 0
  int iterations = 0;
  bool converged = false;
  double step = 0.0;  // final step size
};

/// Exact minimiser of (1/2t)||x - v||^2 + lambda_e ||x||_1 + lambda_g sum_{h>=1} ||b_h||_2.
/// Group b_0 carries no group penalty.
MultiTaskCoef prox_sparse_group(const MultiTaskCoef& v, double t, double lambda_e, double lambda_g);

/// Sparse-group-lasso penalty of a stacked coefficient vector.
double sgl_penalty(const MultiTaskCoef& beta, double lambda_e, double lambda_g);

/// Per-node quadratic data of the joint least-squares loss
/// (1/2n) sum_j ||z_j - W_j beta_j||^2, built once and reused across fits.
class FitProblem {
 public:
  enum class Storage { automatic, gram, design };

  static FitProblem build(const Dataset& data, Storage storage = Storage::automatic, int threads = 1);

  const CoefLayout& layout() const { return layout_; }
  Index n() const { return n_; }
  bool uses_gram() const { return use_gram_; }

  /// Loss value; writes the gradient into grad (same length as beta).
  double loss_and_gradient(const Vector& beta, Vector& grad, int threads = 1) const;
  /// Power-iteration estimate of max_j ||W_j^T W_j / n||_2.
  double lipschitz_estimate(int iterations = 60) const;

 private:
  struct Node {
    Matrix gram;  // L x L, gram storage only
    Matrix W;     // n x L, design storage only
    Vector z;     // design storage only
    Vector c;     // W^T z / n
    double half_zz = 0.0;  // ||z||^2 / (2n)
  };
  CoefLayout layout_{2, 1};
  Index n_ = 0;
  bool use_gram_ = true;
  std::vector<Node> nodes_;
};

/// Accelerated proximal gradient with backtracking and function-value restart.
FitResult fit(const FitProblem& problem, const FitConfig& config, const MultiTaskCoef* warm_start = nullptr);
FitResult fit(const Dataset& data, const FitConfig& config);

/// Sup-norm of (beta - prox(beta - t grad)) / t, zero exactly at a minimiser.
double kkt_residual(const FitProblem& problem, const MultiTaskCoef& beta, double lambda_e, double lambda_g,
                    double step);

struct TuningPair {
  double lambda_e;
  double lambda_g;
};

/// Rate-optimal penalties: lambda_e = C sqrt((2 s_e log(ep) + s_g log(eq/s_g)) / (n s_e)),
/// lambda_g = sqrt(s_e/s_g) lambda_e.
TuningPair theory_lambdas(double C, double s_e, double s_g, Index n, int p, int q);

struct CVConfig {
  std::vector<double> grid;          // lambda_e candidates
  double ratio = 0.70710678118654752;  // lambda_g / lambda_e
  int folds = 5;
  std::uint64_t seed = 1;
  FitConfig fit;
};

struct CVResult {
  double lambda_e = 0.0;
  double lambda_g = 0.0;
  std::vector<double> grid;   // sorted largest to smallest
  std::vector<double> error;  // total held-out squared error per grid point
};

/// Row-wise K-fold CV shared by all nodes; warm starts from the largest lambda
/// down; ties go to the larger lambda_e.
CVResult cross_validate(const Dataset& data, const CVConfig& config);

}  // namespace sage
