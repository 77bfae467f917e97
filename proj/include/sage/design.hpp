#pragma once

#include "sage/core_types.hpp"
#include "sage/simulator.hpp"

namespace sage {

/// Node-wise regression design: z_j on [z_k | z_k*u_1 | ... | z_k*u_q], k != j,
/// columns ordered as in CoefLayout.
struct NodeDesign {
  int j = 0;
  Matrix W;
  Vector z;

  Index n() const { return W.rows(); }
  Index length() const { return W.cols(); }
};

NodeDesign build_node_design(const Dataset& data, int j);

/// Sigma_hat = W^T W / n.
Matrix gram(const NodeDesign& design);

/// W^T z / n.
Vector cross_moment(const NodeDesign& design);

/// Thin factorisation W / sqrt(n) = U diag(D)^{1/2} V^T with D descending and
/// positive, so that Sigma_hat = V diag(D) V^T and V^T V = I.
struct EigenFactor {
  Matrix U;  // n x r
  Vector D;  // r
  Matrix V;  // L x r
  Index rank() const { return D.size(); }
  Index n = 0;
};

/// Eigenvalues below rank_tol * max eigenvalue are dropped. The eigenproblem is
/// solved on the smaller of W W^T / n (n x n) and W^T W / n (L x L).
EigenFactor eigen_factor(const NodeDesign& design, double rank_tol = 1e-12);

}  // namespace sage
