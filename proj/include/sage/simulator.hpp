#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sage/core_types.hpp"

namespace sage {

/// Omega(u) = B_0 + sum_h B_h u_h with a covariate-free diagonal.
struct PrecisionModel {
  int p = 0;
  int q = 0;
  std::vector<Matrix> B;  // q+1 symmetric p x p matrices
  Vector sigma_diag;      // diag(Omega(u)) for every u

  /// Throws InvalidArgument unless shapes, symmetry and the diagonal contract hold.
  void validate() const;
  Matrix omega(std::span<const double> u) const;
  CoefLayout layout() const { return CoefLayout(p, q); }
};

/// Observed covariates U (n x q), responses X (n x p), known mean map Gamma (p x q)
/// and the centred responses Z = X - U Gamma^T.
struct Dataset {
  Matrix U;
  Matrix X;
  Matrix Gamma;
  Matrix Z;

  static Dataset from_observations(Matrix U, Matrix X);
  static Dataset from_observations(Matrix U, Matrix X, Matrix Gamma);

  Index n() const { return X.rows(); }
  int p() const { return static_cast<int>(X.cols()); }
  int q() const { return static_cast<int>(U.cols()); }
  CoefLayout layout() const { return CoefLayout(p(), q()); }

  /// Row subset, used by cross-validation folds.
  Dataset rows(std::span<const Index> idx) const;
};

/// B_0 = I, (B_h)_{12} = (B_h)_{21} = 0.3 for h = 1, 2, sigma^{jj} = 1.
PrecisionModel paper_default_model(int p, int q);

/// beta_{jkh} = -(B_h)_{jk} / sigma^{jj}.
MultiTaskCoef true_beta(const PrecisionModel& model);

/// n draws: u ~ Bernoulli(0.5)^q, x | u ~ N(0, Omega(u)^{-1}). Observation i uses
/// the stream make_stream(seed, {i}).
Dataset sample(const PrecisionModel& model, Index n, std::uint64_t seed);

}  // namespace sage
