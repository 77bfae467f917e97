#include "sage/simulator.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "sage/error.hpp"
#include "sage/rng.hpp"

namespace sage {

void PrecisionModel::validate() const {
  if (p < 2 || q < 1) throw InvalidArgument("PrecisionModel: need p >= 2 and q >= 1");
  if (static_cast<int>(B.size()) != q + 1)
    throw InvalidArgument("PrecisionModel: expected " + std::to_string(q + 1) + " B matrices, got " +
                          std::to_string(B.size()));
  if (sigma_diag.size() != p) throw InvalidArgument("PrecisionModel: sigma_diag must have length p");
  for (int j = 0; j < p; ++j)
    if (!(sigma_diag[j] > 0.0)) throw InvalidArgument("PrecisionModel: sigma_diag must be positive");
  for (int h = 0; h <= q; ++h) {
    const Matrix& b = B[h];
    if (b.rows() != p || b.cols() != p) throw InvalidArgument("PrecisionModel: B_h must be p x p");
    if (!(b - b.transpose()).isZero(0.0))
      throw InvalidArgument("PrecisionModel: B_" + std::to_string(h) + " is not symmetric");
    for (int j = 0; j < p; ++j) {
      const double expect = h == 0 ? sigma_diag[j] : 0.0;
      if (b(j, j) != expect)
        throw InvalidArgument("PrecisionModel: diagonal of B_" + std::to_string(h) +
                              " must equal " + (h == 0 ? std::string("sigma_diag") : std::string("zero")));
    }
  }
}

Matrix PrecisionModel::omega(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != q) throw InvalidArgument("omega: covariate vector must have length q");
  Matrix om = B[0];
  for (int h = 1; h <= q; ++h)
    if (u[h - 1] != 0.0) om.noalias() += u[h - 1] * B[h];
  return om;
}

Dataset Dataset::from_observations(Matrix U, Matrix X) {
  Matrix gamma = Matrix::Zero(X.cols(), U.cols());
  return from_observations(std::move(U), std::move(X), std::move(gamma));
}

Dataset Dataset::from_observations(Matrix U, Matrix X, Matrix Gamma) {
  if (U.rows() != X.rows())
    throw InvalidArgument("Dataset: U has " + std::to_string(U.rows()) + " rows but X has " +
                          std::to_string(X.rows()));
  if (Gamma.rows() != X.cols() || Gamma.cols() != U.cols())
    throw InvalidArgument("Dataset: Gamma must be p x q");
  Dataset d;
  d.Z = Gamma.isZero(0.0) ? X : Matrix(X - U * Gamma.transpose());
  d.U = std::move(U);
  d.X = std::move(X);
  d.Gamma = std::move(Gamma);
  return d;
}

Dataset Dataset::rows(std::span<const Index> idx) const {
  Dataset d;
  d.U.resize(static_cast<Index>(idx.size()), U.cols());
  d.X.resize(static_cast<Index>(idx.size()), X.cols());
  d.Z.resize(static_cast<Index>(idx.size()), Z.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    d.U.row(static_cast<Index>(r)) = U.row(idx[r]);
    d.X.row(static_cast<Index>(r)) = X.row(idx[r]);
    d.Z.row(static_cast<Index>(r)) = Z.row(idx[r]);
  }
  d.Gamma = Gamma;
  return d;
}

PrecisionModel paper_default_model(int p, int q) {
  if (p < 3) throw InvalidArgument("paper_default_model: need p >= 3");
  if (q < 2) throw InvalidArgument("paper_default_model: need q >= 2");
  PrecisionModel m;
  m.p = p;
  m.q = q;
  m.sigma_diag = Vector::Ones(p);
  m.B.assign(q + 1, Matrix::Zero(p, p));
  m.B[0] = Matrix::Identity(p, p);
  for (int h = 1; h <= 2; ++h) {
    m.B[h](0, 1) = 0.3;
    m.B[h](1, 0) = 0.3;
  }
  return m;
}

MultiTaskCoef true_beta(const PrecisionModel& model) {
  model.validate();
  CoefLayout layout(model.p, model.q);
  MultiTaskCoef beta(layout);
  for (int j = 0; j < model.p; ++j)
    for (int h = 0; h <= model.q; ++h)
      for (int k = 0; k < model.p; ++k)
        if (k != j) beta.at(j, k, h) = -model.B[h](j, k) / model.sigma_diag[j];
  return beta;
}

Dataset sample(const PrecisionModel& model, Index n, std::uint64_t seed) {
  model.validate();
  if (n < 1) throw InvalidArgument("sample: need n >= 1");
  const int p = model.p;
  const int q = model.q;
  Matrix U(n, q);
  Matrix X(n, p);
  std::vector<double> u(q);
  Vector zeta(p);
  for (Index i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(i)});
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int h = 0; h < q; ++h) u[h] = coin(rng) ? 1.0 : 0.0;
    for (int k = 0; k < p; ++k) zeta[k] = gauss(rng);

    Eigen::LLT<Matrix> llt(model.omega(u));
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Omega(u) is not positive definite at observation " << i << ", u = (";
      for (int h = 0; h < q; ++h) msg << (h ? "," : "") << u[h];
      msg << ")";
      throw PositiveDefinitenessViolation(u, msg.str());
    }
    // Omega = L L^T, so x = L^{-T} zeta has covariance Omega^{-1}.
    const Vector x = llt.matrixU().solve(zeta);
    for (int h = 0; h < q; ++h) U(i, h) = u[h];
    X.row(i) = x.transpose();
  }
  return Dataset::from_observations(std::move(U), std::move(X));
}

}  // namespace sage
