#include "sage/design.hpp"

#include <cmath>
#include <string>

#include "sage/error.hpp"

namespace sage {

NodeDesign build_node_design(const Dataset& data, int j) {
  const int p = data.p();
  const int q = data.q();
  if (j < 0 || j >= p) throw InvalidArgument("build_node_design: node " + std::to_string(j) + " out of range");
  const CoefLayout layout(p, q);
  const Index n = data.n();
  NodeDesign d;
  d.j = j;
  d.z = data.Z.col(j);
  d.W.resize(n, layout.node_length());
  const Index g = layout.group_size();
  for (int k = 0; k < p; ++k) {
    if (k == j) continue;
    const int r = CoefLayout::rank(j, k);
    d.W.col(r) = data.Z.col(k);
    for (int h = 1; h <= q; ++h) d.W.col(h * g + r) = data.Z.col(k).cwiseProduct(data.U.col(h - 1));
  }
  return d;
}

Matrix gram(const NodeDesign& design) {
  const Index L = design.length();
  Matrix g = Matrix::Zero(L, L);
  g.selfadjointView<Eigen::Lower>().rankUpdate(design.W.transpose(), 1.0 / static_cast<double>(design.n()));
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

Vector cross_moment(const NodeDesign& design) {
  return design.W.transpose() * design.z / static_cast<double>(design.n());
}

EigenFactor eigen_factor(const NodeDesign& design, double rank_tol) {
  const Index n = design.n();
  const Index L = design.length();
  if (n < 1) throw DegenerateDesign("eigen_factor: empty design");
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool sample_side = n <= L;

  Matrix small;
  if (sample_side) {
    small = Matrix::Zero(n, n);
    small.selfadjointView<Eigen::Lower>().rankUpdate(design.W, inv_n);
  } else {
    small = Matrix::Zero(L, L);
    small.selfadjointView<Eigen::Lower>().rankUpdate(design.W.transpose(), inv_n);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(small);  // reads the lower triangle only
  if (es.info() != Eigen::Success) throw DegenerateDesign("eigen_factor: eigensolver failed");

  const Vector& ev = es.eigenvalues();  // ascending
  const Index m = ev.size();
  const double top = ev[m - 1];
  if (!(top > 0.0)) throw DegenerateDesign("eigen_factor: design is identically zero");
  Index r = 0;
  while (r < m && ev[m - 1 - r] > rank_tol * top) ++r;
  if (r == 0) throw DegenerateDesign("eigen_factor: no eigenvalue above tolerance");

  EigenFactor f;
  f.n = n;
  f.D.resize(r);
  Matrix vecs(m, r);
  for (Index i = 0; i < r; ++i) {
    f.D[i] = ev[m - 1 - i];
    vecs.col(i) = es.eigenvectors().col(m - 1 - i);
  }
  const Vector scale = (f.D.array().sqrt() * std::sqrt(static_cast<double>(n))).inverse();
  if (sample_side) {
    f.U = std::move(vecs);
    f.V = (design.W.transpose() * f.U) * scale.asDiagonal();
  } else {
    f.V = std::move(vecs);
    f.U = (design.W * f.V) * scale.asDiagonal();
  }
  return f;
}

}  // namespace sage
