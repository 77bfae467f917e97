#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include <Eigen/Dense>

namespace sage {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Index algebra for the node-wise coefficient vectors.
///
/// Node j regresses on its p-1 partners, once for the baseline (group h = 0)
/// and once per covariate interaction (h = 1..q). Within a node vector the
/// coefficient for partner k in group h sits at h*(p-1) + rank_j(k), where
/// rank_j(k) skips the excluded node j. All indices are 0-based.
class CoefLayout {
 public:
  CoefLayout(int p, int q);

  int p() const noexcept { return p_; }
  int q() const noexcept { return q_; }
  int group_size() const noexcept { return p_ - 1; }
  int group_count() const noexcept { return q_ + 1; }
  /// Per-node length (p-1)(q+1).
  Index node_length() const noexcept { return static_cast<Index>(p_ - 1) * (q_ + 1); }
  /// Length of the stacked multi-task vector, p(p-1)(q+1).
  Index total_length() const noexcept { return node_length() * p_; }

  Index index_of(int j, int k, int h) const;
  /// Inverse of index_of: flat position within node j -> (partner k, group h).
  std::pair<int, int> partner_of(int j, Index flat) const;

  /// Position of node j's block inside the stacked vector.
  Index node_offset(int j) const;

  static int rank(int j, int k) noexcept { return k < j ? k : k - 1; }
  static int unrank(int j, int r) noexcept { return r < j ? r : r + 1; }

  bool operator==(const CoefLayout&) const = default;

 private:
  int p_;
  int q_;
};

/// Stacked coefficients (beta_1, ..., beta_p) for all node regressions.
class MultiTaskCoef {
 public:
  explicit MultiTaskCoef(const CoefLayout& layout);
  MultiTaskCoef(const CoefLayout& layout, Vector values);

  const CoefLayout& layout() const noexcept { return layout_; }
  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }

  auto node(int j) { return values_.segment(layout_.node_offset(j), layout_.node_length()); }
  auto node(int j) const { return values_.segment(layout_.node_offset(j), layout_.node_length()); }

  double& at(int j, int k, int h) { return values_[layout_.node_offset(j) + layout_.index_of(j, k, h)]; }
  double at(int j, int k, int h) const { return values_[layout_.node_offset(j) + layout_.index_of(j, k, h)]; }

  /// Cross-task group b_h: concatenation of (beta_j)_(h) over all j, length p(p-1).
  Vector cross_task_group(int h) const;
  void set_cross_task_group(int h, const Vector& b);

 private:
  CoefLayout layout_;
  Vector values_;
};

enum class GroupNorm {
  inf2,  // max over groups of the group Euclidean norm
  one2,  // sum over groups of the group Euclidean norm
};

/// Grouped norm of a single node vector; all q+1 groups participate.
double group_norm(std::span<const double> v, const CoefLayout& layout, GroupNorm mode);

}  // namespace sage
