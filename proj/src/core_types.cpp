#include "sage/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sage/error.hpp"

namespace sage {

CoefLayout::CoefLayout(int p, int q) : p_(p), q_(q) {
  if (p < 2) throw InvalidArgument("CoefLayout: need p >= 2, got " + std::to_string(p));
  if (q < 1) throw InvalidArgument("CoefLayout: need q >= 1, got " + std::to_string(q));
}

Index CoefLayout::index_of(int j, int k, int h) const {
  if (j < 0 || j >= p_) throw InvalidArgument("index_of: node " + std::to_string(j) + " out of range");
  if (k < 0 || k >= p_) throw InvalidArgument("index_of: partner " + std::to_string(k) + " out of range");
  if (j == k) throw InvalidArgument("index_of: partner equals node " + std::to_string(j));
  if (h < 0 || h > q_) throw InvalidArgument("index_of: group " + std::to_string(h) + " out of range");
  return static_cast<Index>(h) * (p_ - 1) + rank(j, k);
}

std::pair<int, int> CoefLayout::partner_of(int j, Index flat) const {
  if (j < 0 || j >= p_) throw InvalidArgument("partner_of: node out of range");
  if (flat < 0 || flat >= node_length()) throw InvalidArgument("partner_of: flat index out of range");
  const int h = static_cast<int>(flat / (p_ - 1));
  const int r = static_cast<int>(flat % (p_ - 1));
  return {unrank(j, r), h};
}

Index CoefLayout::node_offset(int j) const {
  if (j < 0 || j >= p_) throw InvalidArgument("node_offset: node out of range");
  return static_cast<Index>(j) * node_length();
}

MultiTaskCoef::MultiTaskCoef(const CoefLayout& layout)
    : layout_(layout), values_(Vector::Zero(layout.total_length())) {}

MultiTaskCoef::MultiTaskCoef(const CoefLayout& layout, Vector values)
    : layout_(layout), values_(std::move(values)) {
  if (values_.size() != layout_.total_length())
    throw InvalidArgument("MultiTaskCoef: expected length " + std::to_string(layout_.total_length()) +
                          ", got " + std::to_string(values_.size()));
}

Vector MultiTaskCoef::cross_task_group(int h) const {
  if (h < 0 || h > layout_.q()) throw InvalidArgument("cross_task_group: group out of range");
  const Index g = layout_.group_size();
  Vector b(g * layout_.p());
  for (int j = 0; j < layout_.p(); ++j)
    b.segment(j * g, g) = values_.segment(layout_.node_offset(j) + h * g, g);
  return b;
}

void MultiTaskCoef::set_cross_task_group(int h, const Vector& b) {
  if (h < 0 || h > layout_.q()) throw InvalidArgument("set_cross_task_group: group out of range");
  const Index g = layout_.group_size();
  if (b.size() != g * layout_.p()) throw InvalidArgument("set_cross_task_group: length mismatch");
  for (int j = 0; j < layout_.p(); ++j)
    values_.segment(layout_.node_offset(j) + h * g, g) = b.segment(j * g, g);
}

double group_norm(std::span<const double> v, const CoefLayout& layout, GroupNorm mode) {
  if (static_cast<Index>(v.size()) != layout.node_length())
    throw InvalidArgument("group_norm: expected length " + std::to_string(layout.node_length()) + ", got " +
                          std::to_string(v.size()));
  const std::size_t g = static_cast<std::size_t>(layout.group_size());
  double acc = 0.0;
  for (int h = 0; h < layout.group_count(); ++h) {
    double ss = 0.0;
    for (std::size_t i = 0; i < g; ++i) ss += v[h * g + i] * v[h * g + i];
    const double nrm = std::sqrt(ss);
    acc = mode == GroupNorm::inf2 ? std::max(acc, nrm) : acc + nrm;
  }
  return acc;
}

}  // namespace sage
