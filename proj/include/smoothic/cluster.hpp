#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

namespace smoothic {

/// Multivariate grouping assembled from per-coordinate fusions. Two
/// observations share a merged label exactly when they share the label in
/// every coordinate. A split flag marks an observation left alone by the
/// merge even though each of its univariate groups has other members.
struct ClusterAssignment {
  std::vector<std::vector<int>> per_coordinate_labels;  // canonicalized, D x n
  std::vector<int> merged_labels;                       // length n
  std::vector<bool> split_flags;                        // length n

  std::size_t group_count() const {
    if (merged_labels.empty()) return 0;
    return static_cast<std::size_t>(
               *std::max_element(merged_labels.begin(), merged_labels.end())) +
           1;
  }
};

namespace detail {

// First-appearance renumbering: the first observation's label becomes 0, the
// next unseen label 1, and so on.
inline std::vector<int> canonicalize_labels(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  std::map<int, int> seen;
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = seen.emplace(labels[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

}  // namespace detail

/// Merge one fused label vector per coordinate into multivariate clusters.
/// `coordinate_labels` holds D vectors, each assigning every one of the n
/// observations to a univariate group.
inline ClusterAssignment extract_clusters(const std::vector<std::vector<int>>& coordinate_labels) {
  if (coordinate_labels.empty()) {
    throw std::invalid_argument("extract_clusters: need at least one coordinate");
  }
  const std::size_t n = coordinate_labels.front().size();
  if (n == 0) {
    throw std::invalid_argument("extract_clusters: need at least one observation");
  }
  for (const auto& labels : coordinate_labels) {
    if (labels.size() != n) {
      throw std::invalid_argument("extract_clusters: coordinate label lengths differ");
    }
  }
  const std::size_t d = coordinate_labels.size();

  ClusterAssignment out;
  out.per_coordinate_labels.reserve(d);
  for (const auto& labels : coordinate_labels) {
    out.per_coordinate_labels.push_back(detail::canonicalize_labels(labels));
  }

  std::map<std::vector<int>, int> tuple_ids;
  std::vector<int> tuple_sizes;
  out.merged_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> tuple(d);
    for (std::size_t c = 0; c < d; ++c) tuple[c] = out.per_coordinate_labels[c][i];
    auto [it, inserted] = tuple_ids.emplace(std::move(tuple), static_cast<int>(tuple_sizes.size()));
    if (inserted) tuple_sizes.push_back(0);
    out.merged_labels[i] = it->second;
    tuple_sizes[static_cast<std::size_t>(it->second)] += 1;
  }

  // Univariate group sizes per coordinate, for the split test.
  std::vector<std::vector<int>> group_sizes(d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto& labels = out.per_coordinate_labels[c];
    group_sizes[c].assign(
        static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1, 0);
    for (int label : labels) group_sizes[c][static_cast<std::size_t>(label)] += 1;
  }

  out.split_flags.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool split = tuple_sizes[static_cast<std::size_t>(out.merged_labels[i])] == 1;
    for (std::size_t c = 0; split && c < d; ++c) {
      const int label = out.per_coordinate_labels[c][i];
      split = group_sizes[c][static_cast<std::size_t>(label)] >= 2;
    }
    out.split_flags[i] = split;
  }
  return out;
}

}  // namespace smoothic
