#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smoothic/models.hpp"

namespace smoothic {

/// One candidate in the exhaustive zero-pattern search. `pattern[j]` is true
/// when coordinate j is in the fitted support.
struct SubsetEntry {
  std::vector<bool> pattern;
  std::size_t param_count = 0;
  double ic = 0.0;
};

struct SubsetSearchResult {
  SubsetEntry best;
  std::vector<SubsetEntry> table;  // all 2^s candidates, enumeration order
};

/// One candidate in the exhaustive set-partition search. `labels` is the
/// restricted-growth string: labels[0] = 0 and each new group takes the
/// smallest unused id.
struct PartitionEntry {
  std::vector<int> labels;
  std::size_t group_count = 0;
  double ic = 0.0;
};

struct PartitionSearchResult {
  PartitionEntry best;
  std::size_t partitions_evaluated = 0;
};

namespace detail {

inline void require_ic_weight(double c_n) {
  if (!(std::isfinite(c_n) && c_n > 0.0)) {
    throw std::invalid_argument("oracle: ic weight must be finite and positive");
  }
}

inline bool pattern_less(const std::vector<bool>& a, const std::vector<bool>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Ties go to the sparser model, then to the lexicographically smaller pattern.
inline bool subset_better(const SubsetEntry& a, const SubsetEntry& b) {
  if (a.ic != b.ic) return a.ic < b.ic;
  if (a.param_count != b.param_count) return a.param_count < b.param_count;
  return pattern_less(a.pattern, b.pattern);
}

// Ties go to fewer groups, then to the lexicographically smaller string.
inline bool partition_better(const PartitionEntry& a, const PartitionEntry& b) {
  if (a.ic != b.ic) return a.ic < b.ic;
  if (a.group_count != b.group_count) return a.group_count < b.group_count;
  return a.labels < b.labels;
}

template <typename Visitor>
void rgs_recurse(std::vector<int>& labels, std::size_t i, int max_label, Visitor& visit) {
  if (i == labels.size()) {
    visit(labels);
    return;
  }
  for (int g = 0; g <= max_label + 1; ++g) {
    labels[i] = g;
    rgs_recurse(labels, i + 1, std::max(max_label, g), visit);
  }
}

}  // namespace detail

/// Exact information criterion of every zero pattern over the selectable
/// coordinates (all of them when `selectable` is empty); the rest stay in the
/// support of every fit. Each pattern is refit by least squares.
inline SubsetSearchResult exhaustive_subset_ic(const LinearRegressionModel& model, double c_n,
                                               std::vector<std::size_t> selectable = {}) {
  detail::require_ic_weight(c_n);
  const std::size_t q = model.param_count();
  if (selectable.empty()) {
    selectable.resize(q);
    std::iota(selectable.begin(), selectable.end(), std::size_t{0});
  }
  std::vector<bool> is_selectable(q, false);
  for (std::size_t j : selectable) {
    if (j >= q) throw std::out_of_range("exhaustive_subset_ic: selectable index out of range");
    if (is_selectable[j]) {
      throw std::invalid_argument("exhaustive_subset_ic: duplicate selectable index");
    }
    is_selectable[j] = true;
  }
  if (selectable.size() > 20) {
    throw std::invalid_argument(
        "exhaustive_subset_ic: more than 20 selectable coordinates (2^s table); "
        "reduce the selectable set");
  }

  SubsetSearchResult result;
  result.table.reserve(std::size_t{1} << selectable.size());
  for (std::size_t mask = 0; mask < (std::size_t{1} << selectable.size()); ++mask) {
    SubsetEntry entry;
    entry.pattern.assign(q, false);
    for (std::size_t j = 0; j < q; ++j) entry.pattern[j] = !is_selectable[j];
    for (std::size_t b = 0; b < selectable.size(); ++b) {
      if (mask & (std::size_t{1} << b)) entry.pattern[selectable[b]] = true;
    }
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < q; ++j) {
      if (entry.pattern[j]) support.push_back(j);
    }
    entry.param_count = support.size();
    const std::vector<double> theta = model.refit(support);
    entry.ic = -2.0 * model.loglik(theta) + c_n * static_cast<double>(entry.param_count);
    result.table.push_back(std::move(entry));
  }

  result.best = result.table.front();
  for (const SubsetEntry& entry : result.table) {
    if (detail::subset_better(entry, result.best)) result.best = entry;
  }
  return result;
}

/// Visits every set partition of the observations in restricted-growth-string
/// order with its group count and exact information criterion.
template <typename Visitor>
void for_each_partition_ic(const GaussianMeansModel& model, double c_n, Visitor&& visit) {
  detail::require_ic_weight(c_n);
  const std::size_t n = model.sample_size();
  if (n > 10) {
    throw std::invalid_argument(
        "for_each_partition_ic: n > 10 (Bell(10) = 115975 partitions is the guard); "
        "use the continuation instead");
  }
  std::vector<int> labels(n, 0);
  auto evaluate = [&](const std::vector<int>& rgs) {
    const int groups = 1 + *std::max_element(rgs.begin(), rgs.end());
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups));
    for (std::size_t i = 0; i < rgs.size(); ++i) {
      members[static_cast<std::size_t>(rgs[i])].push_back(i);
    }
    const std::vector<double> mu = model.refit(members);
    const double ic = -2.0 * model.loglik(mu) + c_n * static_cast<double>(groups);
    visit(rgs, static_cast<std::size_t>(groups), ic);
  };
  detail::rgs_recurse(labels, 1, 0, evaluate);
}

/// Exact-IC-optimal set partition by full enumeration.
inline PartitionSearchResult exhaustive_partition_ic(const GaussianMeansModel& model, double c_n) {
  PartitionSearchResult result;
  bool first = true;
  for_each_partition_ic(model, c_n,
                        [&](const std::vector<int>& labels, std::size_t groups, double ic) {
                          result.partitions_evaluated += 1;
                          PartitionEntry entry{labels, groups, ic};
                          if (first || detail::partition_better(entry, result.best)) {
                            result.best = std::move(entry);
                            first = false;
                          }
                        });
  return result;
}

}  // namespace smoothic
