#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smoothic/models.hpp"
#include "smoothic/objective.hpp"
#include "smoothic/rootfind.hpp"
#include "smoothic/smoothers.hpp"

namespace smoothic {

/// Geometric sharpness schedule k0, k0*ratio, ... capped at k_max, plus the
/// per-k inner solver controls. k0 == k_max gives a single-stage schedule.
struct ContinuationSchedule {
  double k0 = 0.5;
  double ratio = 1.25;
  double k_max = 1e4;
  double inner_tol = 1e-8;
  int inner_max_iter = 60;
  int series_order = 3;
};

inline void validate_schedule(const ContinuationSchedule& s) {
  if (!(std::isfinite(s.k0) && s.k0 > 0.0)) {
    throw std::invalid_argument("ContinuationSchedule: k0 must be positive");
  }
  if (!(std::isfinite(s.k_max) && s.k_max >= s.k0)) {
    throw std::invalid_argument("ContinuationSchedule: k_max must be >= k0");
  }
  if (!(std::isfinite(s.ratio) && s.ratio > 1.0)) {
    throw std::invalid_argument("ContinuationSchedule: ratio must be > 1");
  }
  if (!(std::isfinite(s.inner_tol) && s.inner_tol > 0.0)) {
    throw std::invalid_argument("ContinuationSchedule: inner_tol must be positive");
  }
  if (s.inner_max_iter < 1) {
    throw std::invalid_argument("ContinuationSchedule: inner_max_iter must be >= 1");
  }
  if (s.series_order < 1) {
    throw std::invalid_argument("ContinuationSchedule: series_order must be >= 1");
  }
}

inline std::vector<double> schedule_values(const ContinuationSchedule& s) {
  validate_schedule(s);
  std::vector<double> ks;
  // Slack keeps the top of the schedule from falling to rounding in k0*ratio^i.
  for (double k = s.k0; k <= s.k_max * (1.0 + 1e-12); k *= s.ratio) {
    ks.push_back(k);
  }
  return ks;
}

/// Discrete structure read off a terminal iterate: a support set in zero mode,
/// group labels (first-appearance numbering) in fusion mode.
struct DiscretePattern {
  PenaltyMode mode = PenaltyMode::ZeroPenalty;
  std::vector<bool> support;
  std::vector<int> group_labels;

  std::size_t param_count() const {
    if (mode == PenaltyMode::ZeroPenalty) {
      return static_cast<std::size_t>(std::count(support.begin(), support.end(), true));
    }
    if (group_labels.empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(group_labels.begin(), group_labels.end())) +
           1;
  }
};

/// Zero mode: support is everything with |theta_j| > snap_tol. Fusion mode:
/// groups are maximal runs of sorted values whose adjacent gaps are all
/// <= snap_tol, so fusing chains transitively across a run.
inline DiscretePattern snap_pattern(std::span<const double> theta, PenaltyMode mode,
                                    double snap_tol) {
  if (!(std::isfinite(snap_tol) && snap_tol > 0.0)) {
    throw std::invalid_argument("snap_pattern: snap_tol must be positive");
  }
  if (theta.empty()) throw std::invalid_argument("snap_pattern: theta must be non-empty");
  detail::require_finite_theta(theta);

  DiscretePattern pattern;
  pattern.mode = mode;
  if (mode == PenaltyMode::ZeroPenalty) {
    pattern.support.resize(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      pattern.support[j] = std::abs(theta[j]) > snap_tol;
    }
    return pattern;
  }

  const std::vector<std::size_t> order = detail::sorted_order(theta);
  std::vector<int> run_of(theta.size(), 0);
  int run = 0;
  run_of[order[0]] = 0;
  for (std::size_t r = 1; r < order.size(); ++r) {
    if (theta[order[r]] - theta[order[r - 1]] > snap_tol) ++run;
    run_of[order[r]] = run;
  }
  // Renumber by first appearance in original index order.
  std::vector<int> canonical(static_cast<std::size_t>(run) + 1, -1);
  int next = 0;
  pattern.group_labels.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    int& mapped = canonical[static_cast<std::size_t>(run_of[i])];
    if (mapped < 0) mapped = next++;
    pattern.group_labels[i] = mapped;
  }
  return pattern;
}

struct PolishResult {
  std::vector<double> theta;
  double exact_ic = std::numeric_limits<double>::quiet_NaN();
  std::size_t param_count = 0;
};

namespace detail {

template <typename M>
constexpr bool kHasSupportRefit = requires(const M& m, const std::vector<std::size_t>& s) {
  { m.refit(s) } -> std::convertible_to<std::vector<double>>;
};

template <typename M>
constexpr bool kHasGroupRefit = requires(const M& m, const std::vector<std::vector<std::size_t>>& g) {
  { m.refit(g) } -> std::convertible_to<std::vector<double>>;
};

inline std::vector<std::vector<std::size_t>> groups_from_labels(const std::vector<int>& labels) {
  const int max_label = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return groups;
}

}  // namespace detail

/// Exact constrained refit under a discrete pattern: least squares on the
/// support (empty support = null model) or within-group means, plus the exact
/// integer-count information criterion.
template <typename M>
PolishResult polish(const M& model, const DiscretePattern& pattern, double c_n) {
  if (!(std::isfinite(c_n) && c_n > 0.0)) {
    throw std::invalid_argument("polish: ic weight must be positive");
  }
  PolishResult result;
  if (pattern.mode == PenaltyMode::ZeroPenalty) {
    if constexpr (detail::kHasSupportRefit<M>) {
      if (pattern.support.size() != model.param_count()) {
        throw std::invalid_argument("polish: pattern length must equal q");
      }
      std::vector<std::size_t> support;
      for (std::size_t j = 0; j < pattern.support.size(); ++j) {
        if (pattern.support[j]) support.push_back(j);
      }
      result.theta = model.refit(support);
      result.param_count = support.size();
    } else {
      throw std::invalid_argument("polish: model cannot refit a zero pattern");
    }
  } else {
    if constexpr (detail::kHasGroupRefit<M>) {
      if (pattern.group_labels.size() != model.param_count()) {
        throw std::invalid_argument("polish: pattern length must equal q");
      }
      result.theta = model.refit(detail::groups_from_labels(pattern.group_labels));
      result.param_count = pattern.param_count();
    } else {
      throw std::invalid_argument("polish: model cannot refit a fused-group pattern");
    }
  }
  result.exact_ic =
      -2.0 * model.loglik(result.theta) + c_n * static_cast<double>(result.param_count);
  return result;
}

/// One stage of the solution path: the warm-started optimum at a fixed k plus
/// solver diagnostics.
struct PathRecord {
  double k = 0.0;
  std::vector<double> theta;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double surrogate_count = std::numeric_limits<double>::quiet_NaN();
  double max_abs_grad = std::numeric_limits<double>::quiet_NaN();
  int sweeps = 0;
  bool converged = false;
  bool jump_flagged = false;
  std::vector<RootSolveReport> coord_reports;  // from the final sweep
};

struct SolutionPath {
  std::vector<PathRecord> records;
  DiscretePattern terminal_pattern;
  std::vector<double> polished_theta;
  double polished_ic = std::numeric_limits<double>::quiet_NaN();
  bool aborted = false;
  std::string abort_reason;
};

/// Marks records whose step from the previous record exceeds 10x the median
/// step. Diagnostic only; warm starts should move smoothly.
inline void flag_jumps(std::vector<PathRecord>& records) {
  if (records.size() < 2) return;
  std::vector<double> steps(records.size() - 1, 0.0);
  for (std::size_t i = 1; i < records.size(); ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < records[i].theta.size(); ++j) {
      const double d = records[i].theta[j] - records[i - 1].theta[j];
      ss += d * d;
    }
    steps[i - 1] = std::sqrt(ss);
  }
  std::vector<double> sorted_steps = steps;
  std::nth_element(sorted_steps.begin(), sorted_steps.begin() + sorted_steps.size() / 2,
                   sorted_steps.end());
  const double median = sorted_steps[sorted_steps.size() / 2];
  for (std::size_t i = 1; i < records.size(); ++i) {
    records[i].jump_flagged = steps[i - 1] > 10.0 * median;
  }
}

/// Homotopy over the sharpness schedule: at each k, cyclic coordinate-wise
/// root solving of the surrogate gradient warm-started from the previous
/// stage; at the end, snap the discrete pattern and refit it exactly.
/// An unconverged stage is recorded and the continuation moves on; a
/// non-finite iterate aborts with the path prefix kept for diagnosis.
template <LikelihoodModel M>
SolutionPath continuation_solve(const M& model, const PenaltySpec& penalty,
                                const ContinuationSchedule& sched, std::vector<double> theta,
                                double snap_tol) {
  const std::vector<double> ks = schedule_values(sched);
  if (!(std::isfinite(snap_tol) && snap_tol > 0.0)) {
    throw std::invalid_argument("continuation_solve: snap_tol must be positive");
  }
  const std::size_t q = model.param_count();
  if (theta.size() != q) {
    throw std::invalid_argument("continuation_solve: seed length must equal q");
  }
  detail::require_finite_theta(theta);
  if (penalty.mode == PenaltyMode::ZeroPenalty && !detail::kHasSupportRefit<M>) {
    throw std::invalid_argument("continuation_solve: model cannot refit zero patterns");
  }
  if (penalty.mode == PenaltyMode::FusionPenalty && !detail::kHasGroupRefit<M>) {
    throw std::invalid_argument("continuation_solve: model cannot refit fused groups");
  }

  constexpr int kCoordinateIterations = 12;
  SolutionPath path;
  for (double k : ks) {
    const SurrogateObjective<M> obj(model, penalty, k);
    PathRecord rec;
    rec.k = k;
    try {
      auto max_abs_grad = [&]() {
        double worst = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
          worst = std::max(worst, std::abs(obj.grad(theta, j)));
        }
        return worst;
      };

      double grad_norm = max_abs_grad();
      if (!std::isfinite(grad_norm)) {
        throw EvaluationError("continuation: gradient non-finite at k = " + std::to_string(k));
      }
      int sweep = 0;
      std::vector<RootSolveReport> reports(q);
      while (grad_norm > sched.inner_tol && sweep < sched.inner_max_iter) {
        for (std::size_t j = 0; j < q; ++j) {
          DifferentiableTarget target(
              [work = theta, j, &obj](double t) mutable -> std::vector<double> {
                if (!std::isfinite(t)) {
                  return {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
                }
                work[j] = t;
                return {obj.grad(work, j), obj.hess_diag(work, j)};
              },
              sched.series_order);
          reports[j] = solve_root(target, theta[j], sched.series_order, sched.inner_tol,
                                  kCoordinateIterations);
          theta[j] = reports[j].root_estimate;
          if (!std::isfinite(theta[j])) {
            throw EvaluationError("continuation: coordinate " + std::to_string(j) +
                                  " became non-finite at k = " + std::to_string(k));
          }
        }
        ++sweep;
        grad_norm = max_abs_grad();
      }

      rec.theta = theta;
      rec.sweeps = sweep;
      rec.max_abs_grad = grad_norm;
      rec.converged = grad_norm <= sched.inner_tol;
      rec.objective = obj.value(theta);
      rec.surrogate_count = obj.surrogate_param_count(theta);
      rec.coord_reports = std::move(reports);
    } catch (const EvaluationError& e) {
      path.aborted = true;
      path.abort_reason = e.what();
      return path;
    }
    path.records.push_back(std::move(rec));
  }

  flag_jumps(path.records);

  path.terminal_pattern = snap_pattern(theta, penalty.mode, snap_tol);
  if (penalty.mode == PenaltyMode::ZeroPenalty && !penalty.penalized.empty()) {
    // Coordinates outside the penalized set are structural (an intercept);
    // they stay in the support no matter their size.
    std::vector<bool> is_penalized(q, false);
    for (std::size_t j : penalty.penalized) is_penalized[j] = true;
    for (std::size_t j = 0; j < q; ++j) {
      if (!is_penalized[j]) path.terminal_pattern.support[j] = true;
    }
  }
  const PolishResult polish_result = polish(model, path.terminal_pattern, penalty.ic_weight);
  path.polished_theta = polish_result.theta;
  path.polished_ic = polish_result.exact_ic;
  return path;
}

}  // namespace smoothic
