#include "smoothic/continuation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "smoothic/models.hpp"
#include "smoothic/objective.hpp"
#include "smoothic/oracle.hpp"

namespace {

using smoothic::ContinuationSchedule;
using smoothic::continuation_solve;
using smoothic::DiscretePattern;
using smoothic::exhaustive_partition_ic;
using smoothic::exhaustive_subset_ic;
using smoothic::flag_jumps;
using smoothic::GaussianMeansModel;
using smoothic::LinearRegressionModel;
using smoothic::PathRecord;
using smoothic::PenaltyMode;
using smoothic::PenaltySpec;
using smoothic::polish;
using smoothic::schedule_values;
using smoothic::snap_pattern;
using smoothic::SolutionPath;

// Two-basin selection instance: slope coefficient 1 over an orthonormal
// centered column, residuals orthogonal to the design with plug-in variance
// exactly 1, so the full-vs-null criterion gap is exactly 2 - 1 = 1.
LinearRegressionModel two_basin_regression() {
  const double a = 1.0 / std::sqrt(8.0);
  Eigen::MatrixXd X(8, 2);
  Eigen::VectorXd e(8), y(8);
  const double xs[8] = {-a, -a, -a, -a, a, a, a, a};
  const double es[8] = {1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0};
  for (int i = 0; i < 8; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = xs[i];
    e(i) = es[i];
    y(i) = xs[i] + es[i];
  }
  return LinearRegressionModel(X, y);
}

std::vector<double> five_point_data() { return {0.0, 0.1, 0.05, 5.0, 5.1}; }

double sample_sd(const std::vector<double>& y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(y.size() - 1));
}

TEST(Schedule, GeneratesGeometricValuesInclusiveOfTop) {
  ContinuationSchedule s;
  s.k0 = 2.0;
  s.ratio = 2.0;
  s.k_max = 16.0;
  const std::vector<double> ks = schedule_values(s);
  ASSERT_EQ(ks.size(), 4u);
  EXPECT_DOUBLE_EQ(ks[0], 2.0);
  EXPECT_DOUBLE_EQ(ks[3], 16.0);
}

TEST(Schedule, SingleStageWhenBoundsCoincide) {
  ContinuationSchedule s;
  s.k0 = 7.0;
  s.k_max = 7.0;
  const std::vector<double> ks = schedule_values(s);
  ASSERT_EQ(ks.size(), 1u);
  EXPECT_DOUBLE_EQ(ks[0], 7.0);
}

TEST(Schedule, ValidatesFields) {
  ContinuationSchedule s;
  s.k0 = 0.0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
  s = {};
  s.ratio = 1.0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
  s = {};
  s.k_max = s.k0 / 2.0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
  s = {};
  s.inner_tol = 0.0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
  s = {};
  s.inner_max_iter = 0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
  s = {};
  s.series_order = 0;
  EXPECT_THROW(schedule_values(s), std::invalid_argument);
}

TEST(SnapPattern, ZeroModeKeepsOnlyClearNonzeros) {
  const std::vector<double> all_zero = {0.0, 0.0, 0.0};
  const DiscretePattern empty = snap_pattern(all_zero, PenaltyMode::ZeroPenalty, 1e-4);
  EXPECT_EQ(empty.support, (std::vector<bool>{false, false, false}));
  EXPECT_EQ(empty.param_count(), 0u);

  const std::vector<double> mixed = {5e-5, -0.3, 2.0};
  const DiscretePattern some = snap_pattern(mixed, PenaltyMode::ZeroPenalty, 1e-4);
  EXPECT_EQ(some.support, (std::vector<bool>{false, true, true}));
}

TEST(SnapPattern, FusionGapBelowToleranceFuses) {
  const std::vector<double> theta = {1.0000001, 1.0, 3.0};
  const DiscretePattern p = snap_pattern(theta, PenaltyMode::FusionPenalty, 1e-3);
  EXPECT_EQ(p.group_labels, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(p.param_count(), 2u);
}

TEST(SnapPattern, FusionRunsChainTransitively) {
  // Adjacent gaps each within tolerance, total span beyond it: still one group.
  const double tol = 1e-3;
  const std::vector<double> theta = {1.0, 1.0 + 0.9 * tol, 1.0 + 1.8 * tol};
  const DiscretePattern p = snap_pattern(theta, PenaltyMode::FusionPenalty, tol);
  EXPECT_EQ(p.group_labels, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(p.param_count(), 1u);
}

TEST(SnapPattern, FusionLabelsNumberedByFirstAppearance) {
  const std::vector<double> theta = {5.0, 1.0, 5.0};
  const DiscretePattern p = snap_pattern(theta, PenaltyMode::FusionPenalty, 1e-4);
  EXPECT_EQ(p.group_labels, (std::vector<int>{0, 1, 0}));
}

TEST(Polish, FullSupportRecoversOlsAndFullIc) {
  const auto model = two_basin_regression();
  DiscretePattern pattern;
  pattern.mode = PenaltyMode::ZeroPenalty;
  pattern.support = {true, true};
  const auto r = polish(model, pattern, 2.0);
  const auto beta = model.ols();
  EXPECT_NEAR(r.theta[0], beta[0], 1e-12);
  EXPECT_NEAR(r.theta[1], beta[1], 1e-12);
  EXPECT_NEAR(r.exact_ic, -2.0 * model.loglik(beta) + 2.0 * 2.0, 1e-10);
}

TEST(Polish, EmptySupportIsNullModel) {
  const auto model = two_basin_regression();
  DiscretePattern pattern;
  pattern.mode = PenaltyMode::ZeroPenalty;
  pattern.support = {false, false};
  const auto r = polish(model, pattern, 2.0);
  EXPECT_DOUBLE_EQ(r.theta[0], 0.0);
  EXPECT_DOUBLE_EQ(r.theta[1], 0.0);
  EXPECT_EQ(r.param_count, 0u);
}

TEST(Polish, SingleFusedGroupIsGrandMean) {
  GaussianMeansModel model({1.0, 2.0, 6.0}, 1.0);
  DiscretePattern pattern;
  pattern.mode = PenaltyMode::FusionPenalty;
  pattern.group_labels = {0, 0, 0};
  const auto r = polish(model, pattern, 2.0);
  EXPECT_DOUBLE_EQ(r.theta[0], 3.0);
  EXPECT_DOUBLE_EQ(r.theta[1], 3.0);
  EXPECT_DOUBLE_EQ(r.theta[2], 3.0);
  EXPECT_EQ(r.param_count, 1u);
  const std::vector<double> mu(3, 3.0);
  EXPECT_DOUBLE_EQ(r.exact_ic, -2.0 * model.loglik(mu) + 2.0);
}

TEST(Polish, RejectsMismatchedPatternsAndModels) {
  const auto linreg = two_basin_regression();
  GaussianMeansModel means({1.0, 2.0, 6.0}, 1.0);

  DiscretePattern fused;
  fused.mode = PenaltyMode::FusionPenalty;
  fused.group_labels = {0, 0};
  EXPECT_THROW(polish(linreg, fused, 2.0), std::invalid_argument);

  DiscretePattern support;
  support.mode = PenaltyMode::ZeroPenalty;
  support.support = {true, true, true};
  EXPECT_THROW(polish(means, support, 2.0), std::invalid_argument);

  DiscretePattern short_pattern;
  short_pattern.mode = PenaltyMode::ZeroPenalty;
  short_pattern.support = {true};
  EXPECT_THROW(polish(linreg, short_pattern, 2.0), std::invalid_argument);
  EXPECT_THROW(polish(linreg, support, 0.0), std::invalid_argument);
}

TEST(FlagJumps, MarksStepsBeyondTenTimesMedian) {
  std::vector<PathRecord> records(4);
  records[0].theta = {0.0};
  records[1].theta = {0.01};
  records[2].theta = {0.02};
  records[3].theta = {0.5};
  flag_jumps(records);
  EXPECT_FALSE(records[0].jump_flagged);
  EXPECT_FALSE(records[1].jump_flagged);
  EXPECT_FALSE(records[2].jump_flagged);
  EXPECT_TRUE(records[3].jump_flagged);
}

TEST(Continuation, SingleStageScheduleIsOneOptimization) {
  const auto model = two_basin_regression();
  PenaltySpec penalty;
  penalty.penalized = {1};
  ContinuationSchedule sched;
  sched.k0 = 5.0;
  sched.k_max = 5.0;
  const SolutionPath path =
      continuation_solve(model, penalty, sched, model.ols(), 1e-4);
  ASSERT_EQ(path.records.size(), 1u);
  EXPECT_TRUE(path.records[0].converged);
  EXPECT_LE(path.records[0].max_abs_grad, sched.inner_tol);
}

TEST(Continuation, TwoSeedsReachTheTwoBasins) {
  const auto model = two_basin_regression();
  EXPECT_NEAR(model.sigma2(), 1.0, 1e-12);

  PenaltySpec penalty;  // AIC zero penalty over the slope only
  penalty.penalized = {1};
  ContinuationSchedule sched;
  sched.k0 = 25.0;  // both basins exist from the start at this sharpness
  sched.k_max = 1e4;

  const SolutionPath from_zero =
      continuation_solve(model, penalty, sched, {0.0, 0.0}, 1e-4);
  const SolutionPath from_ols =
      continuation_solve(model, penalty, sched, model.ols(), 1e-4);

  ASSERT_FALSE(from_zero.aborted);
  ASSERT_FALSE(from_ols.aborted);
  EXPECT_EQ(from_zero.terminal_pattern.support, (std::vector<bool>{true, false}));
  EXPECT_EQ(from_ols.terminal_pattern.support, (std::vector<bool>{true, true}));

  // Both polished criteria must match the exhaustive table rows exactly.
  const auto oracle = exhaustive_subset_ic(model, 2.0, {1});
  ASSERT_EQ(oracle.table.size(), 2u);
  const double null_ic = oracle.table[0].ic;
  const double full_ic = oracle.table[1].ic;
  EXPECT_NEAR(from_zero.polished_ic, null_ic, 1e-9);
  EXPECT_NEAR(from_ols.polished_ic, full_ic, 1e-9);
  // The construction pins the criterion gap at exactly 1, inside (0, 2).
  EXPECT_NEAR(full_ic - null_ic, 1.0, 1e-9);
}

TEST(Continuation, FivePointFusionRecoversOraclePartition) {
  const std::vector<double> y = five_point_data();
  GaussianMeansModel model(y);
  const double scale = sample_sd(y);
  EXPECT_NEAR(model.sigma(), scale, 1e-12);

  PenaltySpec penalty;
  penalty.mode = PenaltyMode::FusionPenalty;
  penalty.ic_weight = std::log(5.0);
  ContinuationSchedule sched;
  sched.k0 = 0.5 / scale;
  sched.k_max = 1e4 / scale;
  const double snap_tol = 1e-4 * scale;

  const SolutionPath path = continuation_solve(model, penalty, sched, y, snap_tol);
  ASSERT_FALSE(path.aborted);
  EXPECT_EQ(path.terminal_pattern.group_labels, (std::vector<int>{0, 0, 0, 1, 1}));

  const auto oracle = exhaustive_partition_ic(model, penalty.ic_weight);
  EXPECT_EQ(oracle.partitions_evaluated, 52u);
  EXPECT_EQ(oracle.best.labels, (std::vector<int>{0, 0, 0, 1, 1}));
  EXPECT_NEAR(path.polished_ic, oracle.best.ic, 1e-9);
  // The oracle minimum can never beat the polished pattern's own row.
  EXPECT_GE(path.polished_ic, oracle.best.ic - 1e-12);
}

TEST(Continuation, PathIsMonotoneStationaryAndPolishingNeverHurts) {
  const std::vector<double> y = five_point_data();
  GaussianMeansModel model(y);
  const double scale = sample_sd(y);

  PenaltySpec penalty;
  penalty.mode = PenaltyMode::FusionPenalty;
  penalty.ic_weight = std::log(5.0);
  ContinuationSchedule sched;
  sched.k0 = 0.5 / scale;
  sched.k_max = 1e4 / scale;

  const SolutionPath path = continuation_solve(model, penalty, sched, y, 1e-4 * scale);
  ASSERT_FALSE(path.aborted);
  ASSERT_GE(path.records.size(), 2u);
  for (std::size_t i = 1; i < path.records.size(); ++i) {
    EXPECT_GT(path.records[i].k, path.records[i - 1].k);
  }
  for (const PathRecord& rec : path.records) {
    if (rec.converged) {
      EXPECT_LE(rec.max_abs_grad, sched.inner_tol);
    }
  }
  // Early stages converge fully. At very sharp k the penalty coupling between
  // fused coordinates matches the diagonal curvature, so cyclic sweeps stall
  // at a tiny residual; such records are honestly flagged and the pattern
  // still snaps.
  EXPECT_TRUE(path.records.front().converged);
  EXPECT_LT(path.records.back().max_abs_grad, 1e-3);

  // Indicator-count criterion at the raw terminal iterate, before snapping.
  smoothic::SurrogateObjective terminal_obj(model, penalty, path.records.back().k);
  const double implied = terminal_obj.exact_ic(path.records.back().theta);
  EXPECT_LE(path.polished_ic, implied + 1e-6);
}

TEST(Continuation, AbortsOnNonFiniteEvaluations) {
  const auto model = two_basin_regression();
  PenaltySpec penalty;
  penalty.penalized = {1};
  ContinuationSchedule sched;
  sched.k0 = 1.0;
  sched.k_max = 2.0;
  // A seed this large overflows the residual, so the very first gradient
  // evaluation is non-finite.
  const SolutionPath path =
      continuation_solve(model, penalty, sched, {1e308, 1e308}, 1e-4);
  EXPECT_TRUE(path.aborted);
  EXPECT_FALSE(path.abort_reason.empty());
}

TEST(Continuation, RejectsBadArgumentsAndModelModeMismatches) {
  const auto linreg = two_basin_regression();
  GaussianMeansModel means({1.0, 2.0, 6.0}, 1.0);
  ContinuationSchedule sched;

  PenaltySpec fusion;
  fusion.mode = PenaltyMode::FusionPenalty;
  EXPECT_THROW(continuation_solve(linreg, fusion, sched, {0.0, 0.0}, 1e-4),
               std::invalid_argument);

  PenaltySpec zero;
  EXPECT_THROW(continuation_solve(means, zero, sched, {0.0, 0.0, 0.0}, 1e-4),
               std::invalid_argument);

  PenaltySpec ok;
  ok.penalized = {1};
  EXPECT_THROW(continuation_solve(linreg, ok, sched, {0.0}, 1e-4), std::invalid_argument);
  EXPECT_THROW(continuation_solve(linreg, ok, sched, {0.0, 0.0}, 0.0), std::invalid_argument);
}

}  // namespace
