#include "smoothic/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "smoothic/models.hpp"

namespace {

using smoothic::exhaustive_partition_ic;
using smoothic::exhaustive_subset_ic;
using smoothic::for_each_partition_ic;
using smoothic::GaussianMeansModel;
using smoothic::LinearRegressionModel;
using smoothic::PartitionSearchResult;
using smoothic::SubsetSearchResult;

TEST(SubsetSearch, SingleCoefficientEnumeratesTwoPatterns) {
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  LinearRegressionModel model(Eigen::MatrixXd::Ones(3, 1), y, 1.0);
  const SubsetSearchResult r = exhaustive_subset_ic(model, 2.0);
  ASSERT_EQ(r.table.size(), 2u);
  EXPECT_EQ(r.table[0].param_count, 0u);
  EXPECT_EQ(r.table[1].param_count, 1u);
}

TEST(SubsetSearch, NoiselessLinearResponseSelectsFullSupport) {
  Eigen::MatrixXd X(6, 2);
  X << 1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0, 5.0;
  Eigen::VectorXd y = X * Eigen::Vector2d(0.5, 2.0);
  // Small fixed noise variance: dropping either coefficient costs SSR/sigma2,
  // which dwarfs the per-parameter penalty.
  LinearRegressionModel model(X, y, 0.01);
  const SubsetSearchResult r = exhaustive_subset_ic(model, std::log(6.0));
  EXPECT_EQ(r.best.pattern, (std::vector<bool>{true, true}));
}

TEST(SubsetSearch, PureNoiseInstancePicksNullUnderBic) {
  std::mt19937 rng(909);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 30;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = gauss(rng);
    X(i, 2) = gauss(rng);
    y(i) = gauss(rng);
  }
  LinearRegressionModel model(X, y);
  // Selection over the two noise columns; the intercept always stays.
  const SubsetSearchResult r = exhaustive_subset_ic(model, std::log(n), {1, 2});
  ASSERT_EQ(r.table.size(), 4u);
  // The table itself certifies: the intercept-only row must carry the minimum.
  double min_ic = r.table[0].ic;
  for (const auto& entry : r.table) min_ic = std::min(min_ic, entry.ic);
  EXPECT_EQ(r.best.pattern, (std::vector<bool>{true, false, false}));
  EXPECT_DOUBLE_EQ(r.best.ic, min_ic);
}

TEST(SubsetSearch, FixedCoordinatesAppearInEveryPattern) {
  Eigen::MatrixXd X(5, 2);
  X << 1.0, 0.2, 1.0, -0.4, 1.0, 1.0, 1.0, 0.7, 1.0, -1.1;
  Eigen::VectorXd y(5);
  y << 0.1, 0.3, -0.2, 0.8, 0.4;
  LinearRegressionModel model(X, y, 1.0);
  const SubsetSearchResult r = exhaustive_subset_ic(model, 2.0, {1});
  ASSERT_EQ(r.table.size(), 2u);
  for (const auto& entry : r.table) {
    EXPECT_TRUE(entry.pattern[0]);
  }
}

TEST(SubsetSearch, IdenticalColumnsTieBreakLexicographically) {
  Eigen::MatrixXd X(4, 2);
  X << 1.0, 1.0, 2.0, 2.0, -1.0, -1.0, 0.5, 0.5;
  Eigen::VectorXd y(4);
  y << 1.1, 2.2, -0.9, 0.4;
  LinearRegressionModel model(X, y, 1.0);
  const SubsetSearchResult r = exhaustive_subset_ic(model, 2.0);
  // (0,1) and (1,0) fit the same column values, so their ICs are bitwise
  // equal and the lexicographically smaller pattern must win.
  EXPECT_EQ(r.best.pattern, (std::vector<bool>{false, true}));
}

TEST(SubsetSearch, RejectsOversizedAndInvalidSelectableSets) {
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  LinearRegressionModel model(Eigen::MatrixXd::Ones(3, 1), y, 1.0);
  EXPECT_THROW(exhaustive_subset_ic(model, 0.0), std::invalid_argument);
  EXPECT_THROW(exhaustive_subset_ic(model, 2.0, {2}), std::out_of_range);
  EXPECT_THROW(exhaustive_subset_ic(model, 2.0, {0, 0}), std::invalid_argument);

  std::mt19937 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd wide(25, 21);
  Eigen::VectorXd wy(25);
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 21; ++j) wide(i, j) = gauss(rng);
    wy(i) = gauss(rng);
  }
  LinearRegressionModel wide_model(wide, wy, 1.0);
  EXPECT_THROW(exhaustive_subset_ic(wide_model, 2.0), std::invalid_argument);
}

TEST(PartitionSearch, ThreeObservationsEnumerateFivePartitions) {
  GaussianMeansModel model({0.0, 1.0, 2.0}, 1.0);
  std::size_t count = 0;
  for_each_partition_ic(model, 2.0, [&](const std::vector<int>&, std::size_t, double) {
    ++count;
  });
  EXPECT_EQ(count, 5u);
}

TEST(PartitionSearch, EnumerationMatchesBellNumbers) {
  const std::vector<std::size_t> bell = {1, 2, 5, 15, 52, 203, 877, 4140};
  std::mt19937 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<double> y(n);
    for (double& v : y) v = gauss(rng);
    GaussianMeansModel model(std::move(y), 1.0);
    const PartitionSearchResult r = exhaustive_partition_ic(model, 2.0);
    EXPECT_EQ(r.partitions_evaluated, bell[n - 1]) << "n = " << n;
  }
}

TEST(PartitionSearch, TwoSeparatedPairsSplitInTwoUnderBic) {
  GaussianMeansModel model({0.0, 0.0, 10.0, 10.0}, 1.0);
  const PartitionSearchResult r = exhaustive_partition_ic(model, std::log(4.0));
  EXPECT_EQ(r.best.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(r.best.group_count, 2u);
}

TEST(PartitionSearch, SingleObservationHasOnePartition) {
  GaussianMeansModel model({5.0}, 1.0);
  const PartitionSearchResult r = exhaustive_partition_ic(model, 2.0);
  EXPECT_EQ(r.partitions_evaluated, 1u);
  EXPECT_EQ(r.best.labels, (std::vector<int>{0}));
  EXPECT_EQ(r.best.group_count, 1u);
}

TEST(PartitionSearch, SymmetricTieGoesToLexicographicallySmallerString) {
  // (-1, 0, 1): grouping the first two or the last two gives bitwise-equal
  // fits by symmetry, and with c_n = 1 both beat the 1- and 3-group
  // alternatives, so the tie rule decides the winner.
  GaussianMeansModel model({-1.0, 0.0, 1.0}, 1.0);
  const PartitionSearchResult r = exhaustive_partition_ic(model, 1.0);
  EXPECT_EQ(r.best.group_count, 2u);
  EXPECT_EQ(r.best.labels, (std::vector<int>{0, 0, 1}));
}

TEST(PartitionSearch, RefusesMoreThanTenObservations) {
  std::vector<double> y(11);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
  GaussianMeansModel model(std::move(y), 1.0);
  EXPECT_THROW(exhaustive_partition_ic(model, 2.0), std::invalid_argument);
}

TEST(PartitionSearch, BestIcMatchesDirectRecomputation) {
  GaussianMeansModel model({0.2, 0.3, 4.0, 4.2, -3.0}, 1.0);
  const double c_n = std::log(5.0);
  const PartitionSearchResult r = exhaustive_partition_ic(model, c_n);
  std::vector<std::vector<std::size_t>> members(r.best.group_count);
  for (std::size_t i = 0; i < r.best.labels.size(); ++i) {
    members[static_cast<std::size_t>(r.best.labels[i])].push_back(i);
  }
  const std::vector<double> mu = model.refit(members);
  EXPECT_DOUBLE_EQ(r.best.ic,
                   -2.0 * model.loglik(mu) + c_n * static_cast<double>(r.best.group_count));
}

}  // namespace
