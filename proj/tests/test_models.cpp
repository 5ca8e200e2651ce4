#include "smoothic/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "support/test_oracles.hpp"

namespace {

using smoothic::GaussianMeansModel;
using smoothic::LinearRegressionModel;

Eigen::MatrixXd ones_column(int n) { return Eigen::MatrixXd::Ones(n, 1); }

LinearRegressionModel random_regression(unsigned seed, int n, int q) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n, q);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) X(i, j) = gauss(rng);
    y(i) = gauss(rng);
  }
  return LinearRegressionModel(std::move(X), std::move(y));
}

TEST(LinearRegression, LoglikAtZeroResidualIsPureConstant) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  LinearRegressionModel model(X, y, 0.5);
  const std::vector<double> theta = {1.0, 2.0};
  EXPECT_NEAR(model.loglik(theta), -1.0 * std::log(2.0 * std::numbers::pi * 0.5), 1e-14);
}

TEST(LinearRegression, HandEvaluatedInterceptExample) {
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  LinearRegressionModel model(ones_column(3), y, 1.0);
  const std::vector<double> theta = {2.0};
  // residuals (-1, 0, 1), SSR = 2
  EXPECT_NEAR(model.loglik(theta), -1.5 * std::log(2.0 * std::numbers::pi) - 1.0, 1e-14);
}

TEST(LinearRegression, ScoreVanishesAtLeastSquaresSolution) {
  const auto model = random_regression(101, 15, 4);
  const std::vector<double> beta = model.ols();
  for (std::size_t j = 0; j < model.param_count(); ++j) {
    EXPECT_NEAR(model.score(beta, j), 0.0, 1e-9);
  }
}

TEST(LinearRegression, OrthonormalColumnResidualGivesUnitScore) {
  Eigen::MatrixXd X(2, 2);
  X << 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;  // theta = 0 leaves residual equal to column 1
  LinearRegressionModel model(X, y, 1.0);
  const std::vector<double> theta = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(model.score(theta, 1), 1.0);
  EXPECT_DOUBLE_EQ(model.score(theta, 0), 0.0);
}

TEST(LinearRegression, ScoreAndInfoMatchFiniteDifferences) {
  const auto model = random_regression(202, 12, 3);
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> theta(model.param_count());
    for (double& t : theta) t = gauss(rng);
    for (std::size_t j = 0; j < model.param_count(); ++j) {
      const double fd_score = testsupport::central_diff(
          [&](double tj) {
            std::vector<double> shifted = theta;
            shifted[j] = tj;
            return model.loglik(shifted);
          },
          theta[j]);
      EXPECT_LE(testsupport::relative_gap(model.score(theta, j), fd_score), 1e-6);

      const double fd_info = -testsupport::central_diff(
          [&](double tj) {
            std::vector<double> shifted = theta;
            shifted[j] = tj;
            return model.score(shifted, j);
          },
          theta[j]);
      EXPECT_LE(testsupport::relative_gap(model.info(theta, j), fd_info), 1e-6);
    }
  }
}

TEST(LinearRegression, InfoIsPositiveAndConstantInTheta) {
  const auto model = random_regression(303, 10, 3);
  const std::vector<double> a(model.param_count(), 0.0);
  const std::vector<double> b(model.param_count(), 2.5);
  for (std::size_t j = 0; j < model.param_count(); ++j) {
    EXPECT_GT(model.info(a, j), 0.0);
    EXPECT_DOUBLE_EQ(model.info(a, j), model.info(b, j));
  }
}

TEST(LinearRegression, PluginVarianceUsesFullResidualsOverN) {
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  LinearRegressionModel model(ones_column(3), y);
  // OLS mean 2, SSR = 2, MLE denominator n = 3.
  EXPECT_NEAR(model.sigma2(), 2.0 / 3.0, 1e-14);
}

TEST(LinearRegression, RefitMatchesProjectionOracleOnOrthogonalDesign) {
  Eigen::MatrixXd X(4, 2);
  X << 1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0;
  Eigen::VectorXd y(4);
  y << 3.0, 5.0, 1.0, -1.0;
  LinearRegressionModel model(X, y, 1.0);

  // Orthogonal columns: restricted least squares is coordinate-wise x_j.y/|x_j|^2.
  const auto both = model.refit({0, 1});
  EXPECT_NEAR(both[0], X.col(0).dot(y) / X.col(0).squaredNorm(), 1e-12);
  EXPECT_NEAR(both[1], X.col(1).dot(y) / X.col(1).squaredNorm(), 1e-12);

  const auto only1 = model.refit({1});
  EXPECT_DOUBLE_EQ(only1[0], 0.0);
  EXPECT_NEAR(only1[1], X.col(1).dot(y) / X.col(1).squaredNorm(), 1e-12);

  const auto none = model.refit({});
  EXPECT_DOUBLE_EQ(none[0], 0.0);
  EXPECT_DOUBLE_EQ(none[1], 0.0);
}

TEST(LinearRegression, RejectsDegenerateInputs) {
  Eigen::MatrixXd zero_col(3, 2);
  zero_col << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0;
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  EXPECT_THROW(LinearRegressionModel(zero_col, y, 1.0), std::invalid_argument);

  Eigen::VectorXd short_y(2);
  short_y << 1.0, 2.0;
  EXPECT_THROW(LinearRegressionModel(ones_column(3), short_y, 1.0), std::invalid_argument);
  EXPECT_THROW(LinearRegressionModel(ones_column(3), y, -1.0), std::invalid_argument);
  EXPECT_THROW(LinearRegressionModel(ones_column(3), y, 0.0), std::invalid_argument);

  // Perfect fit leaves no residual variance for the plug-in estimate.
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 4.0);
  EXPECT_THROW(LinearRegressionModel(ones_column(3), flat), std::invalid_argument);

  LinearRegressionModel ok(ones_column(3), y, 1.0);
  const std::vector<double> theta = {0.0};
  const std::vector<double> wrong(2, 0.0);
  EXPECT_THROW(ok.loglik(wrong), std::invalid_argument);
  EXPECT_THROW(ok.score(theta, 1), std::out_of_range);
  EXPECT_THROW(ok.refit({3}), std::out_of_range);
}

TEST(GaussianMeans, SaturatedFitIsPureConstantWithZeroScores) {
  const std::vector<double> y = {0.3, -1.2, 4.0, 2.2};
  GaussianMeansModel model(y, 1.7);
  const double expected =
      -0.5 * 4.0 * std::log(2.0 * std::numbers::pi * 1.7 * 1.7);
  EXPECT_NEAR(model.loglik(y), expected, 1e-13);
  for (std::size_t i = 0; i < y.size(); ++i) {
    EXPECT_DOUBLE_EQ(model.score(y, i), 0.0);
  }
}

TEST(GaussianMeans, HandEvaluatedTwoPointExample) {
  GaussianMeansModel model({0.0, 2.0}, 1.0);
  const std::vector<double> mu = {1.0, 1.0};
  EXPECT_NEAR(model.loglik(mu), -std::log(2.0 * std::numbers::pi) - 1.0, 1e-14);
}

TEST(GaussianMeans, ScoreAndInfoMatchFiniteDifferences) {
  GaussianMeansModel model({0.4, -2.0, 3.1, 0.9, 5.5}, 1.3);
  const std::vector<double> mu = {0.0, 1.0, 2.0, -1.0, 4.0};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double fd_score = testsupport::central_diff(
        [&](double m) {
          std::vector<double> shifted = mu;
          shifted[i] = m;
          return model.loglik(shifted);
        },
        mu[i]);
    EXPECT_LE(testsupport::relative_gap(model.score(mu, i), fd_score), 1e-6);
    EXPECT_NEAR(model.info(mu, i), 1.0 / (1.3 * 1.3), 1e-14);
  }
}

TEST(GaussianMeans, PluginSigmaIsSampleStandardDeviation) {
  GaussianMeansModel model({0.0, 2.0});
  EXPECT_NEAR(model.sigma(), std::sqrt(2.0), 1e-14);
}

TEST(GaussianMeans, RefitAssignsGroupMeans) {
  GaussianMeansModel model({1.0, 3.0, 10.0}, 1.0);
  const auto mu = model.refit({{0, 1}, {2}});
  EXPECT_DOUBLE_EQ(mu[0], 2.0);
  EXPECT_DOUBLE_EQ(mu[1], 2.0);
  EXPECT_DOUBLE_EQ(mu[2], 10.0);
}

TEST(GaussianMeans, RejectsDegenerateInputs) {
  EXPECT_THROW(GaussianMeansModel({}), std::invalid_argument);
  EXPECT_THROW(GaussianMeansModel({1.0}), std::invalid_argument);
  EXPECT_THROW(GaussianMeansModel({2.0, 2.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(GaussianMeansModel({1.0, 2.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(GaussianMeansModel({1.0, std::nan("")}, 1.0), std::invalid_argument);

  GaussianMeansModel ok({1.0, 2.0, 3.0}, 1.0);
  const std::vector<double> wrong = {0.0, 0.0};
  EXPECT_THROW(ok.loglik(wrong), std::invalid_argument);
  const std::vector<double> mu = {0.0, 0.0, 0.0};
  EXPECT_THROW(ok.score(mu, 3), std::out_of_range);
  EXPECT_THROW(ok.refit({{0, 1}}), std::invalid_argument);          // misses index 2
  EXPECT_THROW(ok.refit({{0, 1}, {1, 2}}), std::invalid_argument);  // overlap
  EXPECT_THROW(ok.refit({{0, 1, 2}, {}}), std::invalid_argument);   // empty group
}

}  // namespace
