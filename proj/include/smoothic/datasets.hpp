#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace smoothic::datasets {

/// Regression instance with an intercept column and one centered, unit-norm
/// predictor. The noise is projected orthogonal to both columns and rescaled
/// so the plug-in variance is exactly 1 and the full model trails the null
/// model by exactly 1 IC unit under an AIC weight, placing the instance
/// strictly between the two selection regimes.
struct TwoBasinToy {
  Eigen::MatrixXd design;  // n x 2: intercept, slope
  Eigen::VectorXd response;
  std::uint32_t seed = 0;
};

inline TwoBasinToy make_two_basin_toy(std::uint32_t seed, std::size_t n = 8) {
  if (n < 4) {
    throw std::invalid_argument("make_two_basin_toy: need n >= 4");
  }
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto sample = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  };

  const Eigen::Index m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);

  Eigen::VectorXd x(m);
  for (int attempt = 0;; ++attempt) {
    sample(x);
    x.array() -= x.mean();
    const double norm = x.norm();
    if (norm > 1e-8) {
      x /= norm;
      break;
    }
    if (attempt > 100) throw std::runtime_error("make_two_basin_toy: degenerate predictor draw");
  }

  Eigen::VectorXd e(m);
  for (int attempt = 0;; ++attempt) {
    sample(e);
    e -= (e.dot(ones) / static_cast<double>(m)) * ones;
    e -= e.dot(x) * x;
    const double norm = e.norm();
    if (norm > 1e-8) {
      e *= std::sqrt(static_cast<double>(m)) / norm;  // ||e||^2 = n, so SSR/n = 1
      break;
    }
    if (attempt > 100) throw std::runtime_error("make_two_basin_toy: degenerate noise draw");
  }

  TwoBasinToy toy;
  toy.seed = seed;
  toy.design.resize(m, 2);
  toy.design.col(0) = ones;
  toy.design.col(1) = x;
  toy.response = x + e;  // true slope 1, true intercept 0
  return toy;
}

/// Bivariate two-component sample shaped like the classic geyser data:
/// short/long regimes in both columns, plus one deliberately mismatched row
/// (first column from the low regime, second from the high regime) at a fixed
/// index so multivariate disagreement is present in every draw.
struct BivariateSample {
  std::vector<double> eruptions;
  std::vector<double> waiting;
  std::uint32_t seed = 0;
  std::size_t mismatched_row = 0;
};

inline BivariateSample make_geyser_like(std::size_t n, std::uint32_t seed) {
  if (n < 10) {
    throw std::invalid_argument("make_geyser_like: need n >= 10");
  }
  std::mt19937 rng(seed);
  std::bernoulli_distribution pick_long(0.65);
  std::normal_distribution<double> normal(0.0, 1.0);

  constexpr double kShortEruption = 2.02, kLongEruption = 4.27;
  constexpr double kEruptionSd = 0.22;
  constexpr double kShortWait = 54.6, kLongWait = 80.1;
  constexpr double kWaitSd = 3.8;

  BivariateSample out;
  out.seed = seed;
  out.mismatched_row = 35 % n;
  out.eruptions.resize(n);
  out.waiting.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_long = pick_long(rng);
    const double ez = normal(rng);
    const double wz = normal(rng);
    out.eruptions[i] = (is_long ? kLongEruption : kShortEruption) + kEruptionSd * ez;
    out.waiting[i] = (is_long ? kLongWait : kShortWait) + kWaitSd * wz;
  }
  // Overwrite the flagged row with components drawn from opposite regimes.
  out.eruptions[out.mismatched_row] = kShortEruption + kEruptionSd * normal(rng);
  out.waiting[out.mismatched_row] = kLongWait + kWaitSd * normal(rng);
  return out;
}

/// One column of observations drawn around two centers separated by
/// `gap_in_sigma` noise standard deviations, with at least one point at each
/// center. Used for small fusion instances checked against exhaustive search.
struct SeparatedMeans {
  std::vector<double> values;
  std::vector<int> true_center;  // 0 or 1 per observation
  double gap = 0.0;
  double noise_sd = 0.0;
  std::uint32_t seed = 0;
};

inline SeparatedMeans make_separated_means(std::size_t n, double gap_in_sigma, double noise_sd,
                                           std::uint32_t seed) {
  if (n < 2) throw std::invalid_argument("make_separated_means: need n >= 2");
  if (!(gap_in_sigma > 0.0) || !(noise_sd > 0.0)) {
    throw std::invalid_argument("make_separated_means: gap and sd must be positive");
  }
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sd);
  std::bernoulli_distribution coin(0.5);

  SeparatedMeans out;
  out.seed = seed;
  out.noise_sd = noise_sd;
  out.gap = gap_in_sigma * noise_sd;
  out.values.resize(n);
  out.true_center.resize(n);
  out.true_center[0] = 0;  // both centers are always populated
  out.true_center[1] = 1;
  for (std::size_t i = 2; i < n; ++i) out.true_center[i] = coin(rng) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = out.true_center[i] * out.gap + normal(rng);
  }
  return out;
}

}  // namespace smoothic::datasets
