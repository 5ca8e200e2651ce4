#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace smoothic {

/// A likelihood with coordinate-wise score and (negated score derivative)
/// information diagonal. Evaluations are pure; q and n are fixed.
template <typename M>
concept LikelihoodModel = requires(const M& m, std::span<const double> theta, std::size_t j) {
  { m.loglik(theta) } -> std::convertible_to<double>;
  { m.score(theta, j) } -> std::convertible_to<double>;
  { m.info(theta, j) } -> std::convertible_to<double>;
  { m.param_count() } -> std::convertible_to<std::size_t>;
  { m.sample_size() } -> std::convertible_to<std::size_t>;
};

namespace detail {

inline void require_all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " contains non-finite values");
  }
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> theta) {
  return Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

}  // namespace detail

/// Gaussian linear regression y = X theta + noise with *fixed* noise variance.
/// When sigma2 is not supplied it is estimated once from the full least-squares
/// residuals (maximum-likelihood denominator n) and then treated as known, so
/// scores stay linear in theta and coordinates stay uncoupled.
class LinearRegressionModel {
 public:
  LinearRegressionModel(Eigen::MatrixXd X, Eigen::VectorXd y)
      : LinearRegressionModel(std::move(X), std::move(y), plugin_tag{}) {}

  LinearRegressionModel(Eigen::MatrixXd X, Eigen::VectorXd y, double sigma2)
      : X_(std::move(X)), y_(std::move(y)) {
    validate_data();
    if (!(std::isfinite(sigma2) && sigma2 > 0.0)) {
      throw std::invalid_argument("LinearRegressionModel: sigma2 must be finite and positive");
    }
    sigma2_ = sigma2;
    cache_column_norms();
  }

  double loglik(std::span<const double> theta) const {
    check_theta(theta);
    const Eigen::VectorXd r = y_ - X_ * detail::as_vector(theta);
    const double n = static_cast<double>(y_.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2_) -
           r.squaredNorm() / (2.0 * sigma2_);
  }

  double score(std::span<const double> theta, std::size_t j) const {
    check_theta(theta);
    check_index(j);
    const Eigen::VectorXd r = y_ - X_ * detail::as_vector(theta);
    return X_.col(static_cast<Eigen::Index>(j)).dot(r) / sigma2_;
  }

  double info(std::span<const double> theta, std::size_t j) const {
    check_theta(theta);
    check_index(j);
    return col_sq_norm_[j] / sigma2_;
  }

  std::size_t param_count() const noexcept { return static_cast<std::size_t>(X_.cols()); }
  std::size_t sample_size() const noexcept { return static_cast<std::size_t>(y_.size()); }
  double sigma2() const noexcept { return sigma2_; }

  /// Full least-squares coefficients.
  std::vector<double> ols() const {
    const Eigen::VectorXd beta = X_.colPivHouseholderQr().solve(y_);
    return std::vector<double>(beta.data(), beta.data() + beta.size());
  }

  /// Least squares restricted to the given support columns; other coordinates
  /// are exactly zero. An empty support yields the all-zero fit.
  std::vector<double> refit(const std::vector<std::size_t>& support) const {
    std::vector<double> theta(param_count(), 0.0);
    if (support.empty()) return theta;
    Eigen::MatrixXd sub(X_.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c) {
      check_index(support[c]);
      sub.col(static_cast<Eigen::Index>(c)) = X_.col(static_cast<Eigen::Index>(support[c]));
    }
    const Eigen::VectorXd beta = sub.colPivHouseholderQr().solve(y_);
    for (std::size_t c = 0; c < support.size(); ++c) {
      theta[support[c]] = beta(static_cast<Eigen::Index>(c));
    }
    return theta;
  }

 private:
  struct plugin_tag {};

  LinearRegressionModel(Eigen::MatrixXd X, Eigen::VectorXd y, plugin_tag)
      : X_(std::move(X)), y_(std::move(y)) {
    validate_data();
    const Eigen::VectorXd beta = X_.colPivHouseholderQr().solve(y_);
    const double ssr = (y_ - X_ * beta).squaredNorm();
    sigma2_ = ssr / static_cast<double>(y_.size());
    if (!(std::isfinite(sigma2_) && sigma2_ > 0.0)) {
      throw std::invalid_argument(
          "LinearRegressionModel: plug-in residual variance is degenerate; "
          "supply sigma2 explicitly");
    }
    cache_column_norms();
  }

  void validate_data() const {
    if (X_.rows() < 1 || X_.cols() < 1) {
      throw std::invalid_argument("LinearRegressionModel: X must be non-empty");
    }
    if (X_.rows() != y_.size()) {
      throw std::invalid_argument("LinearRegressionModel: X rows must match y length");
    }
    detail::require_all_finite(X_, "X");
    detail::require_all_finite(y_, "y");
    for (Eigen::Index j = 0; j < X_.cols(); ++j) {
      if (X_.col(j).squaredNorm() == 0.0) {
        throw std::invalid_argument("LinearRegressionModel: column " + std::to_string(j) +
                                    " of X is identically zero");
      }
    }
  }

  void cache_column_norms() {
    col_sq_norm_.resize(param_count());
    for (Eigen::Index j = 0; j < X_.cols(); ++j) {
      col_sq_norm_[static_cast<std::size_t>(j)] = X_.col(j).squaredNorm();
    }
  }

  void check_theta(std::span<const double> theta) const {
    if (theta.size() != param_count()) {
      throw std::invalid_argument("LinearRegressionModel: theta length must equal column count");
    }
  }

  void check_index(std::size_t j) const {
    if (j >= param_count()) {
      throw std::out_of_range("LinearRegressionModel: coordinate index out of range");
    }
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double sigma2_ = 0.0;
  std::vector<double> col_sq_norm_;
};

/// One Gaussian mean per observation (q = n) with common known sigma; the
/// overparameterized likelihood whose fused means define clusters. When sigma
/// is not supplied the sample standard deviation of y is plugged in.
class GaussianMeansModel {
 public:
  explicit GaussianMeansModel(std::vector<double> y) : y_(std::move(y)) {
    validate_data();
    if (y_.size() < 2) {
      throw std::invalid_argument(
          "GaussianMeansModel: plug-in sigma needs n >= 2; supply sigma explicitly");
    }
    double mean = 0.0;
    for (double v : y_) mean += v;
    mean /= static_cast<double>(y_.size());
    double ss = 0.0;
    for (double v : y_) ss += (v - mean) * (v - mean);
    sigma_ = std::sqrt(ss / static_cast<double>(y_.size() - 1));
    if (!(std::isfinite(sigma_) && sigma_ > 0.0)) {
      throw std::invalid_argument(
          "GaussianMeansModel: plug-in sigma is degenerate (constant data); "
          "supply sigma explicitly");
    }
  }

  GaussianMeansModel(std::vector<double> y, double sigma) : y_(std::move(y)), sigma_(sigma) {
    validate_data();
    if (!(std::isfinite(sigma_) && sigma_ > 0.0)) {
      throw std::invalid_argument("GaussianMeansModel: sigma must be finite and positive");
    }
  }

  double loglik(std::span<const double> mu) const {
    check_theta(mu);
    const double s2 = sigma_ * sigma_;
    double out = -0.5 * static_cast<double>(y_.size()) * std::log(2.0 * std::numbers::pi * s2);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double r = y_[i] - mu[i];
      out -= r * r / (2.0 * s2);
    }
    return out;
  }

  double score(std::span<const double> mu, std::size_t i) const {
    check_theta(mu);
    check_index(i);
    return (y_[i] - mu[i]) / (sigma_ * sigma_);
  }

  double info(std::span<const double> mu, std::size_t i) const {
    check_theta(mu);
    check_index(i);
    return 1.0 / (sigma_ * sigma_);
  }

  std::size_t param_count() const noexcept { return y_.size(); }
  std::size_t sample_size() const noexcept { return y_.size(); }
  double sigma() const noexcept { return sigma_; }
  const std::vector<double>& data() const noexcept { return y_; }

  /// Means refit under a grouping: every member of a group gets the group's
  /// sample mean. `groups` must partition {0, ..., n-1}.
  std::vector<double> refit(const std::vector<std::vector<std::size_t>>& groups) const {
    std::vector<double> mu(y_.size(), 0.0);
    std::vector<bool> seen(y_.size(), false);
    for (const auto& group : groups) {
      if (group.empty()) {
        throw std::invalid_argument("GaussianMeansModel: refit groups must be non-empty");
      }
      double mean = 0.0;
      for (std::size_t i : group) {
        check_index(i);
        if (seen[i]) {
          throw std::invalid_argument("GaussianMeansModel: refit groups overlap");
        }
        seen[i] = true;
        mean += y_[i];
      }
      mean /= static_cast<double>(group.size());
      for (std::size_t i : group) mu[i] = mean;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw std::invalid_argument("GaussianMeansModel: refit groups must cover every index");
      }
    }
    return mu;
  }

 private:
  void validate_data() const {
    if (y_.empty()) {
      throw std::invalid_argument("GaussianMeansModel: y must be non-empty");
    }
    for (double v : y_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("GaussianMeansModel: y contains non-finite values");
      }
    }
  }

  void check_theta(std::span<const double> mu) const {
    if (mu.size() != y_.size()) {
      throw std::invalid_argument("GaussianMeansModel: mu length must equal n");
    }
  }

  void check_index(std::size_t i) const {
    if (i >= y_.size()) {
      throw std::out_of_range("GaussianMeansModel: observation index out of range");
    }
  }

  std::vector<double> y_;
  double sigma_ = 0.0;
};

static_assert(LikelihoodModel<LinearRegressionModel>);
static_assert(LikelihoodModel<GaussianMeansModel>);

}  // namespace smoothic
