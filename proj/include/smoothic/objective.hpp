#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smoothic/models.hpp"
#include "smoothic/smoothers.hpp"

namespace smoothic {

/// Thrown when a likelihood evaluation comes back non-finite.
class EvaluationError : public std::runtime_error {
 public:
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

enum class PenaltyMode { ZeroPenalty, FusionPenalty };

/// Which parameters the information criterion counts smoothly.
/// `penalized` lists the coordinates carrying the zero penalty; empty means
/// all of them. Unlisted coordinates (an intercept, typically) always count.
struct PenaltySpec {
  PenaltyMode mode = PenaltyMode::ZeroPenalty;
  SmootherFamily family = SmootherFamily::Sech;
  double ic_weight = 2.0;  // c_n: 2 = AIC, log n = BIC
  std::vector<std::size_t> penalized{};
};

/// "aic" -> 2, "bic" -> log n, "gic:<c>" -> c (c > 0).
inline double resolve_ic_weight(std::string_view preset, std::size_t n) {
  if (preset == "aic") return 2.0;
  if (preset == "bic") {
    if (n < 1) throw std::invalid_argument("resolve_ic_weight: bic needs n >= 1");
    return std::log(static_cast<double>(n));
  }
  constexpr std::string_view kGic = "gic:";
  if (preset.substr(0, kGic.size()) == kGic) {
    const std::string_view digits = preset.substr(kGic.size());
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || !(value > 0.0) ||
        !std::isfinite(value)) {
      throw std::invalid_argument("resolve_ic_weight: gic weight must be a positive number");
    }
    return value;
  }
  throw std::invalid_argument("resolve_ic_weight: unknown preset '" + std::string(preset) + "'");
}

namespace detail {

inline void require_finite_theta(std::span<const double> theta) {
  for (double t : theta) {
    if (!std::isfinite(t)) {
      throw std::invalid_argument("theta must be finite");
    }
  }
}

// Indices of theta in ascending value order; ties keep original index order.
inline std::vector<std::size_t> sorted_order(std::span<const double> theta) {
  std::vector<std::size_t> idx(theta.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return theta[a] < theta[b]; });
  return idx;
}

}  // namespace detail

/// Smoothed count of distinct values: q - sum of d_k over adjacent sorted
/// gaps. Equals the exact distinct count in the k -> infinity limit; always
/// within [1, q].
inline double fusion_pk(std::span<const double> theta, const Smoother& smoother) {
  if (theta.empty()) throw std::invalid_argument("fusion_pk: theta must be non-empty");
  detail::require_finite_theta(theta);
  std::vector<double> sorted(theta.begin(), theta.end());
  std::sort(sorted.begin(), sorted.end());
  double fused = 0.0;
  for (std::size_t j = 1; j < sorted.size(); ++j) {
    fused += smoother.value(sorted[j] - sorted[j - 1]);
  }
  return static_cast<double>(theta.size()) - fused;
}

/// d p_k / d theta_j. theta_j's rank in the sorted order decides which two
/// adjacent gaps it touches; boundary ranks touch one.
inline double fusion_pk_grad(std::span<const double> theta, std::size_t j,
                             const Smoother& smoother) {
  if (j >= theta.size()) throw std::out_of_range("fusion_pk_grad: index out of range");
  detail::require_finite_theta(theta);
  const std::size_t q = theta.size();
  if (q == 1) return 0.0;
  const std::vector<std::size_t> order = detail::sorted_order(theta);
  const std::size_t rank = static_cast<std::size_t>(
      std::find(order.begin(), order.end(), j) - order.begin());
  double below = 0.0;
  double above = 0.0;
  if (rank >= 1) below = smoother.deriv1(theta[j] - theta[order[rank - 1]]);
  if (rank + 1 < q) above = smoother.deriv1(theta[order[rank + 1]] - theta[j]);
  return -(below - above);
}

/// d^2 p_k / d theta_j^2, same adjacency rules as the gradient.
inline double fusion_pk_hess_diag(std::span<const double> theta, std::size_t j,
                                  const Smoother& smoother) {
  if (j >= theta.size()) throw std::out_of_range("fusion_pk_hess_diag: index out of range");
  detail::require_finite_theta(theta);
  const std::size_t q = theta.size();
  if (q == 1) return 0.0;
  const std::vector<std::size_t> order = detail::sorted_order(theta);
  const std::size_t rank = static_cast<std::size_t>(
      std::find(order.begin(), order.end(), j) - order.begin());
  double acc = 0.0;
  if (rank >= 1) acc += smoother.deriv2(theta[j] - theta[order[rank - 1]]);
  if (rank + 1 < q) acc += smoother.deriv2(theta[order[rank + 1]] - theta[j]);
  return -acc;
}

/// A smoothed information criterion -2 loglik + c_n * (smoothed parameter
/// count) at one sharpness k, with coordinate-wise first and second
/// derivatives. Immutable view over a model.
template <LikelihoodModel M>
class SurrogateObjective {
 public:
  SurrogateObjective(const M& model, PenaltySpec penalty, double k)
      : model_(&model), penalty_(std::move(penalty)), smoother_(penalty_.family, k) {
    if (!(std::isfinite(penalty_.ic_weight) && penalty_.ic_weight > 0.0)) {
      throw std::invalid_argument("SurrogateObjective: ic_weight must be positive");
    }
    if (model.param_count() < 1) {
      throw std::invalid_argument("SurrogateObjective: model must have q >= 1");
    }
    const std::size_t q = model.param_count();
    penalized_.assign(q, true);
    if (!penalty_.penalized.empty()) {
      if (penalty_.mode == PenaltyMode::FusionPenalty) {
        throw std::invalid_argument(
            "SurrogateObjective: a penalized-coordinate mask only applies to ZeroPenalty");
      }
      penalized_.assign(q, false);
      for (std::size_t j : penalty_.penalized) {
        if (j >= q) {
          throw std::out_of_range("SurrogateObjective: penalized index out of range");
        }
        penalized_[j] = true;
      }
    }
  }

  /// Smoothed parameter count at theta: q - sum d_k(theta_j) over penalized
  /// coordinates in zero mode, p_k over sorted gaps in fusion mode.
  double surrogate_param_count(std::span<const double> theta) const {
    check_theta(theta);
    if (penalty_.mode == PenaltyMode::FusionPenalty) {
      return fusion_pk(theta, smoother_);
    }
    double shrunk = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (penalized_[j]) shrunk += smoother_.value(theta[j]);
    }
    return static_cast<double>(theta.size()) - shrunk;
  }

  double value(std::span<const double> theta) const {
    check_theta(theta);
    const double ll = model_->loglik(theta);
    if (!std::isfinite(ll)) {
      throw EvaluationError("surrogate objective: log-likelihood is non-finite");
    }
    return -2.0 * ll + penalty_.ic_weight * surrogate_param_count(theta);
  }

  double grad(std::span<const double> theta, std::size_t j) const {
    check_theta(theta);
    check_index(j);
    const double score_part = -2.0 * model_->score(theta, j);
    if (penalty_.mode == PenaltyMode::FusionPenalty) {
      return score_part + penalty_.ic_weight * fusion_pk_grad(theta, j, smoother_);
    }
    if (!penalized_[j]) return score_part;
    return score_part - penalty_.ic_weight * smoother_.deriv1(theta[j]);
  }

  double hess_diag(std::span<const double> theta, std::size_t j) const {
    check_theta(theta);
    check_index(j);
    const double info_part = 2.0 * model_->info(theta, j);
    if (penalty_.mode == PenaltyMode::FusionPenalty) {
      return info_part + penalty_.ic_weight * fusion_pk_hess_diag(theta, j, smoother_);
    }
    if (!penalized_[j]) return info_part;
    return info_part - penalty_.ic_weight * smoother_.deriv2(theta[j]);
  }

  /// Exact (indicator-count) information criterion at theta, the k -> infinity
  /// limit of value(). Zero mode counts exactly-zero penalized coordinates;
  /// fusion mode counts distinct values.
  double exact_ic(std::span<const double> theta) const {
    check_theta(theta);
    const double ll = model_->loglik(theta);
    if (!std::isfinite(ll)) {
      throw EvaluationError("exact ic: log-likelihood is non-finite");
    }
    double count = 0.0;
    if (penalty_.mode == PenaltyMode::FusionPenalty) {
      std::vector<double> sorted(theta.begin(), theta.end());
      std::sort(sorted.begin(), sorted.end());
      count = 1.0;
      for (std::size_t j = 1; j < sorted.size(); ++j) {
        if (sorted[j] != sorted[j - 1]) count += 1.0;
      }
    } else {
      for (std::size_t j = 0; j < theta.size(); ++j) {
        if (!penalized_[j] || theta[j] != 0.0) count += 1.0;
      }
    }
    return -2.0 * ll + penalty_.ic_weight * count;
  }

  double sharpness() const noexcept { return smoother_.sharpness(); }
  const PenaltySpec& penalty() const noexcept { return penalty_; }
  const Smoother& smoother() const noexcept { return smoother_; }
  const M& model() const noexcept { return *model_; }

 private:
  void check_theta(std::span<const double> theta) const {
    if (theta.size() != model_->param_count()) {
      throw std::invalid_argument("SurrogateObjective: theta length must equal q");
    }
    detail::require_finite_theta(theta);
  }

  void check_index(std::size_t j) const {
    if (j >= model_->param_count()) {
      throw std::out_of_range("SurrogateObjective: coordinate index out of range");
    }
  }

  const M* model_;
  PenaltySpec penalty_;
  Smoother smoother_;
  std::vector<bool> penalized_;
};

}  // namespace smoothic
