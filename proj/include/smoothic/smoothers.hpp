#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace smoothic {

/// Delta-approximant families d_k(x): smooth, even, d_k(0) = 1, strictly
/// decreasing in |x|, and d_k(x) -> I(x = 0) pointwise as the sharpness k
/// grows. Their derivatives are closed-form functions of the value itself,
/// which keeps coordinate gradients cheap.
enum class SmootherFamily { Sech, Gaussian, Rational };

inline SmootherFamily parse_family(std::string_view name) {
  if (name == "sech") return SmootherFamily::Sech;
  if (name == "gaussian") return SmootherFamily::Gaussian;
  if (name == "rational") return SmootherFamily::Rational;
  throw std::invalid_argument("unknown smoother family '" + std::string(name) +
                              "' (expected sech | gaussian | rational)");
}

inline std::string_view family_name(SmootherFamily family) {
  switch (family) {
    case SmootherFamily::Sech: return "sech";
    case SmootherFamily::Gaussian: return "gaussian";
    case SmootherFamily::Rational: return "rational";
  }
  return "?";
}

namespace detail {

inline void require_finite_point(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("smoother: evaluation point must be finite");
  }
}

// sech(z) = 2 e^{-|z|} / (1 + e^{-2|z|}). Never overflows; underflows to an
// exact 0 once e^{-|z|} does, which is the correct limit.
inline double stable_sech(double z) {
  const double t = std::exp(-std::abs(z));
  return 2.0 * t / (1.0 + t * t);
}

}  // namespace detail

/// One member of a delta-approximant family at a fixed sharpness k > 0.
/// Immutable after construction; all evaluations are pure.
class Smoother {
 public:
  Smoother(SmootherFamily family, double k) : family_(family), k_(k) {
    if (!std::isfinite(k) || k <= 0.0) {
      throw std::invalid_argument("smoother: sharpness k must be positive and finite");
    }
  }

  /// d_k(x) in (0, 1]; exactly 1 at x = 0.
  double value(double x) const {
    detail::require_finite_point(x);
    switch (family_) {
      case SmootherFamily::Sech:
        return detail::stable_sech(k_ * x);
      case SmootherFamily::Gaussian:
        return std::exp(-0.5 * k_ * x * x);
      case SmootherFamily::Rational: {
        const double u = k_ * x;
        return 1.0 / (1.0 + u * u);
      }
    }
    return 0.0;  // unreachable
  }

  /// d_k'(x); odd in x, zero at the peak.
  double deriv1(double x) const {
    detail::require_finite_point(x);
    switch (family_) {
      case SmootherFamily::Sech: {
        const double z = k_ * x;
        return -k_ * detail::stable_sech(z) * std::tanh(z);
      }
      case SmootherFamily::Gaussian:
        return -k_ * x * std::exp(-0.5 * k_ * x * x);
      case SmootherFamily::Rational: {
        const double u = k_ * x;
        const double v = 1.0 / (1.0 + u * u);
        return -2.0 * k_ * k_ * x * v * v;
      }
    }
    return 0.0;  // unreachable
  }

  /// d_k''(x); even in x.
  double deriv2(double x) const {
    detail::require_finite_point(x);
    switch (family_) {
      case SmootherFamily::Sech: {
        const double z = k_ * x;
        const double s = detail::stable_sech(z);
        const double t = std::tanh(z);
        return k_ * k_ * s * (t * t - s * s);
      }
      case SmootherFamily::Gaussian:
        return (k_ * k_ * x * x - k_) * std::exp(-0.5 * k_ * x * x);
      case SmootherFamily::Rational: {
        const double u = k_ * x;
        const double v = 1.0 / (1.0 + u * u);
        return (6.0 * k_ * k_ * k_ * k_ * x * x - 2.0 * k_ * k_) * v * v * v;
      }
    }
    return 0.0;  // unreachable
  }

  SmootherFamily family() const noexcept { return family_; }
  double sharpness() const noexcept { return k_; }

 private:
  SmootherFamily family_;
  double k_;
};

}  // namespace smoothic
