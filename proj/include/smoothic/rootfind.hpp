#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smoothic {

/// |f'(a)| at or below this is treated as a vanishing derivative; the step is
/// numerically meaningless in double precision below it.
inline constexpr double kDerivEpsilon = 1e-12;

/// Thrown when a series step is requested at a point where f'(a) ~ 0.
class DerivativeTooSmall : public std::runtime_error {
 public:
  explicit DerivativeTooSmall(double value)
      : std::runtime_error("root step requires f'(a) != 0 (|f'(a)| = " +
                           std::to_string(value) + ")") {}
};

/// Thrown when a truncated series produces a non-finite term.
class SeriesDiverged : public std::runtime_error {
 public:
  SeriesDiverged() : std::runtime_error("truncated root series produced a non-finite term") {}
};

/// Value plus derivatives of a univariate function at one point. Orders past
/// `analytic_orders` were filled by nested central finite differences.
struct DerivativeSet {
  std::vector<double> values;  // f, f_1, ..., f_order
  int analytic_orders = 0;
  bool fd_completed = false;
};

/// A univariate function presented as (f, f_1, ..., f_m) at any point, with
/// finite-difference completion up to `max_order` when the callback supplies
/// fewer analytic derivatives than requested. The callback may substitute a
/// Fisher/observed information surrogate for the true f_1; nothing downstream
/// can tell the difference.
class DifferentiableTarget {
 public:
  using EvalFn = std::function<std::vector<double>(double)>;

  DifferentiableTarget(EvalFn eval, int max_order)
      : eval_(std::move(eval)), max_order_(max_order) {
    if (max_order_ < 1) {
      throw std::invalid_argument("DifferentiableTarget: max_order must be >= 1");
    }
    if (!eval_) {
      throw std::invalid_argument("DifferentiableTarget: eval callback required");
    }
  }

  int max_order() const noexcept { return max_order_; }

  double value(double x) const {
    const std::vector<double> raw = eval_(x);
    if (raw.empty()) {
      throw std::invalid_argument("DifferentiableTarget: eval returned no values");
    }
    return raw[0];
  }

  /// f and its first `order` derivatives at x, 0 <= order <= max_order.
  DerivativeSet derivatives(double x, int order) const {
    if (order < 0 || order > max_order_) {
      throw std::invalid_argument("DifferentiableTarget: derivative order out of range");
    }
    DerivativeSet out;
    std::vector<double> raw = eval_(x);
    if (raw.empty()) {
      throw std::invalid_argument("DifferentiableTarget: eval returned no values");
    }
    out.analytic_orders = static_cast<int>(raw.size()) - 1;
    raw.resize(std::min<std::size_t>(raw.size(), static_cast<std::size_t>(order) + 1));
    out.values = std::move(raw);
    while (static_cast<int>(out.values.size()) <= order) {
      const int next = static_cast<int>(out.values.size());
      out.values.push_back(fd_derivative(x, next, out.analytic_orders));
      out.fd_completed = true;
    }
    return out;
  }

 private:
  // Order-r central difference of the highest analytic derivative, giving the
  // derivative of total order `target_order` = analytic + r.
  double fd_derivative(double x, int target_order, int analytic) const {
    const int r = target_order - analytic;
    const double h =
        std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (2.0 + r)) *
        std::max(1.0, std::abs(x));
    double acc = 0.0;
    double binom = 1.0;
    for (int i = 0; i <= r; ++i) {
      const double point = x + (0.5 * r - i) * h;
      const std::vector<double> raw = eval_(point);
      const double top = raw.at(static_cast<std::size_t>(analytic));
      acc += ((i % 2 == 0) ? 1.0 : -1.0) * binom * top;
      binom *= static_cast<double>(r - i) / static_cast<double>(i + 1);
    }
    return acc / std::pow(h, r);
  }

  EvalFn eval_;
  int max_order_;
};

/// Same target with f and every derivative multiplied by c_a; roots unchanged.
inline DifferentiableTarget rescale(const DifferentiableTarget& target, double c_a) {
  if (c_a == 0.0 || !std::isfinite(c_a)) {
    throw std::invalid_argument("rescale: scaling constant must be finite and nonzero");
  }
  const int order = target.max_order();
  return DifferentiableTarget(
      [target, c_a, order](double x) {
        DerivativeSet d = target.derivatives(x, order);
        for (double& v : d.values) v *= c_a;
        return d.values;
      },
      order);
}

namespace detail {

// Taylor coefficients b_1..b_q of the local inverse of f about y0 = f(a),
// from the Taylor coefficients c_j = f_j(a)/j! of f about a. Solved
// triangularly from sum_j b_j * [t^i] c(t)^j = [i == 1].
inline std::vector<double> invert_taylor_coefficients(const std::vector<double>& derivs) {
  const int q = static_cast<int>(derivs.size()) - 1;
  std::vector<double> c(q + 1, 0.0);
  double factorial = 1.0;
  for (int j = 1; j <= q; ++j) {
    factorial *= j;
    c[j] = derivs[static_cast<std::size_t>(j)] / factorial;
  }

  // power[d] = [t^d] c(t)^j for the current j.
  std::vector<double> power = c;
  std::vector<std::vector<double>> powers;
  powers.push_back(power);
  for (int j = 2; j <= q; ++j) {
    std::vector<double> next(q + 1, 0.0);
    for (int d1 = 1; d1 <= q; ++d1) {
      if (power[d1] == 0.0) continue;
      for (int d2 = 1; d1 + d2 <= q; ++d2) {
        next[d1 + d2] += power[d1] * c[d2];
      }
    }
    power = std::move(next);
    powers.push_back(power);
  }

  std::vector<double> b(q + 1, 0.0);
  b[1] = 1.0 / c[1];
  for (int i = 2; i <= q; ++i) {
    double acc = 0.0;
    for (int j = 1; j < i; ++j) {
      acc += b[j] * powers[static_cast<std::size_t>(j - 1)][i];
    }
    b[i] = -acc / powers[static_cast<std::size_t>(i - 1)][i];  // [t^i] c^i = c_1^i
  }
  return b;
}

}  // namespace detail

/// One order-truncated inverse-series step from seed a toward a root of f.
/// Order 1 is exactly the Newton step a - f(a)/f'(a); higher orders add the
/// inverse-function Taylor corrections, with truncation error o(|f(a)|^order).
inline double lagrange_step(const DifferentiableTarget& target, double a, int order) {
  if (order < 1 || order > target.max_order()) {
    throw std::invalid_argument("lagrange_step: order must be in [1, max_order]");
  }
  const DerivativeSet d = target.derivatives(a, order);
  const double f = d.values[0];
  const double f1 = d.values[1];
  if (!(std::abs(f1) > kDerivEpsilon)) {
    throw DerivativeTooSmall(std::abs(f1));
  }

  double x = a - f / f1;
  if (order > 1) {
    const std::vector<double> b = detail::invert_taylor_coefficients(d.values);
    double shift_power = -f;  // (-f)^i
    for (int i = 2; i <= order; ++i) {
      shift_power *= -f;
      x += b[static_cast<std::size_t>(i)] * shift_power;
    }
  }
  if (!std::isfinite(x)) {
    throw SeriesDiverged();
  }
  return x;
}

enum class RootMethod { LagrangeSeries, Newton };

struct RootSolveReport {
  double root_estimate = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  RootMethod method_used = RootMethod::LagrangeSeries;
  bool converged = false;
  std::vector<double> residual_history;  // |f| at the seed and each accepted iterate
};

/// Iterated root solving: series steps re-seeded at each output, with a damped
/// Newton fallback whenever a step fails to reduce |f| or is non-finite.
/// Accepted iterates have strictly decreasing |f|.
inline RootSolveReport solve_root(const DifferentiableTarget& target, double seed,
                                  int order, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_root: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("solve_root: max_iter must be >= 1");
  if (order < 1 || order > target.max_order()) {
    throw std::invalid_argument("solve_root: order must be in [1, max_order]");
  }

  RootSolveReport report;
  double a = seed;
  double residual = std::abs(target.value(a));
  bool seed_perturbed = false;
  report.residual_history.push_back(residual);

  while (report.iterations < max_iter && residual >= tol) {
    bool accepted = false;
    double next = a;
    double next_residual = residual;
    RootMethod method = RootMethod::LagrangeSeries;

    try {
      const double cand = lagrange_step(target, a, order);
      const double cand_residual = std::abs(target.value(cand));
      if (std::isfinite(cand) && cand_residual < residual) {
        next = cand;
        next_residual = cand_residual;
        accepted = true;
      }
    } catch (const DerivativeTooSmall&) {
      if (report.iterations == 0 && !seed_perturbed) {
        // One epsilon-nudge of the seed is allowed before giving up.
        seed_perturbed = true;
        a += 1e-6 * std::max(1.0, std::abs(a));
        residual = std::abs(target.value(a));
        report.residual_history.assign(1, residual);
        continue;
      }
      break;
    } catch (const SeriesDiverged&) {
      // fall through to the damped Newton step
    }

    if (!accepted) {
      const DerivativeSet d = target.derivatives(a, 1);
      if (!(std::abs(d.values[1]) > kDerivEpsilon)) break;
      const double direction = -d.values[0] / d.values[1];
      double scale = 1.0;
      for (int halving = 0; halving <= 30; ++halving) {
        const double cand = a + scale * direction;
        const double cand_residual = std::abs(target.value(cand));
        if (std::isfinite(cand) && cand_residual < residual) {
          next = cand;
          next_residual = cand_residual;
          method = RootMethod::Newton;
          accepted = true;
          break;
        }
        scale *= 0.5;
      }
      if (!accepted) break;  // no descent direction left
    }

    a = next;
    residual = next_residual;
    report.method_used = method;
    report.iterations += 1;
    report.residual_history.push_back(residual);
  }

  report.root_estimate = a;
  report.final_residual = residual;
  report.converged = residual < tol;
  return report;
}

}  // namespace smoothic
