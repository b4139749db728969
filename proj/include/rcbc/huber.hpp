#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "rcbc/error.hpp"
#include "rcbc/matrix.hpp"

namespace rcbc {

inline constexpr double kHuberEfficiency = 1.345;
inline constexpr double kInfiniteTau = std::numeric_limits<double>::infinity();

inline void check_tau(double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("tau must be positive (got " + std::to_string(tau) + ")");
}

/// Huber loss; tau = +inf gives the squared loss a²/2.
inline double huber_loss(double a, double tau) {
  check_tau(tau);
  const double abs_a = std::abs(a);
  if (abs_a <= tau) return 0.5 * a * a;
  return tau * abs_a - 0.5 * tau * tau;
}

/// Sum of elementwise Huber losses of (x − u).
inline double huber_cost(const Matrix& x, const Matrix& u, double tau) {
  x.check_same_shape(u);
  check_tau(tau);
  double total = 0.0;
  const auto xv = x.values();
  const auto uv = u.values();
  for (std::size_t k = 0; k < xv.size(); ++k) {
    const double a = std::abs(xv[k] - uv[k]);
    total += a <= tau ? 0.5 * a * a : tau * a - 0.5 * tau * tau;
  }
  return total;
}

/// argmin_w  L_tau(x − w) + (rho/2)(w − anchor)².
inline double w_update(double x, double anchor, double rho, double tau) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("rho must be positive and finite");
  check_tau(tau);
  if (rho / (1.0 + rho) * std::abs(x - anchor) <= tau) return (x + rho * anchor) / (1.0 + rho);
  return x + soft_threshold(anchor - x, tau / rho);
}

/// Which rule picks the robustification parameter.
enum class TauMode { fixed, mad_default, tuning_free };

struct TauPolicy {
  TauMode mode = TauMode::tuning_free;
  /// Used when mode == fixed. May be +inf for the squared-loss mode.
  double fixed_value = kInfiniteTau;
  /// Minimum admissible tau; absolute. Zero means "1e-4 · mad(X)" at fit time.
  double floor = 0.0;

  static TauPolicy fixed(double tau) { return {TauMode::fixed, tau, 0.0}; }
  static TauPolicy mad_default() { return {TauMode::mad_default, kInfiniteTau, 0.0}; }
  static TauPolicy tuning_free() { return {TauMode::tuning_free, kInfiniteTau, 0.0}; }

  void validate() const {
    if (mode == TauMode::fixed) check_tau(fixed_value);
    if (!(floor >= 0.0)) throw InvalidParameter("tau floor must be nonnegative");
  }
};

inline constexpr double kTauFloorFraction = 1e-4;

/// 1.345 · mad(x); throws DegenerateScale for a constant matrix.
inline double tau_mad_default(const Matrix& x) {
  const double sigma = mad(x);
  if (!(sigma > 0.0)) throw DegenerateScale("mad of data is zero; tau cannot be derived from scale");
  return kHuberEfficiency * sigma;
}

/// Right-hand side of the tuning-free equation: log(N·N)/N.
inline double tau_equation_rhs(std::size_t n_cells) {
  const double n = static_cast<double>(n_cells);
  return std::log(n * n) / n;
}

/// Left-hand side: (1/(N − s)) Σ min(r², τ²)/τ².
inline double tau_equation_lhs(std::span<const double> residuals, std::size_t s, double tau) {
  const double t2 = tau * tau;
  double acc = 0.0;
  for (double r : residuals) {
    const double r2 = r * r;
    acc += r2 < t2 ? r2 / t2 : 1.0;
  }
  return acc / static_cast<double>(residuals.size() - s);
}

/// Solves the tuning-free robustification equation for tau by bisection.
///
/// The left side is continuous and nonincreasing in tau, so the root is
/// bracketed between the floor and a doubled max|r|. Bisection runs until the
/// bracket cannot be split further in double precision, which makes the result
/// deterministic for a given input.
///
/// Returns std::nullopt when every residual is zero (the caller keeps its
/// previous tau). If the left side is already below the right side at the
/// floor there is no root; the floor is returned.
inline std::optional<double> solve_tau(std::span<const double> residuals, std::size_t s, std::size_t n,
                                       std::size_t p, double floor = 0.0) {
  const std::size_t n_cells = residuals.size();
  if (n == 0 || p == 0 || n * p != n_cells) {
    throw InvalidParameter("solve_tau: residual count must equal n*p");
  }
  if (s >= n_cells) throw InvalidParameter("solve_tau: s must be smaller than n*p");
  if (!(floor >= 0.0)) throw InvalidParameter("solve_tau: floor must be nonnegative");

  double max_abs = 0.0;
  for (double r : residuals) max_abs = std::max(max_abs, std::abs(r));
  if (max_abs == 0.0) return std::nullopt;

  const double rhs = tau_equation_rhs(n_cells);
  double lo = std::max(floor, 1e-12);
  if (tau_equation_lhs(residuals, s, lo) <= rhs) return lo;

  double hi = std::max(max_abs, lo);
  while (tau_equation_lhs(residuals, s, hi) > rhs) hi *= 2.0;

  // Invariant: lhs(lo) > rhs >= lhs(hi).
  for (int it = 0; it < 2000; ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (tau_equation_lhs(residuals, s, mid) > rhs) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double l_lo = tau_equation_lhs(residuals, s, lo) - rhs;
  const double l_hi = tau_equation_lhs(residuals, s, hi) - rhs;
  return std::abs(l_lo) < std::abs(l_hi) ? lo : hi;
}

}  // namespace rcbc
