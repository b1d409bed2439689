#pragma once
/**
 * @file flux.hpp
 * @brief Polynomial convective fluxes f(u) with exact derivatives and
 *        inversion of the characteristic speed lambda = f'(u).
 */

#include <bbmb/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace bbmb {

enum class FluxKind { burgers, quartic, custom };

inline std::string to_string(FluxKind k) {
  switch (k) {
    case FluxKind::burgers: return "burgers";
    case FluxKind::quartic: return "quartic";
    case FluxKind::custom: return "custom";
  }
  return "custom";
}

/// Closed interval used as the search bracket for inverting f'.
struct Bracket {
  double lo;
  double hi;
};

/**
 * Flux given by power-series coefficients f(u) = sum_k c_k u^k.
 *
 * Derivatives up to order 5 are evaluated exactly by differentiating the
 * coefficient list. Convexity is not enforced at construction because the
 * constant-state problems only need f in C^2; call require_convex() where
 * f'' > 0 is assumed (rarefaction construction).
 */
class FluxModel {
public:
  static constexpr int max_order = 5;

  static FluxModel burgers() { return FluxModel(FluxKind::burgers, {0.0, 0.0, 0.5}); }
  static FluxModel quartic() { return FluxModel(FluxKind::quartic, {0.0, 0.0, 0.5, 0.0, 0.25}); }
  static FluxModel custom(std::vector<double> coeffs) {
    for (double c : coeffs)
      if (!std::isfinite(c)) throw ContractViolation("flux coefficients must be finite");
    return FluxModel(FluxKind::custom, std::move(coeffs));
  }

  FluxKind kind() const noexcept { return kind_; }
  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

  /// d^order f / du^order at u.
  double eval(double u, int order = 0) const {
    if (order < 0 || order > max_order)
      throw ContractViolation("flux derivative order must be in 0..5, got " + std::to_string(order));
    const int n = static_cast<int>(coeffs_.size());
    double acc = 0.0;
    // Horner on the differentiated series: sum_{k>=order} c_k k!/(k-order)! u^{k-order}
    for (int k = n - 1; k >= order; --k) {
      double falling = 1.0;
      for (int j = 0; j < order; ++j) falling *= static_cast<double>(k - j);
      acc = acc * u + coeffs_[k] * falling;
    }
    return acc;
  }

  /// f'(u), f''(u), ... packed as d[0..5].
  std::array<double, 6> derivatives(double u) const {
    std::array<double, 6> d{};
    for (int k = 0; k <= max_order; ++k) d[k] = eval(u, k);
    return d;
  }

  /// Throws InvariantViolation if f'' <= 0 at any of `samples` points on [lo, hi].
  void require_convex(double lo, double hi, int samples = 2001) const {
    if (samples < 2) samples = 2;
    for (int i = 0; i < samples; ++i) {
      const double u = lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
      if (!(eval(u, 2) > 0.0))
        throw InvariantViolation("flux is not strictly convex at u = " + std::to_string(u));
    }
  }

  /// max |f'(u)| over [lo, hi] (sampled; exact at the endpoints for convex f).
  double max_abs_speed(double lo, double hi, int samples = 257) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double u = lo + (hi - lo) * static_cast<double>(i) / std::max(1, samples - 1);
      m = std::max(m, std::abs(eval(u, 1)));
    }
    return m;
  }

private:
  FluxModel(FluxKind kind, std::vector<double> coeffs) : kind_(kind), coeffs_(std::move(coeffs)) {}

  FluxKind kind_;
  std::vector<double> coeffs_;
};

inline double flux_eval(const FluxModel& model, double u, int order) { return model.eval(u, order); }

inline constexpr double default_inv_lambda_tol = 1e-12;
inline constexpr int inv_lambda_max_iter = 60;

/**
 * Solve f'(u) = v for u on `bracket` by Newton with bisection fallback.
 * f' is assumed increasing on the bracket. On success |f'(u) - v| <= tol;
 * one extra Newton correction is applied after the tolerance is met so the
 * returned root is accurate to round-off.
 */
inline double inv_lambda(const FluxModel& model, double v, Bracket bracket,
                         double tol = default_inv_lambda_tol) {
  if (!(tol > 0.0)) throw ContractViolation("inv_lambda: tol must be positive");
  double lo = bracket.lo, hi = bracket.hi;
  double flo = model.eval(lo, 1) - v;
  double fhi = model.eval(hi, 1) - v;
  if (std::abs(flo) <= tol) return lo;
  if (std::abs(fhi) <= tol) return hi;
  if (flo > 0.0 || fhi < 0.0)
    throw OutOfRangeError("inv_lambda: v = " + std::to_string(v) + " outside f'([" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "])");

  // initial guess by linear interpolation of f' across the bracket
  double u = lo - flo * (hi - lo) / (fhi - flo);
  for (int it = 0; it < inv_lambda_max_iter; ++it) {
    const double r = model.eval(u, 1) - v;
    const double slope = model.eval(u, 2);
    if (std::abs(r) <= tol) {
      if (slope > 0.0) {
        const double polished = u - r / slope;
        if (polished >= lo && polished <= hi) return polished;
      }
      return u;
    }
    if (r < 0.0) lo = u; else hi = u;
    double next = (slope > 0.0) ? u - r / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u)))
      return next;
    u = next;
  }
  throw NumericError("inv_lambda: no convergence", model.eval(u, 1) - v);
}

} // namespace bbmb
