#pragma once
/**
 * @file waves.hpp
 * @brief Rarefaction fans: the exact Riemann fan u^r(x/t), the smooth Burgers
 *        approximation w(t,x) built by characteristics from an arctan-like
 *        initial profile, and U^r = (f')^{-1}(w) with spatial derivatives up
 *        to order four.
 *
 * All evaluations are pure functions of their arguments.
 */

#include <bbmb/errors.hpp>
#include <bbmb/flux.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace bbmb {

/// Coefficients of u_t + f(u)_x - alpha u_txx - beta u_xx + delta u_xxx + gamma u_xxxx = 0.
struct PdeCoefficients {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  double delta = 0.0;
};

// ---------------------------------------------------------------------------
// Smooth Burgers fan
// ---------------------------------------------------------------------------

/// K_q such that K_q * int_0^inf (1+y^2)^{-q} dy = 1.
inline double normalizing_constant(double q) {
  if (!(q > 0.5)) throw ContractViolation("q must exceed 1/2");
  if (q == 1.0) return 2.0 / std::numbers::pi;
  return 2.0 * std::tgamma(q) / (std::sqrt(std::numbers::pi) * std::tgamma(q - 0.5));
}

/**
 * Parameters of the smoothed Burgers datum
 *   w0(x) = (w- + w+)/2 + (w+ - w-)/2 * K_q * int_0^{eps x} (1+y^2)^{-q} dy.
 * w_minus == w_plus is accepted as the degenerate constant state.
 */
struct SmoothFanParams {
  double w_minus = -1.0;
  double w_plus = 1.0;
  double eps = 1.0;
  double q = 1.0;
  double K_q = 2.0 / std::numbers::pi;

  static SmoothFanParams make(double w_minus, double w_plus, double eps = 1.0, double q = 1.0) {
    if (!(w_minus <= w_plus)) throw ContractViolation("SmoothFanParams: need w_minus <= w_plus");
    if (!(eps > 0.0)) throw ContractViolation("SmoothFanParams: eps must be positive");
    return SmoothFanParams{w_minus, w_plus, eps, q, normalizing_constant(q)};
  }

  double half_jump() const noexcept { return 0.5 * (w_plus - w_minus); }            // w~
  double max_abs_state() const noexcept { return std::max(std::abs(w_minus), std::abs(w_plus)); }  // w~~
  double midpoint() const noexcept { return 0.5 * (w_plus + w_minus); }
};

namespace detail {

/// int_0^z (1+y^2)^{-q} dy
inline double profile_integral(double z, double q) {
  if (q == 1.0) return std::atan(z);
  // y = tan(theta) turns the integrand into cos^{2q-2}(theta) on a finite interval
  const double upper = std::atan(z);
  auto integrand = [q](double th) { return std::pow(std::cos(th), 2.0 * q - 2.0); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 15, 1e-15);
}

/// g^{(k)}(z) for g(z) = (1+z^2)^{-q}, k = 0..3.
inline double profile_kernel(double z, double q, int k) {
  const double p = 1.0 + z * z;
  const double g = std::pow(p, -q);
  switch (k) {
    case 0: return g;
    case 1: return -2.0 * q * z * g / p;
    case 2: return -2.0 * q * g / p + 4.0 * q * (q + 1.0) * z * z * g / (p * p);
    case 3:
      return 12.0 * q * (q + 1.0) * z * g / (p * p) -
             8.0 * q * (q + 1.0) * (q + 2.0) * z * z * z * g / (p * p * p);
    default: break;
  }
  throw ContractViolation("profile_kernel: order out of range");
}

} // namespace detail

/// w0 and its derivatives up to order 4 at x.
inline double w0_eval(const SmoothFanParams& p, double x, int order) {
  if (order < 0 || order > 4) throw ContractViolation("w0_eval: order must be in 0..4");
  const double amp = p.half_jump() * p.K_q;
  const double z = p.eps * x;
  if (order == 0) return p.midpoint() + amp * detail::profile_integral(z, p.q);
  return amp * std::pow(p.eps, order) * detail::profile_kernel(z, p.q, order - 1);
}

inline constexpr double default_char_tol = 1e-12;

/**
 * Foot x0 of the characteristic through (t, x): x = x0 + w0(x0) t.
 * The map x0 -> x0 + w0(x0) t is strictly increasing, so the root is unique
 * and lies in [x - w+ t, x - w- t]. `guess` only seeds the iteration.
 */
inline double char_solve(const SmoothFanParams& p, double t, double x, double tol = default_char_tol,
                         std::optional<double> guess = std::nullopt) {
  if (!(t >= 0.0)) throw DomainError("char_solve: t must be non-negative");
  if (t == 0.0) return x;
  if (p.w_minus == p.w_plus) return x - p.w_minus * t;

  auto residual = [&](double s) { return s + w0_eval(p, s, 0) * t - x; };
  double lo = x - p.w_plus * t;
  double hi = x - p.w_minus * t;
  double s = guess.value_or(x - p.midpoint() * t);
  if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);

  constexpr int max_iter = 200;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double g = residual(s);
  for (int it = 0; it < max_iter; ++it) {
    const double dg = 1.0 + w0_eval(p, s, 1) * t;
    if (std::abs(g) <= tol) {
      const double polished = s - g / dg;
      const double gp = residual(polished);
      return std::abs(gp) <= std::abs(g) ? polished : s;
    }
    if (g < 0.0) lo = s; else hi = s;
    double next = s - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double gn = residual(next);
    // Newton that fails to halve the residual is replaced by bisection
    if (std::abs(gn) > 0.5 * std::abs(g) && next != 0.5 * (lo + hi)) {
      const double mid = 0.5 * (lo + hi);
      const double gm = residual(mid);
      if (std::abs(gm) < std::abs(gn)) { s = mid; g = gm; continue; }
    }
    s = next;
    g = gn;
    if (hi - lo <= 4.0 * eps * std::max(1.0, std::abs(s))) break;
  }
  const double floor = 16.0 * eps * (std::abs(x) + std::abs(s) + std::abs(w0_eval(p, s, 0) * t));
  if (std::abs(g) <= std::max(tol, floor)) return s;
  throw NumericError("char_solve: no convergence at t = " + std::to_string(t) + ", x = " + std::to_string(x), g);
}

/// Value, spatial derivatives 1..4 and time derivative of a scalar field.
struct Jet {
  double value = 0.0;
  std::array<double, 5> dx{};  // dx[k] = d^k/dx^k, dx[0] == value
  double dt = 0.0;
};

/**
 * w(t,x) = w0(x0(t,x)) and its derivatives. With a_k = w0^{(k)}(x0) and
 * D = 1 + a_1 t, implicit differentiation of x = x0 + w0(x0) t gives
 *   w_x = a1/D, w_xx = a2/D^3, w_xxx = a3/D^4 - 3t a2^2/D^5,
 *   w_xxxx = a4/D^5 - 10t a2 a3/D^6 + 15t^2 a2^3/D^7,
 * and w_t = -w w_x from the Burgers equation.
 */
inline Jet w_smooth_derivs(const SmoothFanParams& p, double t, double x,
                           std::optional<double> guess = std::nullopt, double* foot = nullptr) {
  const double s = char_solve(p, t, x, default_char_tol, guess);
  if (foot) *foot = s;
  std::array<double, 5> a{};
  for (int k = 0; k <= 4; ++k) a[k] = w0_eval(p, s, k);
  const double D = 1.0 + a[1] * t;
  const double D2 = D * D, D3 = D2 * D, D4 = D3 * D, D5 = D4 * D;
  Jet j;
  j.value = a[0];
  j.dx[0] = a[0];
  j.dx[1] = a[1] / D;
  j.dx[2] = a[2] / D3;
  j.dx[3] = a[3] / D4 - 3.0 * t * a[2] * a[2] / D5;
  j.dx[4] = a[4] / D5 - 10.0 * t * a[2] * a[3] / (D5 * D) + 15.0 * t * t * a[2] * a[2] * a[2] / (D5 * D2);
  j.dt = -j.value * j.dx[1];
  return j;
}

// ---------------------------------------------------------------------------
// Approximate rarefaction U^r = (f')^{-1}(w(t,x; f'(u-), f'(u+)))
// ---------------------------------------------------------------------------

class ApproxRarefaction {
public:
  /// eps is the smoothing scale of the datum; q is fixed to 1.
  ApproxRarefaction(FluxModel flux, double u_minus, double u_plus, double eps = 1.0)
      : flux_(std::move(flux)), u_minus_(u_minus), u_plus_(u_plus) {
    if (!(u_minus <= u_plus)) throw ContractViolation("ApproxRarefaction: need u_minus <= u_plus");
    if (u_minus < u_plus) flux_.require_convex(u_minus - 1.0, u_plus + 1.0);
    params_ = SmoothFanParams::make(flux_.eval(u_minus, 1), flux_.eval(u_plus, 1), eps, 1.0);
  }

  const FluxModel& flux() const noexcept { return flux_; }
  const SmoothFanParams& params() const noexcept { return params_; }
  double u_minus() const noexcept { return u_minus_; }
  double u_plus() const noexcept { return u_plus_; }
  bool is_constant() const noexcept { return u_minus_ == u_plus_; }
  Bracket bracket() const noexcept { return {u_minus_ - 1.0, u_plus_ + 1.0}; }

  /// U^r and derivatives at (t, x); `guess` seeds the characteristic solve.
  Jet eval(double t, double x, std::optional<double> guess = std::nullopt, double* foot = nullptr) const {
    if (!(t >= 0.0)) throw DomainError("approx_rarefaction_eval: t must be non-negative");
    if (is_constant()) {
      if (foot) *foot = x;
      Jet j;
      j.value = j.dx[0] = u_minus_;
      return j;
    }
    const Jet w = w_smooth_derivs(params_, t, x, guess, foot);
    const double U = inv_lambda(flux_, w.value, bracket());
    const double p1 = flux_.eval(U, 1), p2 = flux_.eval(U, 2), p3 = flux_.eval(U, 3),
                 p4 = flux_.eval(U, 4), p5 = flux_.eval(U, 5);
    // derivatives of h = (f')^{-1} with respect to w
    const double i2 = 1.0 / p2;
    const double h1 = i2;
    const double h2 = -p3 * i2 * i2 * i2;
    const double h3 = -p4 * std::pow(i2, 4) + 3.0 * p3 * p3 * std::pow(i2, 5);
    const double h4 = -p5 * std::pow(i2, 5) + 10.0 * p3 * p4 * std::pow(i2, 6) - 15.0 * p3 * p3 * p3 * std::pow(i2, 7);
    const double w1 = w.dx[1], w2 = w.dx[2], w3 = w.dx[3], w4 = w.dx[4];
    Jet j;
    j.value = j.dx[0] = U;
    j.dx[1] = h1 * w1;
    j.dx[2] = h2 * w1 * w1 + h1 * w2;
    j.dx[3] = h3 * w1 * w1 * w1 + 3.0 * h2 * w1 * w2 + h1 * w3;
    j.dx[4] = h4 * w1 * w1 * w1 * w1 + 6.0 * h3 * w1 * w1 * w2 + h2 * (3.0 * w2 * w2 + 4.0 * w1 * w3) + h1 * w4;
    j.dt = -p1 * j.dx[1];
    return j;
  }

private:
  FluxModel flux_;
  double u_minus_;
  double u_plus_;
  SmoothFanParams params_;
};

inline Jet approx_rarefaction_eval(const ApproxRarefaction& ar, double t, double x) { return ar.eval(t, x); }

/**
 * F(U^r) = alpha U_txx + beta U_xx - delta U_xxx - gamma U_xxxx from a
 * precomputed jet, with U_txx = -(f(U))_xxx expanded by the chain rule.
 */
inline double forcing_from_jet(const FluxModel& flux, const PdeCoefficients& c, const Jet& U) {
  const double u1 = U.dx[1], u2 = U.dx[2], u3 = U.dx[3], u4 = U.dx[4];
  if (u1 == 0.0 && u2 == 0.0 && u3 == 0.0 && u4 == 0.0) return 0.0;
  const double f1 = flux.eval(U.value, 1), f2 = flux.eval(U.value, 2), f3 = flux.eval(U.value, 3);
  const double flux_xxx = f3 * u1 * u1 * u1 + 3.0 * f2 * u1 * u2 + f1 * u3;
  return -c.alpha * flux_xxx + c.beta * u2 - c.delta * u3 - c.gamma * u4;
}

inline double forcing_F(const ApproxRarefaction& ar, const PdeCoefficients& c, double t, double x) {
  return forcing_from_jet(ar.flux(), c, ar.eval(t, x));
}

// ---------------------------------------------------------------------------
// Exact Riemann fan
// ---------------------------------------------------------------------------

/// u^r(x/t; u-, u+). u- == u+ gives the constant state.
inline double exact_fan(const FluxModel& flux, double u_minus, double u_plus, double t, double x) {
  if (!(t > 0.0)) throw DomainError("exact_fan: t must be positive");
  if (!(u_minus <= u_plus)) throw ContractViolation("exact_fan: need u_minus <= u_plus");
  if (u_minus == u_plus) return u_minus;
  const double lm = flux.eval(u_minus, 1), lp = flux.eval(u_plus, 1);
  if (x <= lm * t) return u_minus;
  if (x >= lp * t) return u_plus;
  return inv_lambda(flux, x / t, {u_minus, u_plus});
}

struct FanDerivatives {
  double du_dx = 0.0;
  double d2u_dx2 = 0.0;
};

/**
 * Classical x-derivatives of the fan. Inside the fan u = (f')^{-1}(x/t), so
 * u_x = 1/(f''(u) t) and u_xx = -f'''(u) / (f''(u)^3 t^2). The edges
 * x = f'(u+-) t belong to the interior branch.
 */
inline FanDerivatives exact_fan_derivs(const FluxModel& flux, double u_minus, double u_plus, double t, double x) {
  if (!(t > 0.0)) throw DomainError("exact_fan_derivs: t must be positive");
  if (!(u_minus <= u_plus)) throw ContractViolation("exact_fan_derivs: need u_minus <= u_plus");
  if (u_minus == u_plus) return {};
  const double lm = flux.eval(u_minus, 1), lp = flux.eval(u_plus, 1);
  if (x < lm * t || x > lp * t) return {};
  const double u = inv_lambda(flux, std::clamp(x / t, lm, lp), {u_minus, u_plus});
  const double f2 = flux.eval(u, 2), f3 = flux.eval(u, 3);
  return {1.0 / (f2 * t), -f3 / (f2 * f2 * f2 * t * t)};
}

// ---------------------------------------------------------------------------
// Decay envelopes (the min{...} factor of the L^r bounds, constant omitted)
// ---------------------------------------------------------------------------

enum class EnvelopeKind {
  dx_w_Lr, dt_w_Lr, dx2_w_Lr, dx3_w_Lr, dx4_w_Lr,
  dx_Ur_Lr, dx2_Ur_Lr, dx3_Ur_Lr, dx4_Ur_Lr
};

/// Scales entering the envelopes: eps, w~ = (w+ - w-)/2, w~~ = max|w+-|, q.
struct EnvelopeScales {
  double eps = 1.0;
  double w_tilde = 1.0;
  double w_tilde2 = 1.0;
  double q = 1.0;

  static EnvelopeScales from(const SmoothFanParams& p) {
    return {p.eps, p.half_jump(), p.max_abs_state(), p.q};
  }
};

/**
 * Bracketed min-expression of the L^r^r decay bound for the requested
 * quantity at time t. Only finite r >= 1 is supported; U^r envelopes
 * require q = 1.
 */
inline double decay_envelope(EnvelopeKind kind, const EnvelopeScales& s, double t, double r) {
  if (!(r >= 1.0) || !std::isfinite(r)) throw ContractViolation("decay_envelope: r must be finite and >= 1");
  if (!(t >= 0.0)) throw ContractViolation("decay_envelope: t must be non-negative");
  const double e = s.eps, w = s.w_tilde, q = s.q;
  const double T = 1.0 + t;
  const double c = 1.0 - 1.0 / (2.0 * q);
  auto P = [](double b, double x) { return std::pow(b, x); };

  const bool is_ur = kind == EnvelopeKind::dx_Ur_Lr || kind == EnvelopeKind::dx2_Ur_Lr ||
                     kind == EnvelopeKind::dx3_Ur_Lr || kind == EnvelopeKind::dx4_Ur_Lr;
  if (is_ur && q != 1.0) throw ContractViolation("decay_envelope: U^r envelopes require q = 1");
  if (!is_ur && !(w > 0.0)) throw ContractViolation("decay_envelope: w envelopes require w_tilde > 0");

  switch (kind) {
    case EnvelopeKind::dx_w_Lr:
      return std::min(P(e, r - 1) * P(w, r), w * P(T, -r + 1));
    case EnvelopeKind::dt_w_Lr:
      return P(s.w_tilde2, r) * std::min(P(e, r - 1) * P(w, r), w * P(T, -r + 1));
    case EnvelopeKind::dx2_w_Lr:
      return std::min(P(e, 2 * r - 1) * P(w, r),
                      P(e, (r - 1) * c) * P(w, -(r - 1) / (2 * q)) * P(T, -r - (r - 1) / (2 * q)));
    case EnvelopeKind::dx3_w_Lr: {
      const double a = P(e, 3 * r) * P(w, r) * P(1 + e * w * T, 1 - 4 * r) +
                       P(e, 2 * (r - 1) * c) * P(w, -(r - 1) / q) * P(T, -1 - (r - 1) * (1 + 1 / q)) +
                       P(e, (2 * r - 1) * c) * P(w, -(2 * r - 1) / (2 * q)) * P(T, -r - (2 * r - 1) / (2 * q));
      return std::min(P(e, 3 * r - 1) * P(w, r), a);
    }
    case EnvelopeKind::dx4_w_Lr: {
      const double b = P(e, 3 * r) * P(w, r) * P(1 + e * w * T, 1 - 5 * r) +
                       P(e, (3 * r - 2) * c) * P(w, -(3 * r - 2) / (2 * q)) * P(T, -r * (1 + 3 / (2 * q)) + 1 / q) +
                       P(e, (3 * r - 1) * c) * P(w, -(3 * r - 1) / (2 * q)) * P(T, -r - (3 * r - 1) / (2 * q));
      return std::min(P(e, 4 * r - 1) * P(w, r), b);
    }
    case EnvelopeKind::dx_Ur_Lr:
      return std::min(P(e, r - 1), P(T, -r + 1));
    case EnvelopeKind::dx2_Ur_Lr:
      return std::min(P(e, 2 * r - 1), P(e, (r - 1) / 2) * P(T, -(3 * r - 1) / 2));
    case EnvelopeKind::dx3_Ur_Lr:
      return std::min(P(e, 3 * r - 1), P(e, r - 1) * P(T, -2 * r + 1));
    case EnvelopeKind::dx4_Ur_Lr:
      return std::min(P(e, 4 * r - 1),
                      P(e, (3 * r - 2) / 2) * P(T, -std::min(1.5 * r + 1, 2.5 * r - 1)));
  }
  throw ContractViolation("decay_envelope: unknown kind");
}

} // namespace bbmb
