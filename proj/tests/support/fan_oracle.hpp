#pragma once
// Independent 50-digit evaluation of the smooth fan and of U^r, with
// Richardson-extrapolated central differences. Test-only.

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <array>
#include <vector>

namespace oracle {

using mp = boost::multiprecision::cpp_bin_float_50;

struct Fan {
  mp w_minus, w_plus, eps;
  int q = 1;  // 1 or 2 (closed-form integrals)

  mp w0(const mp& x) const {
    const mp z = eps * x;
    mp integral, K;
    if (q == 1) {
      integral = atan(z);
      K = 2 / boost::math::constants::pi<mp>();
    } else {
      integral = (z / (1 + z * z) + atan(z)) / 2;
      K = 4 / boost::math::constants::pi<mp>();
    }
    return (w_minus + w_plus) / 2 + (w_plus - w_minus) / 2 * K * integral;
  }

  mp w0_prime(const mp& x) const {
    const mp z = eps * x;
    const mp K = (q == 1 ? 2 : 4) / boost::math::constants::pi<mp>();
    return (w_plus - w_minus) / 2 * K * eps * pow(1 + z * z, -q);
  }

  /// Foot of the characteristic through (t, x): bisection then Newton.
  mp foot(const mp& t, const mp& x) const {
    mp lo = x - w_plus * t, hi = x - w_minus * t;
    auto g = [&](const mp& s) { return s + w0(s) * t - x; };
    for (int i = 0; i < 60; ++i) {
      const mp mid = (lo + hi) / 2;
      (g(mid) < 0 ? lo : hi) = mid;
    }
    mp s = (lo + hi) / 2;
    for (int i = 0; i < 12; ++i) s -= g(s) / (1 + w0_prime(s) * t);
    return s;
  }

  mp w(const mp& t, const mp& x) const { return w0(foot(t, x)); }
};

/// Polynomial flux f = sum c_k u^k; inverse of f' by Newton from a bisection start.
struct Flux {
  std::vector<mp> c;

  mp d(const mp& u, int order) const {
    mp acc = 0;
    for (int k = static_cast<int>(c.size()) - 1; k >= order; --k) {
      mp falling = 1;
      for (int j = 0; j < order; ++j) falling *= (k - j);
      acc = acc * u + c[k] * falling;
    }
    return acc;
  }

  mp inverse_speed(const mp& v, mp lo, mp hi) const {
    for (int i = 0; i < 60; ++i) {
      const mp mid = (lo + hi) / 2;
      (d(mid, 1) < v ? lo : hi) = mid;
    }
    mp u = (lo + hi) / 2;
    for (int i = 0; i < 12; ++i) u -= (d(u, 1) - v) / d(u, 2);
    return u;
  }
};

struct Rarefaction {
  Fan fan;
  Flux flux;
  mp u_minus, u_plus;

  mp U(const mp& t, const mp& x) const { return flux.inverse_speed(fan.w(t, x), u_minus - 1, u_plus + 1); }
};

/// Central difference of order k (1..4) with step h.
template <class F>
mp central(F&& f, const mp& x, const mp& h, int k) {
  switch (k) {
    case 1: return (f(x + h) - f(x - h)) / (2 * h);
    case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    case 3: return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
    case 4: return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / (h * h * h * h);
  }
  return 0;
}

/// Two-level Richardson extrapolation of `central` (error O(h^4)).
template <class F>
mp richardson(F&& f, const mp& x, const mp& h, int k) {
  const mp coarse = central(f, x, h, k);
  const mp fine = central(f, x, h / 2, k);
  return (4 * fine - coarse) / 3;
}

} // namespace oracle
