#pragma once
/**
 * @file grid.hpp
 * @brief Uniform grid on [-L, L], central difference operators with zero
 *        ghost values, the tridiagonal BBM operator (I - alpha D2), and
 *        trapezoid-rule norms.
 *
 * Ghost convention: values at x_{-2}, x_{-1}, x_N, x_{N+1} are zero. All
 * operators below agree on it, so (I - alpha D2) built here is exactly the
 * matrix that diff_matrix_apply(.., 2) represents.
 */

#include <bbmb/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bbmb {

class Grid1D {
public:
  Grid1D(double half_length, std::size_t n_points) : L_(half_length), n_(n_points) {
    if (!(half_length > 0.0)) throw ContractViolation("Grid1D: half_length must be positive");
    if (n_points < 16) throw ContractViolation("Grid1D: need at least 16 points");
    dx_ = 2.0 * L_ / static_cast<double>(n_ - 1);
  }

  double half_length() const noexcept { return L_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t i) const noexcept { return -L_ + static_cast<double>(i) * dx_; }

  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }

  /// Same domain with dx halved (nodes nest: every other fine node is a coarse node).
  Grid1D refined() const { return Grid1D(L_, 2 * n_ - 1); }

private:
  double L_;
  std::size_t n_;
  double dx_;
};

namespace detail {

/// phi padded with two zero ghosts on each side.
inline void pad_ghosts(std::span<const double> phi, std::vector<double>& padded) {
  padded.assign(phi.size() + 4, 0.0);
  std::copy(phi.begin(), phi.end(), padded.begin() + 2);
}

/// Central stencil of order 1..4 on a padded array p, node i (unpadded index).
inline double stencil(const double* p, std::size_t i, int order, double dx) {
  const double* c = p + i + 2;
  switch (order) {
    case 1: return (c[1] - c[-1]) / (2.0 * dx);
    case 2: return (c[1] - 2.0 * c[0] + c[-1]) / (dx * dx);
    case 3: return (c[2] - 2.0 * c[1] + 2.0 * c[-1] - c[-2]) / (2.0 * dx * dx * dx);
    case 4: return (c[2] - 4.0 * c[1] + 6.0 * c[0] - 4.0 * c[-1] + c[-2]) / (dx * dx * dx * dx);
    default: return 0.0;
  }
}

} // namespace detail

/// Second-order central approximation of d^order/dx^order at every node.
inline std::vector<double> diff_matrix_apply(const Grid1D& grid, std::span<const double> phi, int order) {
  if (order < 1 || order > 4) throw ContractViolation("diff_matrix_apply: order must be in 1..4");
  if (phi.size() != grid.size()) throw ContractViolation("diff_matrix_apply: size mismatch");
  if (grid.size() < static_cast<std::size_t>(2 * order + 1))
    throw ContractViolation("diff_matrix_apply: grid too small for stencil");
  std::vector<double> padded;
  detail::pad_ghosts(phi, padded);
  std::vector<double> out(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) out[i] = detail::stencil(padded.data(), i, order, grid.dx());
  return out;
}

/**
 * Factored (I - alpha D2) with zero ghosts, solved by the Thomas algorithm.
 * The matrix is constant for a run, so the forward-elimination multipliers
 * are computed once.
 */
class HelmholtzOperator {
public:
  HelmholtzOperator(const Grid1D& grid, double alpha) : n_(grid.size()), alpha_(alpha) {
    if (!(alpha > 0.0)) throw ContractViolation("HelmholtzOperator: alpha must be positive");
    const double r = alpha / (grid.dx() * grid.dx());
    off_ = -r;
    diag_ = 1.0 + 2.0 * r;
    cprime_.resize(n_);
    inv_denom_.resize(n_);
    double c_prev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double denom = diag_ - (i == 0 ? 0.0 : off_ * c_prev);
      inv_denom_[i] = 1.0 / denom;
      cprime_[i] = off_ * inv_denom_[i];
      c_prev = cprime_[i];
    }
  }

  double alpha() const noexcept { return alpha_; }

  /// y = (I - alpha D2)^{-1} rhs; rhs and y may alias.
  void solve(std::span<const double> rhs, std::span<double> y) const {
    if (rhs.size() != n_ || y.size() != n_) throw ContractViolation("helmholtz_solve: size mismatch");
    double d_prev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = (rhs[i] - (i == 0 ? 0.0 : off_ * d_prev)) * inv_denom_[i];
      y[i] = d;
      d_prev = d;
    }
    for (std::size_t i = n_ - 1; i-- > 0;) y[i] -= cprime_[i] * y[i + 1];
  }

  /// (I - alpha D2) y
  std::vector<double> apply(std::span<const double> y) const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double left = i > 0 ? y[i - 1] : 0.0;
      const double right = i + 1 < n_ ? y[i + 1] : 0.0;
      out[i] = diag_ * y[i] + off_ * (left + right);
    }
    return out;
  }

private:
  std::size_t n_;
  double alpha_;
  double diag_ = 1.0;
  double off_ = 0.0;
  std::vector<double> cprime_;
  std::vector<double> inv_denom_;
};

inline std::vector<double> helmholtz_solve(const Grid1D& grid, double alpha, std::span<const double> rhs) {
  HelmholtzOperator op(grid, alpha);
  std::vector<double> y(rhs.size());
  op.solve(rhs, y);
  return y;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// Trapezoid rule for integral of g over the grid.
inline double trapezoid(const Grid1D& grid, std::span<const double> g) {
  if (g.empty()) return 0.0;
  double s = 0.0;
  for (double v : g) s += v;
  s -= 0.5 * (g.front() + g.back());
  return s * grid.dx();
}

/// ||g||_{L^r}^r by the trapezoid rule.
inline double lr_power(const Grid1D& grid, std::span<const double> g, double r) {
  double s = 0.0;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    s += w * std::pow(std::abs(g[i]), r);
  }
  return s * grid.dx();
}

inline double l2_squared(const Grid1D& grid, std::span<const double> g) {
  double s = 0.0;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) s += g[i] * g[i];
  if (n > 0) s -= 0.5 * (g.front() * g.front() + g.back() * g.back());
  return s * grid.dx();
}

inline double l2_norm(const Grid1D& grid, std::span<const double> g) { return std::sqrt(l2_squared(grid, g)); }

inline double sup_norm(std::span<const double> g) {
  double m = 0.0;
  for (double v : g) m = std::max(m, std::abs(v));
  return m;
}

} // namespace bbmb
