#pragma once
/**
 * @file diagnostics.hpp
 * @brief Discrete norms, energy balance, a priori functional, Sobolev
 *        inequality margins and fan-convergence errors evaluated on
 *        snapshots of a run.
 */

#include <bbmb/errors.hpp>
#include <bbmb/grid.hpp>
#include <bbmb/solver.hpp>
#include <bbmb/waves.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bbmb {

/// L^2 and sup norms of phi and its difference quotients of order 0..4.
struct NormSet {
  std::array<double, 5> l2{};   // ||D^k phi||_{L^2}
  std::array<double, 5> sup{};  // max |D^k phi|

  double h(int k) const {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) s += l2[j] * l2[j];
    return std::sqrt(s);
  }
};

inline NormSet discrete_norms(const Grid1D& grid, std::span<const double> phi) {
  NormSet n;
  n.l2[0] = l2_norm(grid, phi);
  n.sup[0] = sup_norm(phi);
  for (int k = 1; k <= 4; ++k) {
    const auto d = diff_matrix_apply(grid, phi, k);
    n.l2[k] = l2_norm(grid, d);
    n.sup[k] = sup_norm(d);
  }
  return n;
}

/// integral of (dxUr) phi^2; dxUr must be non-negative.
inline double weighted_rarefaction_term(const Grid1D& grid, std::span<const double> phi,
                                        std::span<const double> dxUr) {
  if (phi.size() != dxUr.size()) throw ContractViolation("weighted_rarefaction_term: size mismatch");
  std::vector<double> integrand(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (dxUr[i] < 0.0)
      throw InvariantViolation("weighted_rarefaction_term: negative dxUr at node " + std::to_string(i));
    integrand[i] = dxUr[i] * phi[i] * phi[i];
  }
  return trapezoid(grid, integrand);
}

// ---------------------------------------------------------------------------
// Energy balance
// ---------------------------------------------------------------------------

/// Terms of the phi-multiplied energy balance at one instant.
struct EnergyTerms {
  double energy = 0.0;       // 1/2 ||phi||^2 + alpha/2 ||phi_x||^2
  double rarefaction = 0.0;  // int int_0^phi (f'(eta+U) - f'(U)) d eta U_x dx
  double dissipation = 0.0;  // beta ||phi_x||^2 + gamma ||phi_xx||^2
  double forcing = 0.0;      // int phi F dx

  double rate() const noexcept { return rarefaction + dissipation - forcing; }
};

/**
 * Grid sums here mirror the summation by parts of the scheme: ||phi_x||
 * uses one-sided differences between neighbouring nodes (ghosts included),
 * ||phi_xx|| uses D2, and all sums are plain dx-weighted sums.
 */
inline EnergyTerms energy_terms(const Solver& solver, const FieldState& s) {
  const Grid1D& g = solver.grid();
  const auto& c = solver.config().coeffs;
  const FluxModel& f = solver.config().flux;
  const auto tab = (s.table && s.table->t == s.t) ? s.table : solver.table(s.t);
  const std::size_t n = s.phi.size();
  const double dx = g.dx();
  const auto& phi = s.phi;

  double sum_sq = 0.0, grad_sq = 0.0, curv_sq = 0.0, rare = 0.0, forcing = 0.0;
  using GL5 = boost::math::quadrature::gauss<double, 5>;
  for (std::size_t i = 0; i < n; ++i) {
    sum_sq += phi[i] * phi[i];
    const double left = i > 0 ? phi[i - 1] : 0.0;
    const double right = i + 1 < n ? phi[i + 1] : 0.0;
    const double fwd = (right - phi[i]) / dx;
    grad_sq += fwd * fwd;
    const double d2 = (right - 2.0 * phi[i] + left) / (dx * dx);
    curv_sq += d2 * d2;
    forcing += phi[i] * tab->F[i];
    if (tab->Ux[i] != 0.0 && phi[i] != 0.0) {
      const double U = tab->U[i];
      const double fU = f.eval(U, 1);
      const double inner = GL5::integrate([&](double eta) { return f.eval(eta + U, 1) - fU; }, 0.0, phi[i]);
      rare += inner * tab->Ux[i];
    }
  }
  {
    const double first = phi.front() / dx;  // ghost on the left
    grad_sq += first * first;
    // D2 at the two inner ghosts enters the D4 summation by parts
    const double gl = phi.front() / (dx * dx), gr = phi.back() / (dx * dx);
    curv_sq += gl * gl + gr * gr;
  }
  EnergyTerms e;
  e.energy = 0.5 * sum_sq * dx + 0.5 * c.alpha * grad_sq * dx;
  e.rarefaction = rare * dx;
  e.dissipation = c.beta * grad_sq * dx + c.gamma * curv_sq * dx;
  e.forcing = forcing * dx;
  return e;
}

/**
 * Absolute residual of the energy balance over [prev.t, next.t]:
 *   |Delta E + integral of (rarefaction + dissipation - forcing) dt|
 * with the time integral by the trapezoid rule.
 */
inline double energy_identity_residual(const Solver& solver, const FieldState& prev, const FieldState& next) {
  const EnergyTerms a = energy_terms(solver, prev);
  const EnergyTerms b = energy_terms(solver, next);
  const double h = next.t - prev.t;
  return std::abs(b.energy - a.energy + 0.5 * h * (a.rate() + b.rate()));
}

// ---------------------------------------------------------------------------
// Sobolev inequality margins
// ---------------------------------------------------------------------------

struct SobolevMargins {
  /// sqrt(2) ||D^k phi||^{1/2} ||D^{k+1} phi||^{1/2} - sup|D^k phi|, k = 0..3
  std::array<double, 4> basic{};
  /// smallest margin among the chained interpolation bounds for sup|phi|,
  /// sup|phi_x| and sup|phi_xx|
  double tightest_chain = 0.0;
};

inline SobolevMargins sobolev_checks(const NormSet& n) {
  const double r2 = std::numbers::sqrt2;
  auto P = [](double a, double e) { return a > 0.0 ? std::pow(a, e) : 0.0; };
  const auto& L = n.l2;
  SobolevMargins m;
  for (int k = 0; k < 4; ++k) m.basic[k] = r2 * P(L[k], 0.5) * P(L[k + 1], 0.5) - n.sup[k];

  const double h1_0 = std::sqrt(L[0] * L[0] + L[1] * L[1]);
  const double h1_1 = std::sqrt(L[1] * L[1] + L[2] * L[2]);
  const double h1_2 = std::sqrt(L[2] * L[2] + L[3] * L[3]);
  const std::array<double, 8> chain = {
      std::min(r2 * P(L[0], 0.75) * P(L[2], 0.25), h1_0) - n.sup[0],
      r2 * P(L[0], 0.75) * P(L[1], 0.125) * P(L[3], 0.125) - n.sup[0],
      r2 * P(L[0], 0.75) * P(L[1], 0.125) * P(L[2], 1.0 / 16) * P(L[4], 1.0 / 16) - n.sup[0],
      std::min(r2 * P(L[1], 0.75) * P(L[3], 0.25), h1_1) - n.sup[1],
      r2 * P(L[1], 0.75) * P(L[2], 0.125) * P(L[4], 0.125) - n.sup[1],
      std::min(r2 * P(L[2], 0.75) * P(L[4], 0.25), h1_2) - n.sup[2],
      h1_0 - n.sup[0],
      h1_1 - n.sup[1],
  };
  m.tightest_chain = *std::min_element(chain.begin(), chain.end());
  return m;
}

// ---------------------------------------------------------------------------
// Distance to the exact fan
// ---------------------------------------------------------------------------

struct FanError {
  double u = 0.0;
  double dxu = 0.0;
  double dx2u = 0.0;
};

/// Half-width of the band around each fan edge excluded from derivative errors.
inline double fan_edge_band(double t, double dx) { return std::sqrt(1.0 + t) * std::sqrt(dx); }

/**
 * Sup-norm distance of u = U^r + phi (and of u_x, u_xx) to the exact fan.
 * Derivative errors skip nodes within fan_edge_band of x = f'(u+-) t.
 */
inline FanError fan_error(const Solver& solver, const FieldState& s, double t_min = 1.0) {
  if (s.t < t_min) throw DomainError("fan_error: t below t_min");
  const SolverConfig& cfg = solver.config();
  const Grid1D& g = cfg.grid;
  const auto tab = (s.table && s.table->t == s.t) ? s.table : solver.table(s.t);
  const auto d1 = diff_matrix_apply(g, s.phi, 1);
  const auto d2 = diff_matrix_apply(g, s.phi, 2);
  const bool constant = cfg.u_minus == cfg.u_plus;
  const double edge_l = cfg.flux.eval(cfg.u_minus, 1) * s.t;
  const double edge_r = cfg.flux.eval(cfg.u_plus, 1) * s.t;
  const double band = fan_edge_band(s.t, g.dx());
  FanError e;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    const double u = tab->U[i] + s.phi[i];
    e.u = std::max(e.u, std::abs(u - exact_fan(cfg.flux, cfg.u_minus, cfg.u_plus, s.t, x)));
    if (!constant && (std::abs(x - edge_l) < band || std::abs(x - edge_r) < band)) continue;
    const FanDerivatives fd = exact_fan_derivs(cfg.flux, cfg.u_minus, cfg.u_plus, s.t, x);
    e.dxu = std::max(e.dxu, std::abs(tab->Ux[i] + d1[i] - fd.du_dx));
    e.dx2u = std::max(e.dx2u, std::abs(tab->Uxx[i] + d2[i] - fd.d2u_dx2));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Per-snapshot report and time accumulators
// ---------------------------------------------------------------------------

struct DiagnosticsReport {
  double t = 0.0;
  double l2_phi = 0.0, h1_phi = 0.0, h2_phi = 0.0, h3_phi = 0.0;
  double sup_phi = 0.0, sup_dx_phi = 0.0, sup_dx2_phi = 0.0, sup_dx3_phi = 0.0;
  double weighted_l2 = 0.0;
  double energy_lhs = 0.0;       // Delta E over the last interval
  double energy_rhs = 0.0;       // minus the time integral of the balance rate
  double energy_residual = 0.0;  // |energy_lhs - energy_rhs|
  double apriori_accum = 0.0;
  double sup_err_u = 0.0, sup_err_dxu = 0.0, sup_err_dx2u = 0.0;
  double sobolev_margin_0 = 0.0, sobolev_margin_1 = 0.0, sobolev_margin_2 = 0.0;
  double sobolev_margin_3 = 0.0;  // recorded, not gated
  double sobolev_chain = 0.0;
  bool fan_error_valid = false;

  // integrands of the a priori functional and the uniform-estimate audit
  double dx_phi_h3_sq = 0.0;  // ||phi_x||_{H^3}^2
  double dt_phi_h2_sq = 0.0;  // ||phi_t||_{H^2}^2
  double sup_dt_phi = 0.0, sup_dtdx_phi = 0.0;
};

/**
 * ||phi(t)||_{H^3}^2 + integral_0^t [weighted + ||phi_x||_{H^3}^2 + ||phi_t||_{H^2}^2],
 * time integral by the trapezoid rule over the snapshots.
 */
inline double apriori_functional(std::span<const DiagnosticsReport> series) {
  if (series.empty()) return 0.0;
  double integral = 0.0;
  auto integrand = [](const DiagnosticsReport& r) { return r.weighted_l2 + r.dx_phi_h3_sq + r.dt_phi_h2_sq; };
  for (std::size_t i = 1; i < series.size(); ++i)
    integral += 0.5 * (series[i].t - series[i - 1].t) * (integrand(series[i]) + integrand(series[i - 1]));
  return series.back().h3_phi * series.back().h3_phi + integral;
}

/**
 * Observer that turns each snapshot into a DiagnosticsReport. The energy
 * residual covers the interval since the previous snapshot; phi_t is
 * recomputed from the right-hand side at the snapshot.
 */
class DiagnosticsRecorder {
public:
  explicit DiagnosticsRecorder(double fan_t_min = 1.0) : fan_t_min_(fan_t_min) {}

  void operator()(const Solver& solver, const FieldState& s) {
    const Grid1D& g = solver.grid();
    const auto tab = (s.table && s.table->t == s.t) ? s.table : solver.table(s.t);
    const NormSet n = discrete_norms(g, s.phi);
    DiagnosticsReport r;
    r.t = s.t;
    r.l2_phi = n.l2[0];
    r.h1_phi = n.h(1);
    r.h2_phi = n.h(2);
    r.h3_phi = n.h(3);
    r.sup_phi = n.sup[0];
    r.sup_dx_phi = n.sup[1];
    r.sup_dx2_phi = n.sup[2];
    r.sup_dx3_phi = n.sup[3];
    r.weighted_l2 = weighted_rarefaction_term(g, s.phi, tab->Ux);

    const EnergyTerms e = energy_terms(solver, s);
    if (have_prev_) {
      const double h = s.t - prev_t_;
      r.energy_lhs = e.energy - prev_energy_.energy;
      r.energy_rhs = -0.5 * h * (e.rate() + prev_energy_.rate());
      r.energy_residual = std::abs(r.energy_lhs - r.energy_rhs);
      residual_total_ += r.energy_residual;
    }

    const auto phi_t = solver.rhs(s);
    const NormSet nt = discrete_norms(g, phi_t);
    r.dx_phi_h3_sq = n.l2[1] * n.l2[1] + n.l2[2] * n.l2[2] + n.l2[3] * n.l2[3] + n.l2[4] * n.l2[4];
    r.dt_phi_h2_sq = nt.l2[0] * nt.l2[0] + nt.l2[1] * nt.l2[1] + nt.l2[2] * nt.l2[2];
    r.sup_dt_phi = nt.sup[0];
    r.sup_dtdx_phi = nt.sup[1];

    const SobolevMargins m = sobolev_checks(n);
    r.sobolev_margin_0 = m.basic[0];
    r.sobolev_margin_1 = m.basic[1];
    r.sobolev_margin_2 = m.basic[2];
    r.sobolev_margin_3 = m.basic[3];
    r.sobolev_chain = m.tightest_chain;

    if (s.t >= fan_t_min_) {
      const FanError fe = fan_error(solver, s, fan_t_min_);
      r.sup_err_u = fe.u;
      r.sup_err_dxu = fe.dxu;
      r.sup_err_dx2u = fe.dx2u;
      r.fan_error_valid = true;
    }

    if (!reports_.empty()) {
      const auto& p = reports_.back();
      const double h = s.t - p.t;
      apriori_integral_ += 0.5 * h * (p.weighted_l2 + p.dx_phi_h3_sq + p.dt_phi_h2_sq +
                                      r.weighted_l2 + r.dx_phi_h3_sq + r.dt_phi_h2_sq);
    }
    r.apriori_accum = r.h3_phi * r.h3_phi + apriori_integral_;

    prev_energy_ = e;
    prev_t_ = s.t;
    have_prev_ = true;
    reports_.push_back(r);
  }

  const std::vector<DiagnosticsReport>& reports() const noexcept { return reports_; }
  /// Sum of interval residuals since t = 0.
  double residual_total() const noexcept { return residual_total_; }

private:
  double fan_t_min_;
  std::vector<DiagnosticsReport> reports_;
  EnergyTerms prev_energy_{};
  double prev_t_ = 0.0;
  bool have_prev_ = false;
  double residual_total_ = 0.0;
  double apriori_integral_ = 0.0;
};

// ---------------------------------------------------------------------------
// Decay rates and uniform estimates
// ---------------------------------------------------------------------------

/// Least-squares slope of log(value) against log(1 + t) over samples with t >= t_min.
inline double decay_slope_fit(std::span<const std::pair<double, double>> series, double t_min) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, v] : series) {
    if (t < t_min) continue;
    if (!(v > 0.0)) throw DomainError("decay_slope_fit: values must be positive");
    pts.emplace_back(std::log1p(t), std::log(v));
  }
  if (pts.size() < 5) throw ContractViolation("decay_slope_fit: need at least 5 samples with t >= t_min");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) { mx += x; my += y; }
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

struct UniformAccumulator {
  std::string name;
  double total = 0.0;      // integral over the whole series
  double first_half = 0.0;  // integral up to t_end / 2
  /// share of the total contributed after t_end / 2
  double tail_fraction() const noexcept { return total > 0.0 ? (total - first_half) / total : 0.0; }
};

/// Time integrals of powers of sup norms of phi, its x-derivatives and phi_t.
inline std::vector<UniformAccumulator> uniform_estimate_audit(std::span<const DiagnosticsReport> series) {
  struct Item { const char* name; double DiagnosticsReport::*field; int power; };
  static constexpr std::array<Item, 10> items = {{
      {"sup_phi^2", &DiagnosticsReport::sup_phi, 2},
      {"sup_phi^32", &DiagnosticsReport::sup_phi, 32},
      {"sup_dx_phi^2", &DiagnosticsReport::sup_dx_phi, 2},
      {"sup_dx_phi^16", &DiagnosticsReport::sup_dx_phi, 16},
      {"sup_dx2_phi^2", &DiagnosticsReport::sup_dx2_phi, 2},
      {"sup_dx2_phi^8", &DiagnosticsReport::sup_dx2_phi, 8},
      {"sup_dx3_phi^2", &DiagnosticsReport::sup_dx3_phi, 2},
      {"sup_dx3_phi^4", &DiagnosticsReport::sup_dx3_phi, 4},
      {"sup_dt_phi^2", &DiagnosticsReport::sup_dt_phi, 2},
      {"sup_dtdx_phi^2", &DiagnosticsReport::sup_dtdx_phi, 2},
  }};
  std::vector<UniformAccumulator> out;
  if (series.empty()) {
    for (const auto& it : items) out.push_back({it.name});
    return out;
  }
  const double t_half = 0.5 * (series.front().t + series.back().t);
  for (const auto& it : items) {
    UniformAccumulator acc{it.name};
    for (std::size_t i = 1; i < series.size(); ++i) {
      const double a = std::pow(series[i - 1].*(it.field), it.power);
      const double b = std::pow(series[i].*(it.field), it.power);
      const double piece = 0.5 * (series[i].t - series[i - 1].t) * (a + b);
      acc.total += piece;
      if (series[i].t <= t_half + 1e-12) acc.first_half += piece;
    }
    out.push_back(acc);
  }
  return out;
}

} // namespace bbmb
