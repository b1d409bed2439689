#pragma once
/**
 * @file solver.hpp
 * @brief Method-of-lines integration of the deviation phi = u - U^r on a
 *        truncated line:
 *
 *   (I - alpha D2) phi_t = -D1[f(phi + U^r) - f(U^r)] + beta D2 phi
 *                          - delta D3 phi - gamma D4 phi + F(U^r),
 *
 * advanced with classical RK4. The BBM operator is inverted once per stage.
 */

#include <bbmb/errors.hpp>
#include <bbmb/flux.hpp>
#include <bbmb/grid.hpp>
#include <bbmb/waves.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bbmb {

enum class Variant {
  bbmb_fourth_order,      // gamma > 0, delta = 0
  kdv_bbmb_fourth_order,  // gamma > 0, delta != 0
  bbmb                    // gamma = delta = 0
};

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::bbmb_fourth_order: return "bbm-burgers-fourth-order";
    case Variant::kdv_bbmb_fourth_order: return "kdv-bbm-burgers-fourth-order";
    case Variant::bbmb: return "bbm-burgers";
  }
  return "unknown";
}

struct SolverConfig {
  PdeCoefficients coeffs;
  FluxModel flux = FluxModel::burgers();
  double u_minus = 0.0;
  double u_plus = 0.0;
  double eps = 1.0;
  Grid1D grid{200.0, 4001};
  double dt = 0.05;
  double t_end = 100.0;
  int snapshot_every = 10;

  Variant variant() const {
    if (coeffs.gamma > 0.0) return coeffs.delta == 0.0 ? Variant::bbmb_fourth_order : Variant::kdv_bbmb_fourth_order;
    if (coeffs.delta != 0.0) throw ContractViolation("gamma = 0 with delta != 0 is not a supported variant");
    return Variant::bbmb;
  }

  void validate() const {
    if (!(coeffs.alpha > 0.0)) throw ContractViolation("alpha must be positive");
    if (!(coeffs.beta > 0.0)) throw ContractViolation("beta must be positive");
    if (!(coeffs.gamma >= 0.0)) throw ContractViolation("gamma must be non-negative");
    if (!std::isfinite(coeffs.delta)) throw ContractViolation("delta must be finite");
    (void)variant();
    if (!(u_minus <= u_plus)) throw ContractViolation("need u_minus <= u_plus");
    if (!(eps > 0.0)) throw ContractViolation("eps must be positive");
    if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
    if (!(t_end > 0.0)) throw ContractViolation("t_end must be positive");
    if (snapshot_every < 1) throw ContractViolation("snapshot_every must be >= 1");
  }
};

/// U^r data sampled on the grid at one time.
struct RarefactionTable {
  double t = 0.0;
  std::vector<double> U, Ux, Uxx, Uxxx, Uxxxx, Ut;
  std::vector<double> F;
  std::vector<double> foot;  // characteristic feet, used to seed the next table
};

inline std::shared_ptr<const RarefactionTable> build_rarefaction_table(
    const ApproxRarefaction& ar, const PdeCoefficients& coeffs, const Grid1D& grid, double t,
    const RarefactionTable* seed = nullptr) {
  auto tab = std::make_shared<RarefactionTable>();
  const std::size_t n = grid.size();
  tab->t = t;
  for (auto* v : {&tab->U, &tab->Ux, &tab->Uxx, &tab->Uxxx, &tab->Uxxxx, &tab->Ut, &tab->F, &tab->foot})
    v->resize(n);
  const bool seeded = seed && seed->foot.size() == n;
  std::optional<double> guess;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x(i);
    // the foot moves by at most |w| dt between nearby times; neighbours are also close
    if (seeded) guess = seed->foot[i];
    double foot = x;
    const Jet j = ar.eval(t, x, guess, &foot);
    tab->U[i] = j.value;
    tab->Ux[i] = j.dx[1];
    tab->Uxx[i] = j.dx[2];
    tab->Uxxx[i] = j.dx[3];
    tab->Uxxxx[i] = j.dx[4];
    tab->Ut[i] = j.dt;
    tab->F[i] = forcing_from_jet(ar.flux(), coeffs, j);
    tab->foot[i] = foot;
    if (!seeded) guess = foot;
  }
  return tab;
}

/// Deviation field at time t with the U^r table for that time.
struct FieldState {
  double t = 0.0;
  std::vector<double> phi;
  std::shared_ptr<const RarefactionTable> table;
};

/**
 * Explicit step bound:
 *   0.5 * min( dx / max|f'|, dx^2 (1 + alpha k^2) / (beta + gamma k^2) ), k = pi/dx,
 * capped by the RK4 real-axis limit for the largest discrete eigenvalue of
 * (I - alpha D2)^{-1}(beta D2 - gamma D4), which matters when gamma = 0.
 */
inline double stable_dt(const SolverConfig& cfg) {
  const double dx = cfg.grid.dx();
  const auto& c = cfg.coeffs;
  const double k = std::numbers::pi / dx;
  const double speed = cfg.flux.max_abs_speed(cfg.u_minus, cfg.u_plus);
  const double convective = speed > 0.0 ? dx / speed : std::numeric_limits<double>::infinity();
  const double dissipative = dx * dx * (1.0 + c.alpha * k * k) / (c.beta + c.gamma * k * k);
  double dt = 0.5 * std::min(convective, dissipative);

  const double mu = 4.0 / (dx * dx);  // largest eigenvalue of -D2
  const double rho = (c.beta * mu + c.gamma * mu * mu) / (1.0 + c.alpha * mu);
  constexpr double rk4_real_axis = 2.5;  // |R(z)| <= 1 on [-2.785, 0]
  if (rho > 0.0) dt = std::min(dt, rk4_real_axis / rho);
  return dt;
}

/**
 * Holds the per-run invariants (rarefaction, factored BBM operator, work
 * buffers) and caches U^r tables for the most recent stage times.
 * Not thread-safe; one Solver per simulation.
 */
class Solver {
public:
  explicit Solver(SolverConfig cfg)
      : cfg_(std::move(cfg)),
        ar_((cfg_.validate(), ApproxRarefaction(cfg_.flux, cfg_.u_minus, cfg_.u_plus, cfg_.eps))),
        helmholtz_(cfg_.grid, cfg_.coeffs.alpha) {}

  const SolverConfig& config() const noexcept { return cfg_; }
  const ApproxRarefaction& rarefaction() const noexcept { return ar_; }
  const Grid1D& grid() const noexcept { return cfg_.grid; }
  const HelmholtzOperator& helmholtz() const noexcept { return helmholtz_; }

  std::shared_ptr<const RarefactionTable> table(double t) const {
    for (const auto& tab : cache_)
      if (tab && tab->t == t) return tab;
    const RarefactionTable* seed = nullptr;
    for (const auto& tab : cache_)
      if (tab && (!seed || std::abs(tab->t - t) < std::abs(seed->t - t))) seed = tab.get();
    auto tab = build_rarefaction_table(ar_, cfg_.coeffs, cfg_.grid, t, seed);
    cache_[next_slot_] = tab;
    next_slot_ = (next_slot_ + 1) % cache_.size();
    return tab;
  }

  FieldState make_state(double t, std::vector<double> phi) const {
    if (phi.size() != cfg_.grid.size()) throw ContractViolation("state size does not match grid");
    return FieldState{t, std::move(phi), table(t)};
  }

  /// phi_t at (t, phi) using the supplied U^r table.
  void rhs(const RarefactionTable& tab, std::span<const double> phi, std::span<double> out) const {
    const std::size_t n = cfg_.grid.size();
    const double dx = cfg_.grid.dx();
    const auto& c = cfg_.coeffs;
    const FluxModel& f = cfg_.flux;
    detail::pad_ghosts(phi, pad_phi_);
    pad_g_.assign(n + 4, 0.0);
    for (std::size_t i = 0; i < n; ++i) pad_g_[i + 2] = f.eval(phi[i] + tab.U[i]) - f.eval(tab.U[i]);

    const double* p = pad_phi_.data() + 2;
    const double* g = pad_g_.data() + 2;
    const double c1 = 1.0 / (2.0 * dx);
    const double c2 = c.beta / (dx * dx);
    const double c3 = c.delta / (2.0 * dx * dx * dx);
    const double c4 = c.gamma / (dx * dx * dx * dx);
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(j);
      const double conv = (g[i + 1] - g[i - 1]) * c1;
      const double visc = (p[i + 1] - 2.0 * p[i] + p[i - 1]) * c2;
      const double disp = (p[i + 2] - 2.0 * p[i + 1] + 2.0 * p[i - 1] - p[i - 2]) * c3;
      const double hyper = (p[i + 2] - 4.0 * p[i + 1] + 6.0 * p[i] - 4.0 * p[i - 1] + p[i - 2]) * c4;
      out[j] = -conv + visc - disp - hyper + tab.F[j];
    }
    helmholtz_.solve(out, out);
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(out[j])) throw BlowUpError(j, tab.t);
  }

  std::vector<double> rhs(const FieldState& s) const {
    std::vector<double> out(s.phi.size());
    rhs(s.table && s.table->t == s.t ? *s.table : *table(s.t), s.phi, out);
    return out;
  }

  /// One classical RK4 step from s to s.t + dt.
  FieldState step(const FieldState& s, double dt) const { return advance(s, s.t + dt); }

  /// One RK4 step landing exactly on t_next.
  FieldState advance(const FieldState& s, double t_next) const {
    const std::size_t n = s.phi.size();
    const double dt = t_next - s.t;
    const double t_half = s.t + 0.5 * dt;
    const auto tab0 = (s.table && s.table->t == s.t) ? s.table : table(s.t);
    const auto tab_half = table(t_half);
    const auto tab1 = table(t_next);

    k1_.resize(n); k2_.resize(n); k3_.resize(n); k4_.resize(n); stage_.resize(n);
    rhs(*tab0, s.phi, k1_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = s.phi[i] + 0.5 * dt * k1_[i];
    rhs(*tab_half, stage_, k2_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = s.phi[i] + 0.5 * dt * k2_[i];
    rhs(*tab_half, stage_, k3_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = s.phi[i] + dt * k3_[i];
    rhs(*tab1, stage_, k4_);

    FieldState next{t_next, std::vector<double>(n), tab1};
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      next.phi[i] = s.phi[i] + w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
      if (!std::isfinite(next.phi[i])) throw BlowUpError(i, t_next);
    }
    return next;
  }

private:
  SolverConfig cfg_;
  ApproxRarefaction ar_;
  HelmholtzOperator helmholtz_;
  mutable std::array<std::shared_ptr<const RarefactionTable>, 4> cache_{};
  mutable std::size_t next_slot_ = 0;
  mutable std::vector<double> pad_phi_, pad_g_;
  mutable std::vector<double> k1_, k2_, k3_, k4_, stage_;
};

inline std::vector<double> rhs_phi(const SolverConfig& cfg, const FieldState& s) {
  return Solver(cfg).rhs(s);
}

inline FieldState step_rk4(const SolverConfig& cfg, const FieldState& s, double dt) {
  return Solver(cfg).step(s, dt);
}

/// phi0 = u0(x) - U^r(0, x).
template <class Profile>
std::vector<double> deviation_from_profile(const Solver& solver, Profile&& u0) {
  const auto tab = solver.table(0.0);
  const Grid1D& g = solver.grid();
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = u0(g.x(i)) - tab->U[i];
  return phi;
}

using Observer = std::function<void(const Solver&, const FieldState&)>;

struct SimulationRecord {
  std::vector<FieldState> snapshots;  // phi only; tables are dropped to bound memory
  FieldState final_state;
  std::size_t steps = 0;
  bool blew_up = false;
  std::string error;
  bool boundary_leak = false;
  double boundary_leak_time = 0.0;
};

/// max|phi| over the outermost 5% of nodes on each side exceeds 1e-6 max|phi|.
inline bool boundary_leak(std::span<const double> phi) {
  const std::size_t n = phi.size();
  const std::size_t band = std::max<std::size_t>(1, n / 20);
  double edge = 0.0;
  for (std::size_t i = 0; i < band; ++i) edge = std::max({edge, std::abs(phi[i]), std::abs(phi[n - 1 - i])});
  const double peak = sup_norm(phi);
  return peak > 0.0 && edge > 1e-6 * peak;
}

struct RunOptions {
  bool keep_snapshots = true;
};

/**
 * Integrate from t = 0 to t_end with fixed dt (the last step may be shorter).
 * Observers see t = 0, every snapshot_every-th step and the final state.
 * A blow-up ends the run early; the record keeps everything up to it.
 */
inline SimulationRecord run(const Solver& solver, std::vector<double> initial_phi,
                            const std::vector<Observer>& observers = {}, RunOptions opts = {}) {
  const SolverConfig& cfg = solver.config();
  if (initial_phi.size() != cfg.grid.size()) throw ContractViolation("initial_phi size does not match grid");
  SimulationRecord rec;
  FieldState s = solver.make_state(0.0, std::move(initial_phi));

  auto snapshot = [&](const FieldState& st) {
    if (!rec.boundary_leak && boundary_leak(st.phi)) {
      rec.boundary_leak = true;
      rec.boundary_leak_time = st.t;
    }
    for (const auto& obs : observers) obs(solver, st);
    if (opts.keep_snapshots) rec.snapshots.push_back(FieldState{st.t, st.phi, nullptr});
  };

  snapshot(s);
  const auto n_full = static_cast<std::size_t>(std::floor(cfg.t_end / cfg.dt * (1.0 + 1e-12)));
  bool last_was_snapshot = true;
  try {
    std::size_t n = 0;
    for (; n < n_full; ++n) {
      s = solver.advance(s, static_cast<double>(n + 1) * cfg.dt);
      last_was_snapshot = (n + 1) % static_cast<std::size_t>(cfg.snapshot_every) == 0;
      if (last_was_snapshot) snapshot(s);
    }
    const double remaining = cfg.t_end - s.t;
    if (remaining > 1e-12 * cfg.t_end) {
      s = solver.advance(s, cfg.t_end);
      ++n;
      last_was_snapshot = false;
    }
    rec.steps = n;
    if (!last_was_snapshot) snapshot(s);
  } catch (const BlowUpError& e) {
    rec.blew_up = true;
    rec.error = e.what();
  }
  rec.final_state = s;
  return rec;
}

inline SimulationRecord run(const SolverConfig& cfg, std::vector<double> initial_phi,
                            const std::vector<Observer>& observers = {}, RunOptions opts = {}) {
  Solver solver(cfg);
  return run(solver, std::move(initial_phi), observers, opts);
}

} // namespace bbmb
