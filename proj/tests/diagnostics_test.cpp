#include <bbmb/diagnostics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bbmb;

namespace {

SolverConfig config(double u_minus, double u_plus, double gamma = 0.1) {
  SolverConfig c;
  c.coeffs = {1.0, 1.0, gamma, 0.0};
  c.u_minus = u_minus;
  c.u_plus = u_plus;
  c.grid = Grid1D(100.0, 2001);
  c.dt = 0.05;
  c.t_end = 10.0;
  c.snapshot_every = 10;
  return c;
}

std::vector<double> bump(const Grid1D& g, double amp = 0.1) {
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = amp * std::exp(-g.x(i) * g.x(i));
  return phi;
}

std::vector<DiagnosticsReport> record(const SolverConfig& c, std::vector<double> phi0) {
  const Solver s(c);
  DiagnosticsRecorder rec;
  const auto r = run(s, std::move(phi0), {[&](const Solver& sv, const FieldState& st) { rec(sv, st); }}, {false});
  EXPECT_FALSE(r.blew_up);
  return rec.reports();
}

} // namespace

TEST(DiscreteNorms, ZeroField) {
  const Grid1D g(10.0, 101);
  const auto n = discrete_norms(g, std::vector<double>(g.size(), 0.0));
  for (int k = 0; k <= 4; ++k) {
    EXPECT_EQ(n.l2[k], 0.0);
    EXPECT_EQ(n.sup[k], 0.0);
  }
}

TEST(DiscreteNorms, OrderedAndGaussian) {
  const Grid1D g(20.0, 4001);
  const auto n = discrete_norms(g, bump(g, 1.0));
  EXPECT_NEAR(n.l2[0], std::pow(std::numbers::pi / 2.0, 0.25), 1e-6);
  EXPECT_NEAR(n.l2[1] * n.l2[1], std::sqrt(std::numbers::pi / 2.0), 10 * g.dx() * g.dx());  // int (2x e^{-x^2})^2
  EXPECT_LE(n.h(0), n.h(1));
  EXPECT_LE(n.h(1), n.h(2));
  EXPECT_LE(n.h(2), n.h(3));
  EXPECT_DOUBLE_EQ(n.sup[0], 1.0);
}

TEST(WeightedTerm, ConstantStateIsZero) {
  const Grid1D g(10.0, 101);
  const std::vector<double> zero(g.size(), 0.0);
  EXPECT_EQ(weighted_rarefaction_term(g, bump(g), zero), 0.0);
}

TEST(WeightedTerm, UnitFieldIntegratesTheJump) {
  const auto c = config(-0.4, 0.4);
  const Solver s(c);
  const auto tab = s.table(0.0);
  const std::vector<double> ones(c.grid.size(), 1.0);
  const double expected = tab->U.back() - tab->U.front();
  EXPECT_NEAR(weighted_rarefaction_term(c.grid, ones, tab->Ux), expected, 1e-4);
}

TEST(WeightedTerm, RejectsNegativeWeight) {
  const Grid1D g(10.0, 101);
  std::vector<double> w(g.size(), 1.0);
  w[7] = -1e-3;
  EXPECT_THROW(weighted_rarefaction_term(g, bump(g), w), InvariantViolation);
}

TEST(EnergyIdentity, EquilibriumIsZero) {
  const auto c = config(0.2, 0.2);
  const Solver s(c);
  const std::vector<double> zero(c.grid.size(), 0.0);
  EXPECT_EQ(energy_identity_residual(s, s.make_state(0.0, zero), s.make_state(0.5, zero)), 0.0);
}

TEST(EnergyIdentity, LinearModeBalancesToRoundOff) {
  SolverConfig c = config(0.0, 0.0, 0.0);
  c.flux = FluxModel::custom({});
  c.grid = Grid1D(20.0, 401);
  c.dt = 0.01;
  const Grid1D& g = c.grid;
  const double k = 6 * std::numbers::pi / (2 * g.half_length() + 2 * g.dx());
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = 1e-2 * std::sin(k * (g.x(i) - g.x(0) + g.dx()));
  const Solver s(c);
  auto st = s.make_state(0.0, phi);
  for (int n = 0; n < 50; ++n) {
    const auto next = s.advance(st, (n + 1) * c.dt);
    EXPECT_LT(energy_identity_residual(s, st, next), 1e-8);
    st = next;
  }
}

// Sampled every step so the time quadrature does not mask the spatial balance.
TEST(EnergyIdentity, ResidualSmallAgainstBalanceTerms) {
  auto c = config(-0.4, 0.4);
  c.grid = Grid1D(40.0, 801);
  c.dt = 0.5 / 11;
  c.snapshot_every = 1;
  const Solver s(c);
  DiagnosticsRecorder rec;
  double magnitude = 0.0;
  run(s, bump(c.grid), {[&](const Solver& sv, const FieldState& st) {
                          rec(sv, st);
                          const auto e = energy_terms(sv, st);
                          magnitude = std::max({magnitude, std::abs(e.rarefaction), std::abs(e.dissipation),
                                                std::abs(e.forcing)});
                        }},
      {false});
  EXPECT_GT(magnitude, 1e-4);
  EXPECT_LT(rec.residual_total() / c.t_end, 1e-3 * magnitude);
}

TEST(EnergyIdentity, ResidualIsSecondOrder) {
  std::vector<double> res;
  for (std::size_t n : {801u, 1601u}) {
    auto c = config(-0.4, 0.4);
    c.grid = Grid1D(40.0, n);
    c.t_end = 5.0;
    c.dt = 0.5 / std::ceil(0.5 / stable_dt(c));
    c.snapshot_every = 1;
    const Solver s(c);
    DiagnosticsRecorder rec;
    run(s, bump(c.grid), {[&](const Solver& sv, const FieldState& st) { rec(sv, st); }}, {false});
    res.push_back(rec.residual_total());
  }
  EXPECT_GE(res[0] / res[1], 4.0);
}

TEST(Sobolev, ZeroFieldHasZeroMargins) {
  const Grid1D g(10.0, 101);
  const auto m = sobolev_checks(discrete_norms(g, std::vector<double>(g.size(), 0.0)));
  for (double v : m.basic) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(m.tightest_chain, 0.0);
}

TEST(Sobolev, GaussianMarginsNonNegative) {
  const Grid1D g(20.0, 4001);
  const auto m = sobolev_checks(discrete_norms(g, bump(g, 1.0)));
  for (double v : m.basic) EXPECT_GE(v, 0.0);
  EXPECT_GE(m.tightest_chain, 0.0);
}

TEST(Sobolev, RandomSmoothFieldsSatisfyInequalities) {
  const Grid1D g(30.0, 3001);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), pos(-15.0, 15.0), wid(0.3, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> phi(g.size(), 0.0);
    for (int b = 0; b < 5; ++b) {
      const double a = amp(rng), x0 = pos(rng), w = wid(rng);
      for (std::size_t i = 0; i < g.size(); ++i) phi[i] += a * std::exp(-std::pow((g.x(i) - x0) / w, 2));
    }
    const auto m = sobolev_checks(discrete_norms(g, phi));
    for (int k = 0; k < 3; ++k) EXPECT_GE(m.basic[k], -1e-10);
    EXPECT_GE(m.tightest_chain, -1e-10);
  }
}

TEST(FanError, BeforeTMinIsDomainError) {
  const auto c = config(-0.4, 0.4);
  const Solver s(c);
  EXPECT_THROW(fan_error(s, s.make_state(0.5, bump(c.grid))), DomainError);
}

TEST(FanError, ConstantStateReducesToSupNorms) {
  const auto c = config(0.1, 0.1);
  const Solver s(c);
  const auto phi = bump(c.grid);
  const auto e = fan_error(s, s.make_state(3.0, phi));
  const auto n = discrete_norms(c.grid, phi);
  EXPECT_NEAR(e.u, n.sup[0], 1e-15);
  EXPECT_DOUBLE_EQ(e.dxu, n.sup[1]);
  EXPECT_DOUBLE_EQ(e.dx2u, n.sup[2]);
}

TEST(FanError, ZeroDeviationTracksSmoothApproximation) {
  const auto c = config(-0.4, 0.4);
  const Solver s(c);
  const std::vector<double> zero(c.grid.size(), 0.0);
  double prev = INFINITY;
  for (double t : {10.0, 20.0, 40.0, 80.0}) {
    const double e = fan_error(s, s.make_state(t, zero)).u;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(DecaySlope, ExactPowerLaw) {
  std::vector<std::pair<double, double>> series;
  for (double t = 0.0; t <= 100.0; t += 5.0) series.emplace_back(t, 3.0 / (1.0 + t));
  EXPECT_NEAR(decay_slope_fit(series, 5.0), -1.0, 1e-12);
}

TEST(DecaySlope, Preconditions) {
  std::vector<std::pair<double, double>> few{{5, 1}, {6, 1}, {7, 1}, {8, 1}};
  EXPECT_THROW(decay_slope_fit(few, 5.0), ContractViolation);
  std::vector<std::pair<double, double>> bad{{5, 1}, {6, 1}, {7, 0}, {8, 1}, {9, 1}};
  EXPECT_THROW(decay_slope_fit(bad, 5.0), DomainError);
}

TEST(Reports, EquilibriumRunIsAllZero) {
  const auto c = config(0.0, 0.0);
  const auto reps = record(c, std::vector<double>(c.grid.size(), 0.0));
  EXPECT_EQ(apriori_functional(reps), 0.0);
  for (const auto& a : uniform_estimate_audit(reps)) EXPECT_EQ(a.total, 0.0);
  for (const auto& r : reps) EXPECT_EQ(r.energy_residual, 0.0);
}

TEST(Reports, AprioriAccumulatorMatchesFunctional) {
  auto c = config(-0.4, 0.4);
  const auto reps = record(c, bump(c.grid));
  EXPECT_NEAR(reps.back().apriori_accum, apriori_functional(reps), 1e-12 * reps.back().apriori_accum);
  for (const auto& r : reps) {
    EXPECT_GE(r.weighted_l2, 0.0);
    EXPECT_LE(r.l2_phi, r.h1_phi);
    EXPECT_LE(r.h1_phi, r.h2_phi);
    EXPECT_LE(r.h2_phi, r.h3_phi);
  }
}

TEST(Reports, AuditAccumulatorsAreMonotone) {
  auto c = config(-0.4, 0.4);
  const auto reps = record(c, bump(c.grid));
  std::vector<double> prev(10, 0.0);
  for (std::size_t n = 2; n <= reps.size(); ++n) {
    const auto audit = uniform_estimate_audit(std::span(reps).first(n));
    for (std::size_t i = 0; i < audit.size(); ++i) {
      EXPECT_GE(audit[i].total, prev[i]);
      prev[i] = audit[i].total;
    }
  }
}

TEST(Reports, ConstantStateFunctionalPlateaus) {
  auto c = config(0.0, 0.0);
  c.t_end = 100.0;
  c.dt = 0.5 / 11;
  c.snapshot_every = 11;
  const auto reps = record(c, bump(c.grid));
  std::vector<DiagnosticsReport> half;
  for (const auto& r : reps)
    if (r.t <= 50.0 + 1e-9) half.push_back(r);
  const double a = apriori_functional(half), b = apriori_functional(reps);
  EXPECT_LT(std::abs(b - a) / b, 0.1);
  const auto audit = uniform_estimate_audit(reps);
  EXPECT_LT(audit.front().tail_fraction(), 0.1);
}
