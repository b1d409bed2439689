#pragma once
/**
 * @file harness.hpp
 * @brief Experiment configuration, scenario presets, CSV output with
 *        pass/fail gates, refinement studies and directory sweeps.
 */

#include <bbmb/diagnostics.hpp>
#include <bbmb/errors.hpp>
#include <bbmb/flux.hpp>
#include <bbmb/grid.hpp>
#include <bbmb/solver.hpp>
#include <bbmb/waves.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

namespace bbmb {

enum class Scenario { thm1_1, thm1_2, thm1_3, thm1_4, thm1_5, thm1_6, custom };
enum class InitialProfile { zero_deviation, gaussian_bump, riemann_step };

inline std::string to_string(Scenario s) {
  constexpr std::array<const char*, 7> names = {"thm1_1", "thm1_2", "thm1_3", "thm1_4", "thm1_5", "thm1_6", "custom"};
  return names[static_cast<std::size_t>(s)];
}

inline std::string to_string(InitialProfile p) {
  switch (p) {
    case InitialProfile::zero_deviation: return "zero_deviation";
    case InitialProfile::gaussian_bump: return "gaussian_bump";
    case InitialProfile::riemann_step: return "riemann_step";
  }
  return "zero_deviation";
}

/// Constant-state scenarios (u_minus == u_plus).
inline bool is_constant_state(Scenario s) {
  return s == Scenario::thm1_1 || s == Scenario::thm1_3 || s == Scenario::thm1_5;
}

struct ExperimentSpec {
  Scenario scenario = Scenario::custom;
  SolverConfig config;
  InitialProfile initial_profile = InitialProfile::gaussian_bump;
  double bump_amplitude = 0.1;
  double bump_width = 1.0;
  std::string output_path;
  int refinement_levels = 0;
  bool dt_auto = true;
  bool snapshot_auto = true;
};

// ---------------------------------------------------------------------------
// Number formatting and parsing
// ---------------------------------------------------------------------------

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(std::string_view key, std::string_view v, int line) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a real number, got '" + std::string(v) + "'", line);
  return out;
}

inline long long parse_int(std::string_view key, std::string_view v, int line) {
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'", line);
  return out;
}

inline std::vector<double> parse_real_list(std::string_view key, std::string_view v, int line) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_real(key, trim(v.substr(0, comma)), line));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;  // 0 for command-line overrides
};

} // namespace detail

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "scenario",  "alpha",       "beta",    "gamma",   "delta",          "flux",
      "flux_coeffs", "u_minus",   "u_plus",  "eps",     "half_length",    "n_points",
      "dt",        "t_end",       "snapshot_every", "initial_profile", "bump_amplitude",
      "bump_width", "output_path", "refinement_levels"};
  return keys;
}

/// dt landing exactly on multiples of `interval`, no larger than `bound`.
inline double aligned_dt(double bound, double interval) {
  return interval / std::ceil(interval / bound * (1.0 - 1e-12));
}

inline constexpr double snapshot_interval = 0.5;

/// Fill dt and snapshot_every when they were not given.
inline void resolve_time_step(ExperimentSpec& spec) {
  auto& c = spec.config;
  if (spec.dt_auto) {
    const double bound = std::min(stable_dt(c), snapshot_interval);
    c.dt = aligned_dt(bound, snapshot_interval);
  }
  if (spec.snapshot_auto)
    c.snapshot_every = std::max(1, static_cast<int>(std::lround(snapshot_interval / c.dt)));
}

/// Scenario defaults; later keys override them.
inline ExperimentSpec scenario_preset(Scenario s) {
  ExperimentSpec spec;
  spec.scenario = s;
  auto& c = spec.config;
  c.coeffs = PdeCoefficients{1.0, 1.0, 0.1, 0.0};
  c.flux = FluxModel::burgers();
  c.eps = 1.0;
  c.grid = Grid1D(200.0, 4001);
  c.t_end = 100.0;
  c.u_minus = -0.4;
  c.u_plus = 0.4;
  switch (s) {
    case Scenario::thm1_3:
    case Scenario::thm1_4: c.coeffs.delta = 0.5; break;
    case Scenario::thm1_5:
    case Scenario::thm1_6: c.coeffs.gamma = 0.0; break;
    default: break;
  }
  if (is_constant_state(s)) c.u_minus = c.u_plus = 0.0;
  resolve_time_step(spec);
  return spec;
}

inline Scenario parse_scenario(std::string_view v, int line) {
  for (int i = 0; i <= static_cast<int>(Scenario::custom); ++i)
    if (to_string(static_cast<Scenario>(i)) == v) return static_cast<Scenario>(i);
  throw ConfigError("scenario: unknown value '" + std::string(v) + "'", line);
}

/**
 * Parse key=value text. `overrides` are applied after the file (they win)
 * and report line 0 in errors.
 */
inline ExperimentSpec parse_config(std::string_view text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::map<std::string, detail::Entry> entries;
  const auto& keys = config_keys();
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'", line_no);
    if (entries.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
    if (value.empty()) throw ConfigError(key + ": empty value", line_no);
    entries[key] = {value, line_no};
  }
  for (const auto& [key, value] : overrides) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown key '" + key + "'", 0);
    entries[key] = {value, 0};
  }

  auto has = [&](const char* k) { return entries.count(k) > 0; };
  auto line_of = [&](const char* k) { return has(k) ? entries.at(k).line : 0; };
  auto real = [&](const char* k, double& out) {
    if (has(k)) out = detail::parse_real(k, entries.at(k).value, entries.at(k).line);
  };

  const Scenario scenario = has("scenario") ? parse_scenario(entries.at("scenario").value, line_of("scenario"))
                                            : Scenario::custom;
  ExperimentSpec spec = scenario_preset(scenario);
  auto& c = spec.config;

  real("alpha", c.coeffs.alpha);
  real("beta", c.coeffs.beta);
  real("gamma", c.coeffs.gamma);
  real("delta", c.coeffs.delta);
  real("u_minus", c.u_minus);
  real("u_plus", c.u_plus);
  real("eps", c.eps);
  real("t_end", c.t_end);
  real("bump_amplitude", spec.bump_amplitude);
  real("bump_width", spec.bump_width);

  if (has("flux")) {
    const auto& e = entries.at("flux");
    if (e.value == "burgers") {
      c.flux = FluxModel::burgers();
    } else if (e.value == "quartic") {
      c.flux = FluxModel::quartic();
    } else if (e.value == "custom") {
      if (!has("flux_coeffs")) throw ConfigError("flux=custom requires flux_coeffs", e.line);
      const auto& ce = entries.at("flux_coeffs");
      try {
        c.flux = FluxModel::custom(detail::parse_real_list("flux_coeffs", ce.value, ce.line));
      } catch (const ContractViolation& ex) {
        throw ConfigError(ex.what(), ce.line);
      }
    } else {
      throw ConfigError("flux: unknown value '" + e.value + "'", e.line);
    }
  }
  if (has("flux_coeffs") && c.flux.kind() != FluxKind::custom)
    throw ConfigError("flux_coeffs is only valid with flux=custom", line_of("flux_coeffs"));

  double half_length = c.grid.half_length();
  real("half_length", half_length);
  std::size_t n_points = c.grid.size();
  if (has("n_points")) {
    const long long n = detail::parse_int("n_points", entries.at("n_points").value, line_of("n_points"));
    if (n < 16) throw ConfigError("n_points must be at least 16", line_of("n_points"));
    n_points = static_cast<std::size_t>(n);
  }
  try {
    c.grid = Grid1D(half_length, n_points);
  } catch (const ContractViolation& ex) {
    throw ConfigError(ex.what(), line_of("half_length"));
  }

  if (has("dt")) {
    real("dt", c.dt);
    spec.dt_auto = false;
  }
  if (has("snapshot_every")) {
    const long long k = detail::parse_int("snapshot_every", entries.at("snapshot_every").value, line_of("snapshot_every"));
    if (k < 1) throw ConfigError("snapshot_every must be >= 1", line_of("snapshot_every"));
    c.snapshot_every = static_cast<int>(k);
    spec.snapshot_auto = false;
  }
  if (has("initial_profile")) {
    const auto& e = entries.at("initial_profile");
    if (e.value == "zero_deviation") spec.initial_profile = InitialProfile::zero_deviation;
    else if (e.value == "gaussian_bump") spec.initial_profile = InitialProfile::gaussian_bump;
    else if (e.value == "riemann_step") spec.initial_profile = InitialProfile::riemann_step;
    else throw ConfigError("initial_profile: unknown value '" + e.value + "'", e.line);
  }
  if (has("output_path")) spec.output_path = entries.at("output_path").value;
  if (has("refinement_levels")) {
    const long long lv = detail::parse_int("refinement_levels", entries.at("refinement_levels").value, line_of("refinement_levels"));
    if (lv < 0) throw ConfigError("refinement_levels must be >= 0", line_of("refinement_levels"));
    spec.refinement_levels = static_cast<int>(lv);
  }

  // scenario invariants
  const auto& k = c.coeffs;
  const int variant_line = std::max(line_of("gamma"), line_of("delta"));
  if (k.gamma == 0.0 && k.delta != 0.0) throw ConfigError("gamma = 0 with delta != 0 is not a supported variant", variant_line);
  switch (scenario) {
    case Scenario::thm1_1:
    case Scenario::thm1_2:
      if (!(k.gamma > 0.0) || k.delta != 0.0)
        throw ConfigError(to_string(scenario) + " requires gamma > 0 and delta = 0", variant_line);
      break;
    case Scenario::thm1_3:
    case Scenario::thm1_4:
      if (!(k.gamma > 0.0) || k.delta == 0.0)
        throw ConfigError(to_string(scenario) + " requires gamma > 0 and delta != 0", variant_line);
      break;
    case Scenario::thm1_5:
    case Scenario::thm1_6:
      if (k.gamma != 0.0 || k.delta != 0.0)
        throw ConfigError(to_string(scenario) + " requires gamma = delta = 0", variant_line);
      break;
    case Scenario::custom: break;
  }
  const int state_line = std::max(line_of("u_minus"), line_of("u_plus"));
  if (is_constant_state(scenario) && c.u_minus != c.u_plus)
    throw ConfigError(to_string(scenario) + " requires u_minus = u_plus", state_line);
  if (scenario != Scenario::custom && !is_constant_state(scenario) && !(c.u_minus < c.u_plus))
    throw ConfigError(to_string(scenario) + " requires u_minus < u_plus", state_line);

  resolve_time_step(spec);
  try {
    c.validate();
    if (c.u_minus < c.u_plus) c.flux.require_convex(c.u_minus - 1.0, c.u_plus + 1.0);
  } catch (const std::exception& ex) {
    throw ConfigError(ex.what(), 0);
  }
  if (!(spec.bump_width > 0.0)) throw ConfigError("bump_width must be positive", line_of("bump_width"));
  return spec;
}

inline ExperimentSpec parse_config_file(const std::filesystem::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

/// Resolved spec as key=value lines (the inverse of parse_config).
inline std::string describe(const ExperimentSpec& spec) {
  const auto& c = spec.config;
  std::ostringstream o;
  o << "scenario=" << to_string(spec.scenario) << '\n'
    << "alpha=" << format_double(c.coeffs.alpha) << '\n'
    << "beta=" << format_double(c.coeffs.beta) << '\n'
    << "gamma=" << format_double(c.coeffs.gamma) << '\n'
    << "delta=" << format_double(c.coeffs.delta) << '\n'
    << "flux=" << to_string(c.flux.kind()) << '\n';
  if (c.flux.kind() == FluxKind::custom) {
    o << "flux_coeffs=";
    const auto& cf = c.flux.coefficients();
    for (std::size_t i = 0; i < cf.size(); ++i) o << (i ? "," : "") << format_double(cf[i]);
    o << '\n';
  }
  o << "u_minus=" << format_double(c.u_minus) << '\n'
    << "u_plus=" << format_double(c.u_plus) << '\n'
    << "eps=" << format_double(c.eps) << '\n'
    << "half_length=" << format_double(c.grid.half_length()) << '\n'
    << "n_points=" << c.grid.size() << '\n'
    << "dt=" << format_double(c.dt) << '\n'
    << "t_end=" << format_double(c.t_end) << '\n'
    << "snapshot_every=" << c.snapshot_every << '\n'
    << "initial_profile=" << to_string(spec.initial_profile) << '\n'
    << "bump_amplitude=" << format_double(spec.bump_amplitude) << '\n'
    << "bump_width=" << format_double(spec.bump_width) << '\n';
  if (!spec.output_path.empty()) o << "output_path=" << spec.output_path << '\n';
  o << "refinement_levels=" << spec.refinement_levels << '\n';
  return o.str();
}

inline std::vector<double> initial_deviation(const Solver& solver, const ExperimentSpec& spec) {
  const Grid1D& g = solver.grid();
  const auto& c = solver.config();
  switch (spec.initial_profile) {
    case InitialProfile::zero_deviation: return std::vector<double>(g.size(), 0.0);
    case InitialProfile::gaussian_bump: {
      std::vector<double> phi(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.x(i) / spec.bump_width;
        phi[i] = spec.bump_amplitude * std::exp(-z * z);
      }
      return phi;
    }
    case InitialProfile::riemann_step:
      return deviation_from_profile(solver, [&](double x) { return x < 0.0 ? c.u_minus : c.u_plus; });
  }
  return std::vector<double>(g.size(), 0.0);
}

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

struct GateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline constexpr double sobolev_slack = 1e-10;
inline constexpr double h1_monotone_slack = 1e-8;
inline constexpr double h1_monotone_from = 5.0;
inline constexpr double sup_decay_factor = 0.2;
inline constexpr double fan_error_halving = 0.5;
inline constexpr std::array<double, 4> fan_sample_times = {10.0, 20.0, 40.0, 80.0};

inline GateResult gate_sobolev(std::span<const DiagnosticsReport> rs) {
  double worst = std::numeric_limits<double>::infinity();
  double at = 0.0;
  for (const auto& r : rs) {
    const double m = std::min({r.sobolev_margin_0, r.sobolev_margin_1, r.sobolev_margin_2});
    if (m < worst) { worst = m; at = r.t; }
  }
  GateResult g{"sobolev_margins", worst >= -sobolev_slack, "min margin " + format_double(worst)};
  if (!g.passed) g.detail += " at t=" + format_double(at);
  return g;
}

/// sup norms of phi, phi_x, phi_xx at the end below a fraction of their initial values.
inline std::vector<GateResult> gates_constant_state(std::span<const DiagnosticsReport> rs) {
  std::vector<GateResult> out;
  if (rs.size() < 2) return {{"sup_decay", false, "fewer than two snapshots"}};
  const auto& a = rs.front();
  const auto& b = rs.back();
  auto decay = [&](const char* name, double v0, double v1) {
    const bool ok = v1 < sup_decay_factor * v0;
    out.push_back({name, ok, format_double(v1) + " vs initial " + format_double(v0)});
  };
  decay("sup_phi_decay", a.sup_phi, b.sup_phi);
  decay("sup_dx_phi_decay", a.sup_dx_phi, b.sup_dx_phi);
  decay("sup_dx2_phi_decay", a.sup_dx2_phi, b.sup_dx2_phi);

  double worst_rise = 0.0, at = 0.0;
  const DiagnosticsReport* prev = nullptr;
  for (const auto& r : rs) {
    if (r.t < h1_monotone_from) continue;
    if (prev && r.h1_phi - prev->h1_phi > worst_rise) { worst_rise = r.h1_phi - prev->h1_phi; at = r.t; }
    prev = &r;
  }
  GateResult g{"h1_nonincreasing", worst_rise <= h1_monotone_slack, "largest rise " + format_double(worst_rise)};
  if (!g.passed) g.detail += " at t=" + format_double(at);
  out.push_back(g);
  return out;
}

/// Fan errors at the dyadic sample times that fall inside the run.
inline std::vector<const DiagnosticsReport*> fan_samples(std::span<const DiagnosticsReport> rs) {
  std::vector<const DiagnosticsReport*> out;
  for (double ts : fan_sample_times)
    for (const auto& r : rs)
      if (r.fan_error_valid && std::abs(r.t - ts) < 1e-9) { out.push_back(&r); break; }
  return out;
}

inline std::vector<GateResult> gates_rarefaction(std::span<const DiagnosticsReport> rs) {
  const auto samples = fan_samples(rs);
  if (samples.size() < 2) return {{"fan_error_decreasing", false, "fewer than two sample times reached"}};
  std::vector<GateResult> out;
  auto decreasing = [&](const char* name, double DiagnosticsReport::*field) {
    bool ok = true;
    std::string seq;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      seq += (i ? " " : "") + format_double(samples[i]->*field);
      if (i > 0 && !(samples[i]->*field < samples[i - 1]->*field)) ok = false;
    }
    out.push_back({name, ok, seq});
  };
  decreasing("sup_err_u_decreasing", &DiagnosticsReport::sup_err_u);
  decreasing("sup_err_dxu_decreasing", &DiagnosticsReport::sup_err_dxu);
  decreasing("sup_err_dx2u_decreasing", &DiagnosticsReport::sup_err_dx2u);
  if (samples.front()->t == fan_sample_times.front() && samples.back()->t == fan_sample_times.back()) {
    const double e10 = samples.front()->sup_err_u, e80 = samples.back()->sup_err_u;
    out.push_back({"sup_err_u_halved", e80 < fan_error_halving * e10,
                   format_double(e80) + " vs " + format_double(e10)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running one experiment
// ---------------------------------------------------------------------------

inline constexpr int exit_ok = 0;
inline constexpr int exit_gate_failed = 1;
inline constexpr int exit_blow_up = 2;
inline constexpr int exit_io_error = 3;
inline constexpr int exit_config_error = 4;

struct ExperimentResult {
  int exit_code = exit_ok;
  std::vector<DiagnosticsReport> reports;
  std::vector<GateResult> gates;
  SimulationRecord record;
  double energy_residual_per_time = 0.0;
  std::string csv;
  std::string message;

  bool gates_passed() const {
    return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.passed; });
  }
};

inline const std::array<const char*, 17>& csv_columns() {
  static const std::array<const char*, 17> cols = {
      "t", "l2_phi", "h1_phi", "h2_phi", "h3_phi", "sup_phi", "sup_dx_phi", "sup_dx2_phi", "weighted_l2",
      "energy_residual", "apriori_accum", "sup_err_u", "sup_err_dxu", "sup_err_dx2u",
      "sobolev_margin_0", "sobolev_margin_1", "sobolev_margin_2"};
  return cols;
}

inline std::string csv_row(const DiagnosticsReport& r) {
  const std::array<double, 17> v = {r.t, r.l2_phi, r.h1_phi, r.h2_phi, r.h3_phi, r.sup_phi, r.sup_dx_phi,
                                    r.sup_dx2_phi, r.weighted_l2, r.energy_residual, r.apriori_accum,
                                    r.sup_err_u, r.sup_err_dxu, r.sup_err_dx2u,
                                    r.sobolev_margin_0, r.sobolev_margin_1, r.sobolev_margin_2};
  std::string line;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) line += ',';
    line += format_double(v[i]);
  }
  return line;
}

inline std::string render_csv(const ExperimentSpec& spec, const ExperimentResult& res) {
  std::ostringstream o;
  // the output location is not echoed so identical specs give identical files
  ExperimentSpec echoed = spec;
  echoed.output_path.clear();
  std::istringstream echo(describe(echoed));
  for (std::string l; std::getline(echo, l);) o << "# " << l << '\n';
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
  o << '\n';
  for (const auto& r : res.reports) o << csv_row(r) << '\n';
  o << "# summary\n";
  o << "# steps=" << res.record.steps << '\n';
  o << "# energy_residual_per_time=" << format_double(res.energy_residual_per_time) << '\n';
  o << "# boundary_leak=" << (res.record.boundary_leak ? "yes t=" + format_double(res.record.boundary_leak_time) : "no")
    << '\n';
  if (res.record.blew_up) o << "# blow_up: " << res.record.error << '\n';
  for (const auto& g : res.gates) o << "# gate " << g.name << ": " << (g.passed ? "PASS" : "FAIL") << " (" << g.detail << ")\n";
  o << "# result=" << (res.exit_code == exit_ok ? "PASS" : "FAIL") << " exit=" << res.exit_code << '\n';
  return o.str();
}

/// Gates compiled into each scenario.
inline std::vector<GateResult> evaluate_gates(const ExperimentSpec& spec, std::span<const DiagnosticsReport> rs) {
  std::vector<GateResult> gates{gate_sobolev(rs)};
  if (spec.scenario == Scenario::custom) return gates;
  auto more = is_constant_state(spec.scenario) ? gates_constant_state(rs) : gates_rarefaction(rs);
  gates.insert(gates.end(), more.begin(), more.end());
  return gates;
}

/// Run without touching the filesystem.
inline ExperimentResult simulate_experiment(const ExperimentSpec& spec, RunOptions opts = {false}) {
  ExperimentResult res;
  Solver solver(spec.config);
  DiagnosticsRecorder recorder;
  std::vector<Observer> obs{[&recorder](const Solver& s, const FieldState& st) { recorder(s, st); }};
  res.record = run(solver, initial_deviation(solver, spec), obs, opts);
  res.reports = recorder.reports();
  const double span = res.reports.empty() ? 0.0 : res.reports.back().t;
  res.energy_residual_per_time = span > 0.0 ? recorder.residual_total() / span : 0.0;
  res.gates = evaluate_gates(spec, res.reports);
  if (res.record.blew_up) {
    res.exit_code = exit_blow_up;
    res.message = res.record.error;
  } else if (!res.gates_passed()) {
    res.exit_code = exit_gate_failed;
    for (const auto& g : res.gates)
      if (!g.passed) { res.message = "gate " + g.name + " failed"; break; }
  }
  res.csv = render_csv(spec, res);
  return res;
}

inline bool write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  return static_cast<bool>(out);
}

/// Simulate and write the CSV to spec.output_path (when set).
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult res = simulate_experiment(spec);
  if (!spec.output_path.empty() && !write_text(spec.output_path, res.csv)) {
    res.exit_code = exit_io_error;
    res.message = "cannot write " + spec.output_path;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Refinement studies
// ---------------------------------------------------------------------------

struct RefinementRow {
  std::size_t n_points = 0;
  double dx = 0.0;
  double dt = 0.0;
  double phi_change = 0.0;       // sup over coarse nodes of the change from the previous level
  double phi_order = 0.0;        // log2 of the ratio of successive changes
  double energy_residual = 0.0;  // per unit time
  double energy_order = 0.0;
  bool blew_up = false;
};

struct RefinementTable {
  std::vector<RefinementRow> rows;
  std::string csv() const {
    std::ostringstream o;
    o << "n_points,dx,dt,phi_change,phi_order,energy_residual,energy_order\n";
    for (const auto& r : rows)
      o << r.n_points << ',' << format_double(r.dx) << ',' << format_double(r.dt) << ','
        << format_double(r.phi_change) << ',' << format_double(r.phi_order) << ','
        << format_double(r.energy_residual) << ',' << format_double(r.energy_order) << '\n';
    return o.str();
  }
};

/**
 * Rerun `spec` levels + 1 times with dx halved each time. dt is halved too,
 * or cut further when the finer grid's stability bound requires it; the
 * snapshot interval halves with dx so the energy balance is sampled
 * consistently. phi changes are measured at the coarsest grid's nodes.
 */
/// Halve dx and dt (or less, when the stability bound requires it), with snapshots every `interval`.
inline ExperimentSpec refined_spec(const ExperimentSpec& spec, double interval) {
  ExperimentSpec cur = spec;
  cur.config.grid = cur.config.grid.refined();
  const double bound = std::min(0.5 * cur.config.dt, stable_dt(cur.config));
  cur.config.dt = aligned_dt(bound, interval);
  cur.config.snapshot_every = static_cast<int>(std::lround(interval / cur.config.dt));
  return cur;
}

inline RefinementTable refinement_study(const ExperimentSpec& spec, int levels) {
  if (levels < 2) throw ContractViolation("refinement_study: levels must be >= 2");
  RefinementTable table;
  ExperimentSpec cur = spec;
  double interval = cur.config.dt * cur.config.snapshot_every;
  std::vector<std::vector<double>> finals;
  std::size_t stride = 1;
  for (int l = 0; l <= levels; ++l) {
    if (l > 0) {
      interval *= 0.5;
      cur = refined_spec(cur, interval);
      stride *= 2;
    }
    const ExperimentResult res = simulate_experiment(cur);
    RefinementRow row;
    row.n_points = cur.config.grid.size();
    row.dx = cur.config.grid.dx();
    row.dt = cur.config.dt;
    row.energy_residual = res.energy_residual_per_time;
    row.blew_up = res.record.blew_up;
    if (row.blew_up) throw BlowUpError(0, res.record.final_state.t);
    std::vector<double> coarse(spec.config.grid.size());
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = res.record.final_state.phi[i * stride];
    if (!finals.empty()) {
      double m = 0.0;
      for (std::size_t i = 0; i < coarse.size(); ++i) m = std::max(m, std::abs(coarse[i] - finals.back()[i]));
      row.phi_change = m;
    }
    finals.push_back(std::move(coarse));
    table.rows.push_back(row);
  }
  auto& rows = table.rows;
  for (std::size_t l = 1; l < rows.size(); ++l) {
    rows[l].energy_order = std::log2(rows[l - 1].energy_residual / rows[l].energy_residual);
    if (l >= 2) rows[l].phi_order = std::log2(rows[l - 1].phi_change / rows[l].phi_change);
  }
  return table;
}

/// Linear test problem: f = 0, gamma = 0, u_minus = u_plus = 0, one sine mode.
struct LinearModeProblem {
  double alpha = 1.0;
  double beta = 1.0;
  double half_length = 10.0;
  double wavenumber = 1.0;  // target; the exact one fits the Dirichlet box
  double amplitude = 1.0;
  double t_end = 2.0;
};

struct LinearModeResult {
  std::vector<double> errors;  // sup error against the reference solution, per level
  std::vector<double> orders;  // log2 of successive error ratios
};

namespace detail {

/// Sine mode vanishing at the ghost nodes x_{-1} and x_N; exact eigenvector of D2.
struct SineMode {
  int m = 1;
  double k = 0.0;      // continuum wavenumber in the box [x_{-1}, x_N]
  double mu = 0.0;     // eigenvalue of -D2
  double x_left = 0.0;
};

inline SineMode sine_mode(const Grid1D& g, int m) {
  const double box = 2.0 * g.half_length() + 2.0 * g.dx();
  SineMode s;
  s.m = m;
  s.k = m * std::numbers::pi / box;
  const double sh = std::sin(0.5 * s.k * g.dx());
  s.mu = 4.0 * sh * sh / (g.dx() * g.dx());
  s.x_left = g.x(0) - g.dx();
  return s;
}

inline int mode_index(const Grid1D& g, double k) {
  const double box = 2.0 * g.half_length() + 2.0 * g.dx();
  return std::max(1, static_cast<int>(std::lround(k * box / std::numbers::pi)));
}

inline double linear_decay_rate(double alpha, double beta, double k2) { return -beta * k2 / (1.0 + alpha * k2); }

inline double run_linear_mode(const LinearModeProblem& p, const Grid1D& g, int m, double dt, bool vs_continuum) {
  SolverConfig cfg;
  cfg.coeffs = PdeCoefficients{p.alpha, p.beta, 0.0, 0.0};
  cfg.flux = FluxModel::custom({});
  cfg.grid = g;
  cfg.dt = dt;
  cfg.t_end = p.t_end;
  cfg.snapshot_every = 1 << 30;
  const SineMode s = sine_mode(g, m);
  std::vector<double> phi0(g.size()), shape(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    shape[i] = std::sin(s.k * (g.x(i) - s.x_left));
    phi0[i] = p.amplitude * shape[i];
  }
  const SimulationRecord rec = run(cfg, std::move(phi0), {}, RunOptions{false});
  if (rec.blew_up) throw BlowUpError(0, rec.final_state.t);
  const double lambda = linear_decay_rate(p.alpha, p.beta, vs_continuum ? s.k * s.k : s.mu);
  const double amp = p.amplitude * std::exp(lambda * rec.final_state.t);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(rec.final_state.phi[i] - amp * shape[i]));
  return err;
}

inline std::vector<double> orders_of(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) out.push_back(std::log2(errors[i - 1] / errors[i]));
  return out;
}

} // namespace detail

/// Spatial order: grids n_coarse, 2n_coarse-1, ... against the continuum decay of the mode.
inline LinearModeResult linear_spatial_study(const LinearModeProblem& p, std::size_t n_coarse, int levels, double dt) {
  LinearModeResult r;
  Grid1D g(p.half_length, n_coarse);
  const int m = detail::mode_index(g, p.wavenumber);
  for (int l = 0; l <= levels; ++l, g = g.refined()) r.errors.push_back(detail::run_linear_mode(p, g, m, dt, true));
  r.orders = detail::orders_of(r.errors);
  return r;
}

/// Temporal order: fixed grid, dt halved per level, against the semi-discrete decay.
inline LinearModeResult linear_temporal_study(const LinearModeProblem& p, std::size_t n_points, int levels, double dt0) {
  LinearModeResult r;
  const Grid1D g(p.half_length, n_points);
  const int m = detail::mode_index(g, p.wavenumber);
  double dt = dt0;
  for (int l = 0; l <= levels; ++l, dt *= 0.5) r.errors.push_back(detail::run_linear_mode(p, g, m, dt, false));
  r.orders = detail::orders_of(r.errors);
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepEntry {
  std::string name;
  std::filesystem::path config_path;
  std::filesystem::path output_path;
  int exit_code = exit_ok;
  std::string message;
};

/**
 * Run every *.cfg under `dir` (sorted by name), each in its own task.
 * Each experiment writes `<out_dir>/<stem>.csv`; `<out_dir>/index.csv`
 * lists name, status, exit code and message. A failing experiment does
 * not stop the others.
 */
inline std::vector<SweepEntry> sweep(const std::filesystem::path& dir, const std::filesystem::path& out_dir,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::vector<SweepEntry> entries;
  for (const auto& de : std::filesystem::directory_iterator(dir))
    if (de.is_regular_file() && de.path().extension() == ".cfg") {
      SweepEntry e;
      e.name = de.path().stem().string();
      e.config_path = de.path();
      e.output_path = out_dir / (e.name + ".csv");
      entries.push_back(std::move(e));
    }
  std::sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) { return a.name < b.name; });

  auto job = [&overrides](SweepEntry e) {
    try {
      auto ov = overrides;
      ov.emplace_back("output_path", e.output_path.string());
      const ExperimentSpec spec = parse_config_file(e.config_path, ov);
      const ExperimentResult res = run_experiment(spec);
      e.exit_code = res.exit_code;
      e.message = res.message;
    } catch (const ConfigError& ex) {
      e.exit_code = exit_config_error;
      e.message = ex.what();
    } catch (const std::exception& ex) {
      e.exit_code = exit_gate_failed;
      e.message = ex.what();
    }
    return e;
  };

  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepEntry> done;
  for (std::size_t start = 0; start < entries.size(); start += workers) {
    std::vector<std::future<SweepEntry>> batch;
    for (std::size_t i = start; i < std::min(entries.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, job, entries[i]));
    for (auto& f : batch) done.push_back(f.get());
  }

  std::ostringstream idx;
  idx << "name,status,exit_code,message\n";
  for (const auto& e : done) {
    std::string msg = e.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    idx << e.name << ',' << (e.exit_code == exit_ok ? "pass" : "fail") << ',' << e.exit_code << ',' << msg << '\n';
  }
  write_text(out_dir / "index.csv", idx.str());
  return done;
}

} // namespace bbmb
