// simulate: run one experiment, a refinement study, or a directory sweep.

#include <bbmb/harness.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

int report(const bbmb::ExperimentSpec& spec, const bbmb::ExperimentResult& res) {
  std::cout << bbmb::to_string(spec.scenario) << ": ";
  for (const auto& g : res.gates) std::cout << g.name << '=' << (g.passed ? "PASS" : "FAIL") << ' ';
  std::cout << "steps=" << res.record.steps;
  if (!spec.output_path.empty()) std::cout << " csv=" << spec.output_path;
  std::cout << '\n';
  if (res.exit_code != bbmb::exit_ok) std::cerr << "error: " << res.message << '\n';
  return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deviation-equation simulator with diagnostics and gates"};
  std::string config_file;
  std::optional<std::string> output, scenario, sweep_dir;
  std::optional<double> t_end;
  std::optional<long long> grid_n;
  std::optional<int> refine;
  app.add_option("config", config_file, "key=value configuration file");
  app.add_option("--output", output, "CSV output path (sweep: output directory)");
  app.add_option("--t-end", t_end, "final time");
  app.add_option("--grid-n", grid_n, "number of grid points");
  app.add_option("--scenario", scenario, "thm1_1 .. thm1_6 or custom");
  app.add_option("--refine", refine, "run a refinement study with this many levels");
  app.add_option("--sweep", sweep_dir, "run every *.cfg in this directory");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::string>> overrides;
  if (scenario) overrides.emplace_back("scenario", *scenario);
  if (t_end) overrides.emplace_back("t_end", bbmb::format_double(*t_end));
  if (grid_n) overrides.emplace_back("n_points", std::to_string(*grid_n));
  if (refine) overrides.emplace_back("refinement_levels", std::to_string(*refine));

  try {
    if (sweep_dir) {
      const std::filesystem::path out = output ? std::filesystem::path(*output) : std::filesystem::path(*sweep_dir);
      const auto entries = bbmb::sweep(*sweep_dir, out, overrides);
      int code = bbmb::exit_ok;
      for (const auto& e : entries) {
        std::cout << e.name << ": " << (e.exit_code == bbmb::exit_ok ? "pass" : "fail") << '\n';
        if (e.exit_code != bbmb::exit_ok) code = bbmb::exit_gate_failed;
      }
      std::cout << "index: " << (out / "index.csv").string() << '\n';
      return code;
    }

    if (output) overrides.emplace_back("output_path", *output);
    if (config_file.empty() && !scenario) {
      std::cerr << "error: a config file or --scenario is required\n";
      return bbmb::exit_config_error;
    }
    const bbmb::ExperimentSpec spec =
        config_file.empty() ? bbmb::parse_config("", overrides) : bbmb::parse_config_file(config_file, overrides);

    if (spec.refinement_levels > 0) {
      const auto table = bbmb::refinement_study(spec, spec.refinement_levels);
      const std::string csv = table.csv();
      if (!spec.output_path.empty()) {
        if (!bbmb::write_text(spec.output_path, csv)) {
          std::cerr << "error: cannot write " << spec.output_path << '\n';
          return bbmb::exit_io_error;
        }
      } else {
        std::cout << csv;
      }
      return bbmb::exit_ok;
    }

    const auto res = bbmb::run_experiment(spec);
    if (spec.output_path.empty()) std::cout << res.csv;
    return report(spec, res);
  } catch (const bbmb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bbmb::exit_config_error;
  } catch (const bbmb::BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    return bbmb::exit_blow_up;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bbmb::exit_gate_failed;
  }
}
