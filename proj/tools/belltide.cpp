// belltide: command-line front end for sweeps, single optimizations, the
// teleportation fidelity table, threshold crossings and the self-check suites.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "belltide/belltide.hpp"

namespace {

using namespace belltide;

enum class ExitCode : int { ok = 0, verification_failed = 1, usage = 2, no_crossing = 3 };

struct RunConfig {
  std::string command;
  std::vector<std::string> scenarios;
  std::optional<double> theta;
  double theta_min = 0.0;
  double theta_max = kThetaMax;
  int steps = 65;
  double level = 2.0;
  OptimizerConfig optimizer;
  int nodes = 100;
  std::string out;
  std::string format = "csv";
  bool quick = false;
  bool degrees = false;
  bool inject_fault = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<ScenarioKind> scenario_kinds(const RunConfig& cfg) {
  std::vector<ScenarioKind> out;
  for (const auto& name : cfg.scenarios) {
    const auto kind = parse_scenario_kind(name);
    if (!kind) throw UsageError("unknown scenario '" + name + "'");
    out.push_back(*kind);
  }
  return out;
}

ScenarioKind single_scenario(const RunConfig& cfg) {
  const auto kinds = scenario_kinds(cfg);
  if (kinds.size() != 1) throw UsageError(cfg.command + " needs exactly one --scenario");
  return kinds.front();
}

std::string header_comment(const RunConfig& cfg) {
  std::ostringstream os;
  os << "command=" << cfg.command;
  for (const auto& s : cfg.scenarios) os << " scenario=" << s;
  if (cfg.theta)
    os << " theta=" << format_g12(*cfg.theta);
  else
    os << " theta_min=" << format_g12(cfg.theta_min) << " theta_max=" << format_g12(cfg.theta_max)
       << " steps=" << cfg.steps;
  os << " seed=" << cfg.optimizer.rng_seed << " restarts=" << cfg.optimizer.restarts
     << " grid=" << cfg.optimizer.grid_points_per_dim << " tolerance=" << format_g12(cfg.optimizer.simplex_tolerance)
     << " max_iterations=" << cfg.optimizer.max_iterations;
  return os.str();
}

std::vector<std::string> comments(const RunConfig& cfg) {
  return {"belltide " + std::string(kVersion), header_comment(cfg)};
}

std::string angle_text(double radians, bool degrees) {
  std::string s = format_g12(radians) + " rad";
  if (degrees) s += " (" + format_g12(radians * 180.0 / kPi) + " deg)";
  return s;
}

// Output path with a different extension, or a per-scenario variant.
std::filesystem::path derived_path(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension();
  p += suffix;
  return p;
}

void emit(const RunConfig& cfg, const std::filesystem::path& path, const std::string& content) {
  if (cfg.out.empty())
    std::cout << content;
  else
    atomic_write(path, content);
}

ExitCode cmd_sweep(const RunConfig& cfg) {
  const auto kinds = scenario_kinds(cfg);
  if (kinds.empty()) throw UsageError("sweep needs at least one --scenario");
  if (cfg.format != "csv" && cfg.out.empty()) throw UsageError("--format svg|both needs --out");

  if (cfg.theta) throw UsageError("sweep takes --theta-min/--theta-max/--steps, not --theta");

  std::vector<SweepResult> sweeps;
  for (ScenarioKind k : kinds) sweeps.push_back(sweep(k, cfg.theta_min, cfg.theta_max, cfg.steps, cfg.optimizer));

  if (cfg.format == "csv" || cfg.format == "both") {
    for (const auto& s : sweeps) {
      std::filesystem::path path = sweeps.size() > 1 ? derived_path(cfg.out, "." + std::string(to_string(s.kind)) + ".csv")
                                                     : derived_path(cfg.out, ".csv");
      if (sweeps.size() == 1 && cfg.format == "csv" && !cfg.out.empty()) path = cfg.out;
      auto meta = comments(cfg);
      meta.push_back("scenario=" + std::string(to_string(s.kind)));
      emit(cfg, path, sweep_csv(s, meta));
    }
  }
  if (cfg.format == "svg" || cfg.format == "both") {
    const std::filesystem::path path = cfg.format == "svg" ? std::filesystem::path(cfg.out) : derived_path(cfg.out, ".svg");
    atomic_write(path, sweep_svg(sweeps, "Correlators maximized over measurement settings"));
  }
  for (const auto& s : sweeps)
    if (!s.all_converged())
      std::cerr << "warning: " << to_string(s.kind) << " has points whose restarts did not agree\n";
  return ExitCode::ok;
}

ExitCode cmd_optimize(const RunConfig& cfg) {
  if (!cfg.theta) throw UsageError("optimize needs --theta");
  const ScenarioKind kind = single_scenario(cfg);
  const Scenario scenario(kind, *cfg.theta);
  const CorrelatorResult r = maximize(scenario, cfg.optimizer);

  std::ostringstream report;
  report << "scenario    " << to_string(kind) << "\n"
         << "theta       " << angle_text(r.theta, cfg.degrees) << "\n"
         << "value       " << format_g12(r.value) << "\n"
         << "converged   " << (r.converged ? "yes" : "no") << "\n"
         << "evaluations " << r.evaluations << "\n";
  const auto layout = scenario.layout();
  for (std::size_t i = 0; i < layout.size(); ++i)
    report << "  " << layout[i].name << " = " << angle_text(r.settings[i], cfg.degrees) << "\n";
  std::cout << report.str();

  if (!cfg.out.empty()) {
    std::string csv;
    for (const auto& c : comments(cfg)) csv += "# " + c + "\n";
    csv += "parameter,value\n";
    csv += "value," + format_g12(r.value) + "\n";
    csv += "converged," + std::string(r.converged ? "1" : "0") + "\n";
    csv += "evaluations," + std::to_string(r.evaluations) + "\n";
    for (std::size_t i = 0; i < layout.size(); ++i) csv += layout[i].name + "," + format_g12(r.settings[i]) + "\n";
    atomic_write(cfg.out, csv);
  }
  return ExitCode::ok;
}

ExitCode cmd_fidelity(const RunConfig& cfg) {
  const std::vector<double> thetas =
      cfg.theta ? std::vector<double>{*cfg.theta} : theta_grid(cfg.theta_min, cfg.theta_max, cfg.steps);
  if (cfg.theta) validate_theta(*cfg.theta);
  const auto rows = fidelity_table(thetas, SphereQuadrature{cfg.nodes, cfg.nodes});
  emit(cfg, cfg.out, fidelity_csv(rows, comments(cfg)));
  return ExitCode::ok;
}

ExitCode cmd_crossing(const RunConfig& cfg) {
  const ScenarioKind kind = single_scenario(cfg);
  const CrossingResult c = find_crossing(kind, cfg.level, cfg.optimizer, cfg.theta_min, cfg.theta_max);
  if (!c.found) {
    std::cout << "no crossing: " << to_string(kind) << " stays on one side of " << format_g12(cfg.level) << " (value "
              << format_g12(c.value_at_min) << " at theta=" << format_g12(cfg.theta_min) << ", "
              << format_g12(c.value_at_max) << " at theta=" << format_g12(cfg.theta_max) << ")\n";
    return ExitCode::no_crossing;
  }
  std::cout << "scenario " << to_string(kind) << "\n"
            << "level    " << format_g12(cfg.level) << "\n"
            << "theta*   " << angle_text(c.theta, cfg.degrees) << " = " << format_g12(c.theta / kPi) << " pi\n"
            << "bracket  [" << format_g12(c.lower) << ", " << format_g12(c.upper) << "] after " << c.bisections
            << " bisections\n";
  if (!cfg.out.empty()) {
    std::string csv;
    for (const auto& line : comments(cfg)) csv += "# " + line + "\n";
    csv += "scenario,level,theta,theta_over_pi\n";
    csv += std::string(to_string(kind)) + "," + format_g12(cfg.level) + "," + format_g12(c.theta) + "," +
           format_g12(c.theta / kPi) + "\n";
    atomic_write(cfg.out, csv);
  }
  return ExitCode::ok;
}

ExitCode cmd_verify(const RunConfig& cfg) {
  const VerifyOptions opt{cfg.quick, cfg.inject_fault, cfg.optimizer.rng_seed};
  bool all = true;
  std::string first_failure;
  for (const auto& r : run_verify(opt)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    if (!r.passed && all) first_failure = r.name + ": " + r.detail;
    all = all && r.passed;
  }
  if (!all) {
    std::cout << "first failure: " << first_failure << "\n";
    return ExitCode::verification_failed;
  }
  return ExitCode::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocality of teleportation and remote state preparation: correlator sweeps and checks", "belltide"};
  app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
  RunConfig cfg;

  app.add_option("command", cfg.command, "sweep | optimize | fidelity | crossing | verify")
      ->required()
      ->check(CLI::IsMember({"sweep", "optimize", "fidelity", "crossing", "verify"}));
  app.add_option("--scenario", cfg.scenarios,
                 "tele-chsh, rsp-vn-chsh, rsp-bell-chsh, tele-i3322, rsp-vn-i3322, rsp-bell-i3322")
      ->delimiter(',');
  auto* theta = app.add_option("--theta", cfg.theta, "Single resource angle (radians)");
  auto* tmin = app.add_option("--theta-min", cfg.theta_min, "Sweep start (radians)");
  auto* tmax = app.add_option("--theta-max", cfg.theta_max, "Sweep end (radians)");
  theta->excludes(tmin)->excludes(tmax);
  app.add_option("--steps", cfg.steps, "Number of theta points, endpoints included")->check(CLI::Range(2, 100000));
  app.add_option("--level", cfg.level, "Crossing level");
  app.add_option("--restarts", cfg.optimizer.restarts, "Random restarts per maximization")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.optimizer.rng_seed, "Seed of the counter-based generator");
  app.add_option("--grid", cfg.optimizer.grid_points_per_dim, "Seeding grid points per dimension")
      ->check(CLI::Range(3, 1000));
  app.add_option("--tolerance", cfg.optimizer.simplex_tolerance, "Simplex absolute function tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iterations", cfg.optimizer.max_iterations, "Simplex iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--nodes", cfg.nodes, "Quadrature nodes per sphere axis")->check(CLI::Range(2, 100000));
  app.add_option("--out", cfg.out, "Output path");
  app.add_option("--format", cfg.format, "csv | svg | both")->check(CLI::IsMember({"csv", "svg", "both"}));
  app.add_flag("--quick", cfg.quick, "Reduced grids for verify");
  app.add_flag("--degrees", cfg.degrees, "Also show angles in degrees in reports");
  app.add_flag("--inject-fault", cfg.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::usage);
  }

  try {
    cfg.optimizer.validate();
    if (cfg.format != "csv" && cfg.command != "sweep") throw UsageError("--format svg|both applies to sweep only");
    ExitCode code = ExitCode::ok;
    if (cfg.command == "sweep") code = cmd_sweep(cfg);
    if (cfg.command == "optimize") code = cmd_optimize(cfg);
    if (cfg.command == "fidelity") code = cmd_fidelity(cfg);
    if (cfg.command == "crossing") code = cmd_crossing(cfg);
    if (cfg.command == "verify") code = cmd_verify(cfg);
    return static_cast<int>(code);
  } catch (const UsageError& e) {
    std::cerr << "belltide: " << e.what() << "\n";
  } catch (const IoError& e) {
    std::cerr << "belltide: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "belltide: " << e.what() << "\n";
  }
  return static_cast<int>(ExitCode::usage);
}
