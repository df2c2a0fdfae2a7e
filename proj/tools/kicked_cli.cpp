// Command-line front end: configure, run, sweep, and compare kicked-system
// experiments, and inspect kick kernels.
//
// Exit codes: 0 success, 1 validation error, 2 runtime dynamics error,
// 3 partial sweep failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kicked/kicked.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDynamics = 2;
constexpr int kExitPartialSweep = 3;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kicked::ConfigError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string default_output_dir() {
  const char* env = std::getenv(kicked::kOutputDirEnvVar);
  return env && *env ? env : "out";
}

struct RunOverrides {
  std::string config_path;
  std::string out;
  std::string regime;
  std::string convolution;
  std::int64_t steps = -1;
  std::int64_t meas_period = -1;
  std::int64_t trajectories = -1;
  std::int64_t ensemble = -1;
  double k = -1.0;
  double t = -1.0;
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::int64_t lattice_min = 1;  // invalid marker (must be <= 0)
  std::int64_t lattice_max = -1;
};

kicked::ExperimentConfig build_run_config(const RunOverrides& o) {
  kicked::ExperimentConfig config;
  if (!o.config_path.empty()) {
    config = kicked::parse_config(read_text_file(o.config_path));
  }
  if (!o.regime.empty()) {
    config.regime = kicked::detail::parse_enum(kicked::detail::regime_names(),
                                               kicked::Json(o.regime),
                                               "regime");
  }
  if (!o.convolution.empty()) {
    config.convolution =
        kicked::detail::parse_enum(kicked::detail::convolution_names(),
                                   kicked::Json(o.convolution), "convolution");
  }
  if (o.steps >= 0) config.steps = o.steps;
  if (o.meas_period >= 0) config.meas_period = o.meas_period;
  if (o.trajectories >= 0) config.trajectories = o.trajectories;
  if (o.ensemble >= 0) config.ensemble_count = o.ensemble;
  if (o.k >= 0.0) config.system.kick_strength = o.k;
  if (o.t >= 0.0) config.system.period = o.t;
  if (o.has_seed) config.seed = o.seed;
  if (o.lattice_min <= 0) config.lattice.n_min = o.lattice_min;
  if (o.lattice_max >= 0) config.lattice.n_max = o.lattice_max;
  if (!o.out.empty()) {
    config.output_path = o.out;
  } else if (config.output_path.empty()) {
    config.output_path =
        (std::filesystem::path(default_output_dir()) / "run").string();
  }
  config.validate();
  return config;
}

void print_run_summary(const kicked::RunResult& result) {
  const auto& a = result.analysis;
  std::cout << "regime: "
            << kicked::detail::name_of(kicked::detail::regime_names(),
                                       result.config.regime)
            << ", steps: " << result.config.steps << '\n';
  if (a.diffusion) {
    std::cout << "diffusion B = " << a.diffusion->coefficient << " +/- "
              << a.diffusion->stderr_b << " (steps "
              << a.diffusion_window.first_step << ".."
              << a.diffusion_window.last_step << ")\n";
  }
  if (a.break_time) {
    if (a.break_time->suppression_detected) {
      std::cout << "suppression detected: t* = " << a.break_time->t_star
                << " [" << a.break_time->ci_low << ", " << a.break_time->ci_high
                << "], late/early slope ratio = " << a.break_time->slope_ratio
                << '\n';
    } else {
      std::cout << "no suppression detected (slope ratio = "
                << a.break_time->slope_ratio << ")\n";
    }
  }
  if (a.localization) {
    std::cout << "localization length ell = " << a.localization->length
              << " +/- " << a.localization->stderr_ell
              << " (R^2 = " << a.localization->r_squared << ")\n";
  }
  for (const auto& note : a.notes) std::cout << "note: " << note << '\n';
  std::cout << "wrote " << result.config.output_path << ".csv and .json\n";
}

int cmd_run(const RunOverrides& overrides) {
  const kicked::ExperimentConfig config = build_run_config(overrides);
  const kicked::RunResult result = kicked::run_and_write(config);
  print_run_summary(result);
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const kicked::ExperimentConfig config =
      kicked::parse_config(read_text_file(config_path));
  std::cout << kicked::serialize_config(config);
  return kExitOk;
}

int cmd_bessel_check(double k, double tail_tol) {
  const kicked::KickKernel kernel = kicked::build_kick_kernel(k, tail_tol);
  double sum = 0.0, second = 0.0;
  for (int m = -kernel.half_width; m <= kernel.half_width; ++m) {
    const double v = kernel.at(m);
    sum += v * v;
    second += static_cast<double>(m) * static_cast<double>(m) * v * v;
  }
  std::cout << "K = " << k << ", half-width M = " << kernel.half_width
            << ", tail bound = " << kernel.tail_bound << '\n';
  std::cout.precision(16);
  std::cout << "sum J_m^2       = " << sum << "  (dev from 1: " << sum - 1.0
            << ")\n";
  std::cout << "sum m^2 J_m^2   = " << second
            << "  (dev from K^2/2: " << second - k * k / 2.0 << ")\n";
  std::cout << "J_0(K) = " << kernel.at(0) << '\n';
  if (kernel.half_width >= 1) std::cout << "J_1(K) = " << kernel.at(1) << '\n';
  bool parity_ok = true;
  for (int m = 1; m <= kernel.half_width; ++m) {
    const double expected = (m % 2 == 0) ? kernel.at(m) : -kernel.at(m);
    if (kernel.at(-m) != expected) parity_ok = false;
  }
  std::cout << "parity J_{-m} = (-1)^m J_m: " << (parity_ok ? "ok" : "BROKEN")
            << '\n';
  return kExitOk;
}

int cmd_sweep(const std::string& plan_path, std::string out_dir, int jobs) {
  kicked::SweepPlan plan =
      kicked::parse_sweep_plan(read_text_file(plan_path));
  if (jobs > 0) plan.max_concurrency = jobs;
  if (out_dir.empty()) {
    out_dir = plan.output_dir.empty()
                  ? (std::filesystem::path(default_output_dir()) / "sweep")
                        .string()
                  : plan.output_dir;
  }
  std::cout << "sweep: " << plan.cell_count() << " cells ("
            << plan.grids.size() << " grid axes), concurrency "
            << plan.max_concurrency << ", output " << out_dir << '\n';
  const kicked::SweepReport report = kicked::run_sweep(plan, out_dir);
  std::cout << report.cells.size() - report.failed << " ok, " << report.failed
            << " failed\n";
  for (const auto& cell : report.cells) {
    if (!cell.ok) {
      std::cout << "cell " << cell.index << " " << cell.parameters.dump()
                << ": " << cell.error << '\n';
    }
  }
  std::cout << "wrote " << out_dir << "/aggregate.csv and sweep_report.json\n";
  return report.failed > 0 ? kExitPartialSweep : kExitOk;
}

int cmd_compare(const std::vector<std::string>& bundle_paths,
                const std::string& out_base) {
  std::vector<kicked::RunResult> bundles;
  bundles.reserve(bundle_paths.size());
  for (std::string path : bundle_paths) {
    // accept either the base path or one of its files
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
      path = path.substr(0, path.size() - 5);
    } else if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
      path = path.substr(0, path.size() - 4);
    }
    bundles.push_back(kicked::read_run_result(path));
  }
  const kicked::ComparisonReport report = kicked::compare_regimes(bundles);
  kicked::write_comparison(report, out_base);
  std::cout << "compared " << bundles.size() << " bundles at K = "
            << report.kick_strength << ", T = " << report.period << '\n';
  std::cout << report.ratios.dump(2) << '\n';
  std::cout << "wrote " << out_base << ".csv and .json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kicked-system dynamics: classical, quantum, and measured"};
  app.require_subcommand(1);

  RunOverrides run_opts;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", run_opts.config_path, "JSON config file");
  run->add_option("--seed", run_opts.seed, "master RNG seed")
      ->each([&](const std::string&) { run_opts.has_seed = true; });
  run->add_option("--out", run_opts.out, "output base path");
  run->add_option("--regime", run_opts.regime,
                  "classical | quantum_deterministic | quantum_static_random |"
                  " quantum_per_step_random | rate_equation |"
                  " monte_carlo_measured");
  run->add_option("--steps", run_opts.steps, "number of kicks");
  run->add_option("--k", run_opts.k, "kick strength K");
  run->add_option("--t", run_opts.t, "kick period T");
  run->add_option("--meas-period", run_opts.meas_period,
                  "kicks per measurement (monte_carlo_measured)");
  run->add_option("--trajectories", run_opts.trajectories,
                  "Monte Carlo trajectory count");
  run->add_option("--ensemble", run_opts.ensemble,
                  "classical ensemble point count");
  run->add_option("--lattice-min", run_opts.lattice_min, "lattice n_min");
  run->add_option("--lattice-max", run_opts.lattice_max, "lattice n_max");
  run->add_option("--convolution", run_opts.convolution, "direct | fft");

  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate-config", "Parse and echo a config file");
  validate->add_option("--config", validate_path, "JSON config file")
      ->required();

  double bessel_k = 0.0;
  double bessel_tail = 1e-14;
  CLI::App* bessel =
      app.add_subcommand("bessel-check", "Print kick-kernel diagnostics");
  bessel->add_option("--k", bessel_k, "kick strength K")->required();
  bessel->add_option("--tail-tol", bessel_tail, "kernel tail tolerance");

  std::string plan_path, sweep_out;
  int sweep_jobs = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--plan", plan_path, "JSON sweep plan")->required();
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--jobs", sweep_jobs, "max concurrent cells");

  std::vector<std::string> compare_paths;
  std::string compare_out;
  CLI::App* compare =
      app.add_subcommand("compare", "Compare result bundles at equal (K, T)");
  compare->add_option("bundles", compare_paths, "result bundle base paths")
      ->expected(-2);
  compare->add_option("--out", compare_out, "output base path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (bessel->parsed()) return cmd_bessel_check(bessel_k, bessel_tail);
    if (sweep->parsed()) return cmd_sweep(plan_path, sweep_out, sweep_jobs);
    if (compare->parsed()) {
      if (compare_out.empty()) {
        compare_out =
            (std::filesystem::path(default_output_dir()) / "compare").string();
      }
      return cmd_compare(compare_paths, compare_out);
    }
  } catch (const kicked::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const kicked::DynamicsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDynamics;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDynamics;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDynamics;
  }
  return kExitValidation;
}
