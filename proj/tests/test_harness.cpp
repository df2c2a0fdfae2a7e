#include "kicked/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "kicked/config.hpp"

namespace fs = std::filesystem;

using kicked::ConvolutionMethod;
using kicked::ExperimentConfig;
using kicked::parse_config;
using kicked::RegimeTag;
using kicked::run_experiment;
using kicked::serialize_config;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("kicked_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_rate_config() {
  ExperimentConfig c;
  c.regime = RegimeTag::kRateEquation;
  c.system.kick_strength = 5.0;
  c.system.period = 1.0;
  c.lattice = {-512, 512};
  c.steps = 100;
  return c;
}

}  // namespace

TEST(ConfigRoundTrip, DefaultAndTweaked) {
  ExperimentConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);

  c.regime = RegimeTag::kMonteCarloMeasured;
  c.system.hamiltonian = kicked::H0Kind::kPowerLaw;
  c.system.power_coeff = 0.5;
  c.system.power_exp = 3.0;
  c.system.kick_strength = 2.25;
  c.system.period = 0.75;
  c.system.convention = kicked::KickPhaseConvention::kPhysicalKick;
  c.lattice = {-300, 200};
  c.steps = 123;
  c.meas_period = 4;
  c.trajectories = 17;
  c.seed = 0xdeadbeef;
  c.record_stride = 6;
  c.tail_tol = 1e-13;
  c.edge_threshold = 1e-7;
  c.convolution = ConvolutionMethod::kFft;
  c.output_path = "somewhere/run";
  c.write_snapshot = false;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(ConfigRoundTrip, RandomizedConfigs) {
  kicked::CounterRng rng(2718, 0);
  for (int i = 0; i < 50; ++i) {
    ExperimentConfig c;
    c.system.kick_strength = 10.0 * rng.next_unit();
    c.system.period = 0.1 + 2.0 * rng.next_unit();
    c.steps = static_cast<std::int64_t>(rng.next_unit() * 5000);
    c.seed = rng.next_u64();
    c.record_stride = static_cast<std::int64_t>(rng.next_unit() * 20);
    c.meas_period = 1 + static_cast<std::int64_t>(rng.next_unit() * 8);
    c.edge_threshold = std::pow(10.0, -1.0 - 7.0 * rng.next_unit());
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
}

TEST(ConfigValidation, ErrorsNameTheField) {
  const auto expect_error_mentions = [](const std::string& text,
                                        const std::string& needle) {
    try {
      parse_config(text);
      FAIL() << "expected ConfigError for " << text;
    } catch (const kicked::ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
          << e.what();
    }
  };
  expect_error_mentions(R"({"regime": "nope"})", "regime");
  expect_error_mentions(R"({"steps": -5})", "steps");
  expect_error_mentions(R"({"steps": 2.5})", "steps");
  expect_error_mentions(R"({"system": {"period": 0}})", "period");
  expect_error_mentions(R"({"system": {"kick_strength": -1}})",
                        "kick_strength");
  expect_error_mentions(R"({"tail_tol": 1e-9})", "tail_tol");
  expect_error_mentions(R"({"unknown_key": 1})", "unknown_key");
  expect_error_mentions(R"({"system": {"typo": 1}})", "system.typo");
  expect_error_mentions(R"({"lattice": {"n_min": 5, "n_max": 10}})", "lattice");
  expect_error_mentions(R"({"meas_period": 0})", "meas_period");
  expect_error_mentions(R"({"initial_n": 99999})", "initial_n");
  expect_error_mentions(R"({"schema_version": "2.0"})", "schema_version");
  expect_error_mentions("not json at all", "JSON");
  expect_error_mentions(
      R"({"regime": "rate_equation", "system": {"phase_mode": "per_step_random"}})",
      "phase_mode");
}

TEST(ConfigValidation, PhaseModeConsistentWithRegimeAccepted) {
  const ExperimentConfig c = parse_config(
      R"({"regime": "quantum_static_random",
          "system": {"phase_mode": "static_random"}})");
  EXPECT_EQ(c.regime, RegimeTag::kQuantumStaticRandom);
  EXPECT_EQ(c.effective_system().phase_mode, kicked::PhaseMode::kStaticRandom);
}

TEST(RunExperiment, RateEquationHitsClosedForm) {
  const kicked::RunResult result = run_experiment(small_rate_config());
  ASSERT_TRUE(result.analysis.diffusion.has_value());
  EXPECT_NEAR(result.analysis.diffusion->coefficient / 6.25, 1.0, 1e-6);
  ASSERT_TRUE(result.analysis.break_time.has_value());
  EXPECT_FALSE(result.analysis.break_time->suppression_detected);
}

TEST(RunExperiment, ZeroStepsQuantumSeries) {
  ExperimentConfig c;
  c.regime = RegimeTag::kQuantumDeterministic;
  c.lattice = {-128, 128};
  c.steps = 0;
  const kicked::RunResult result = run_experiment(c);
  ASSERT_EQ(result.series.rows.size(), 1u);
  EXPECT_EQ(result.series.rows[0].step, 0);
  EXPECT_EQ(result.series.rows[0].var_n, 0.0);
}

TEST(RunExperiment, ClassicalRegimeRuns) {
  ExperimentConfig c;
  c.regime = RegimeTag::kClassical;
  c.system.kick_strength = 5.0;
  c.ensemble_count = 20000;
  c.steps = 60;
  const kicked::RunResult result = run_experiment(c);
  ASSERT_TRUE(result.analysis.diffusion.has_value());
  EXPECT_NEAR(result.analysis.diffusion->coefficient, 6.25, 0.25 * 6.25);
  EXPECT_FALSE(result.snapshot.present);
}

TEST(RunExperiment, MonteCarloAggregates) {
  ExperimentConfig c;
  c.regime = RegimeTag::kMonteCarloMeasured;
  c.system.kick_strength = 2.0;
  c.lattice = {-256, 256};
  c.steps = 40;
  c.meas_period = 2;
  c.trajectories = 200;
  c.record_stride = 10;
  const kicked::RunResult result = run_experiment(c);
  // rows: step 0 plus measurements at 10, 20, 30, 40
  ASSERT_EQ(result.series.rows.size(), 5u);
  EXPECT_EQ(result.series.rows[1].step, 10);
  EXPECT_NEAR(result.series.rows[4].var_n, 2.0 * 40.0, 0.5 * 80.0);
  EXPECT_TRUE(result.snapshot.present);
}

TEST(Persistence, ByteIdenticalReruns) {
  const fs::path dir = temp_dir("determinism");
  ExperimentConfig c = small_rate_config();
  c.regime = RegimeTag::kMonteCarloMeasured;
  c.trajectories = 50;
  c.steps = 30;
  c.output_path = (dir / "a").string();

  kicked::run_and_write(c);
  const std::string csv1 = slurp(dir / "a.csv");
  const std::string json1 = slurp(dir / "a.json");
  fs::remove(dir / "a.csv");
  fs::remove(dir / "a.json");

  kicked::run_and_write(c);
  EXPECT_EQ(slurp(dir / "a.csv"), csv1);
  EXPECT_EQ(slurp(dir / "a.json"), json1);
}

TEST(Persistence, WriteReadRoundTrip) {
  const fs::path dir = temp_dir("roundtrip");
  ExperimentConfig c = small_rate_config();
  c.output_path = (dir / "run").string();
  const kicked::RunResult written = kicked::run_and_write(c);
  const kicked::RunResult loaded =
      kicked::read_run_result((dir / "run").string());
  EXPECT_EQ(loaded.config, written.config);
  ASSERT_EQ(loaded.series.rows.size(), written.series.rows.size());
  for (std::size_t i = 0; i < loaded.series.rows.size(); ++i) {
    EXPECT_EQ(loaded.series.rows[i].step, written.series.rows[i].step);
    EXPECT_EQ(loaded.series.rows[i].var_n, written.series.rows[i].var_n);
  }
  EXPECT_EQ(loaded.snapshot.probs, written.snapshot.probs);
  // no temp litter
  EXPECT_FALSE(fs::exists(dir / "run.csv.tmp"));
  EXPECT_FALSE(fs::exists(dir / "run.json.tmp"));
}

TEST(Sweep, GridOverKickStrength) {
  const fs::path dir = temp_dir("sweep");
  kicked::SweepPlan plan;
  plan.base = small_rate_config();
  plan.grids = {{"system.kick_strength", {kicked::Json(2.0), kicked::Json(5.0)}}};
  plan.max_concurrency = 2;
  const kicked::SweepReport report = kicked::run_sweep(plan, dir.string());
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.failed, 0u);
  EXPECT_NEAR(report.cells[0].b_est, 1.0, 1e-6);
  EXPECT_NEAR(report.cells[1].b_est, 6.25, 1e-5);
  EXPECT_TRUE(report.cells[0].no_suppression);
  EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep_report.json"));
  EXPECT_TRUE(fs::exists(dir / "cell_0000.csv"));
  EXPECT_TRUE(fs::exists(dir / "cell_0001.json"));
}

TEST(Sweep, EmptyAxisMeansNoCells) {
  const fs::path dir = temp_dir("sweep_empty");
  kicked::SweepPlan plan;
  plan.base = small_rate_config();
  plan.grids = {{"system.kick_strength", {}}};
  const kicked::SweepReport report = kicked::run_sweep(plan, dir.string());
  EXPECT_EQ(report.cells.size(), 0u);
  EXPECT_EQ(report.failed, 0u);
  const std::string agg = slurp(dir / "aggregate.csv");
  EXPECT_EQ(agg, "cell,status,parameters,b_est,t_star,ell,no_suppression\n");
}

TEST(Sweep, FailuresIsolatedPerCell) {
  const fs::path dir = temp_dir("sweep_fail");
  kicked::SweepPlan plan;
  plan.base = small_rate_config();
  // second value drives the state into the lattice edge -> dynamics error
  plan.grids = {{"initial_n", {kicked::Json(0), kicked::Json(505)}}};
  const kicked::SweepReport report = kicked::run_sweep(plan, dir.string());
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.failed, 1u);
  EXPECT_TRUE(report.cells[0].ok);
  EXPECT_FALSE(report.cells[1].ok);
  EXPECT_FALSE(report.cells[1].error.empty());
}

TEST(Sweep, DeterministicAcrossConcurrencyLevels) {
  const fs::path dir1 = temp_dir("sweep_c1");
  const fs::path dir4 = temp_dir("sweep_c4");
  kicked::SweepPlan plan;
  plan.base = small_rate_config();
  plan.base.steps = 50;
  plan.grids = {{"system.kick_strength",
                 {kicked::Json(1.0), kicked::Json(2.0), kicked::Json(3.0),
                  kicked::Json(4.0)}},
                {"seed", {kicked::Json(1), kicked::Json(2)}}};
  plan.max_concurrency = 1;
  kicked::run_sweep(plan, dir1.string());
  plan.max_concurrency = 4;
  kicked::run_sweep(plan, dir4.string());
  EXPECT_EQ(slurp(dir1 / "aggregate.csv"), slurp(dir4 / "aggregate.csv"));
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04d.csv", i);
    EXPECT_EQ(slurp(dir1 / name), slurp(dir4 / name)) << name;
  }
}

TEST(Compare, SelfComparisonGivesUnitRatios) {
  ExperimentConfig c = small_rate_config();
  const kicked::RunResult r = run_experiment(c);
  const kicked::ComparisonReport report = kicked::compare_regimes({r, r});
  ASSERT_EQ(report.labels.size(), 2u);
  EXPECT_EQ(report.labels[0], "rate_equation");
  EXPECT_EQ(report.labels[1], "rate_equation_2");
  const auto& bundles = report.ratios.at("bundles");
  EXPECT_NEAR(bundles[0].at("full_over_reference").get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(bundles[1].at("full_over_reference").get<double>(), 1.0, 1e-12);
  ASSERT_FALSE(report.steps.empty());
  EXPECT_EQ(report.var_table[0], report.var_table[1]);
}

TEST(Compare, MismatchedParametersRejected) {
  ExperimentConfig a = small_rate_config();
  ExperimentConfig b = small_rate_config();
  b.system.kick_strength = 2.0;
  const auto ra = run_experiment(a);
  const auto rb = run_experiment(b);
  EXPECT_THROW(kicked::compare_regimes({ra, rb}), kicked::ConfigError);
}

// ---------------------------------------------------------------------------
// CLI binary integration (binary path provided by CMake via environment).

namespace {

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
  const char* bin = std::getenv("KICKED_CLI_BIN");
  if (!bin) return {};
  const fs::path out = fs::temp_directory_path() / "kicked_cli_out.txt";
  const std::string cmd =
      std::string(bin) + " " + args + " > " + out.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WEXITSTATUS(raw);
  r.stdout_text = slurp(out);
  return r;
}

}  // namespace

TEST(Cli, EndToEnd) {
  if (!std::getenv("KICKED_CLI_BIN")) {
    GTEST_SKIP() << "KICKED_CLI_BIN not set";
  }
  const fs::path dir = temp_dir("cli");

  // validate-config: good and bad
  const fs::path good = dir / "good.json";
  std::ofstream(good) << R"({"regime": "rate_equation", "steps": 60,
                            "lattice": {"n_min": -256, "n_max": 256}})";
  EXPECT_EQ(run_cli("validate-config --config " + good.string()).exit_code, 0);

  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"steps": -4})";
  EXPECT_EQ(run_cli("validate-config --config " + bad.string()).exit_code, 1);

  // run with mandatory flag spellings
  const CliResult run = run_cli(
      "run --config " + good.string() + " --seed 7 --regime rate_equation" +
      " --steps 60 --k 5 --t 1 --meas-period 1 --out " +
      (dir / "run1").string());
  EXPECT_EQ(run.exit_code, 0) << run.stdout_text;
  EXPECT_TRUE(fs::exists(dir / "run1.csv"));
  EXPECT_TRUE(fs::exists(dir / "run1.json"));

  // dynamics failure -> exit 2 (delta starts inside the edge band)
  const fs::path edge = dir / "edge.json";
  std::ofstream(edge) << R"({"regime": "quantum_deterministic", "steps": 5,
      "lattice": {"n_min": -40, "n_max": 40}, "initial_n": 38,
      "system": {"kick_strength": 5.0}})";
  const CliResult leak =
      run_cli("run --config " + edge.string() + " --out " +
              (dir / "leak").string());
  EXPECT_EQ(leak.exit_code, 2) << leak.stdout_text;

  // bessel-check prints the sum rules
  const CliResult bessel = run_cli("bessel-check --k 5");
  EXPECT_EQ(bessel.exit_code, 0);
  EXPECT_NE(bessel.stdout_text.find("sum J_m^2"), std::string::npos);
  EXPECT_NE(bessel.stdout_text.find("parity"), std::string::npos);

  // sweep with one failing cell -> exit 3
  const fs::path plan = dir / "plan.json";
  std::ofstream(plan) << R"({
    "base": {"regime": "rate_equation", "steps": 60,
             "lattice": {"n_min": -256, "n_max": 256}},
    "grids": {"initial_n": [0, 254]},
    "max_concurrency": 2})";
  const CliResult sweep = run_cli("sweep --plan " + plan.string() + " --out " +
                                  (dir / "sweep").string());
  EXPECT_EQ(sweep.exit_code, 3) << sweep.stdout_text;
  EXPECT_NE(sweep.stdout_text.find("2 cells"), std::string::npos);

  // compare two runs at equal (K, T)
  const CliResult runc = run_cli(
      "run --config " + good.string() + " --seed 9 --regime classical"
      " --steps 60 --k 5 --t 1 --meas-period 1 --ensemble 5000 --out " +
      (dir / "classical").string());
  EXPECT_EQ(runc.exit_code, 0) << runc.stdout_text;
  const CliResult cmp = run_cli("compare " + (dir / "run1").string() + " " +
                                (dir / "classical").string() + " --out " +
                                (dir / "cmp").string());
  EXPECT_EQ(cmp.exit_code, 0) << cmp.stdout_text;
  EXPECT_TRUE(fs::exists(dir / "cmp.csv"));
  EXPECT_TRUE(fs::exists(dir / "cmp.json"));

  // mismatched (K, T) -> exit 1
  const CliResult runk2 = run_cli(
      "run --config " + good.string() + " --seed 9 --k 2 --t 1"
      " --regime rate_equation --steps 60 --meas-period 1 --out " +
      (dir / "k2").string());
  EXPECT_EQ(runk2.exit_code, 0);
  const CliResult cmp_bad = run_cli("compare " + (dir / "run1").string() +
                                    " " + (dir / "k2").string() + " --out " +
                                    (dir / "cmp_bad").string());
  EXPECT_EQ(cmp_bad.exit_code, 1);
}
