#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kicked/analysis.hpp"
#include "kicked/classical.hpp"
#include "kicked/config.hpp"
#include "kicked/errors.hpp"
#include "kicked/measured.hpp"
#include "kicked/observables.hpp"
#include "kicked/quantum.hpp"
#include "kicked/version.hpp"

namespace kicked {

inline constexpr const char* kOutputDirEnvVar = "KICKED_OUT_DIR";

struct AnalysisSummary {
  std::optional<DiffusionEstimate> diffusion;
  FitWindow diffusion_window;
  std::optional<BreakTimeEstimate> break_time;
  std::optional<LocalizationFit> localization;
  std::vector<std::string> notes;  // estimators that declined, with reasons
};

struct StateSnapshot {
  bool present = false;
  std::int64_t n_min = 0;
  std::int64_t n_max = 0;
  std::vector<double> probs;
};

struct RunResult {
  ExperimentConfig config;
  ObservableSeries series;
  StateSnapshot snapshot;
  AnalysisSummary analysis;
};

namespace detail {

inline FitWindow diffusion_window_for(const ExperimentConfig& config) {
  switch (config.regime) {
    // Linear-growth regimes: fit the whole recorded range.
    case RegimeTag::kRateEquation:
    case RegimeTag::kQuantumPerStepRandom:
    case RegimeTag::kMonteCarloMeasured:
      return {1, config.steps};
    // Transient-sensitive regimes: default early window.
    default:
      return {5, std::min<std::int64_t>(100, config.steps)};
  }
}

inline AnalysisSummary summarize(const ObservableSeries& series,
                                 const ExperimentConfig& config,
                                 const StateSnapshot& snapshot) {
  AnalysisSummary summary;
  summary.diffusion_window = diffusion_window_for(config);
  try {
    summary.diffusion =
        diffusion_fit(series, config.system.period, summary.diffusion_window);
  } catch (const AnalysisError& e) {
    summary.notes.push_back(std::string("diffusion fit: ") + e.what());
  }
  try {
    summary.break_time = break_time_estimate(series);
  } catch (const AnalysisError& e) {
    summary.notes.push_back(std::string("break time: ") + e.what());
  }
  if (snapshot.present && config.regime != RegimeTag::kClassical) {
    try {
      ActionLattice lattice{snapshot.n_min, snapshot.n_max};
      summary.localization =
          localization_length_fit(snapshot.probs, lattice, config.initial_n);
    } catch (const AnalysisError& e) {
      summary.notes.push_back(std::string("localization fit: ") + e.what());
    }
  }
  return summary;
}

inline StateSnapshot snapshot_of(const std::vector<double>& probs,
                                 const ActionLattice& lattice) {
  StateSnapshot snap;
  snap.present = true;
  snap.n_min = lattice.n_min;
  snap.n_max = lattice.n_max;
  snap.probs = probs;
  return snap;
}

}  // namespace detail

/// Run one configured experiment and return the full in-memory bundle.
inline RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunResult result;
  result.config = config;
  const KickedSystem sys = config.effective_system();
  const std::int64_t stride = config.effective_record_stride();

  switch (config.regime) {
    case RegimeTag::kClassical: {
      ClassicalEnsemble ens =
          init_ensemble(static_cast<std::size_t>(config.ensemble_count),
                        config.initial_action,
                        rng::hash2(config.seed, rng::kClassicalInitStream));
      ClassicalRecorder recorder(stride);
      evolve_classical(ens, sys, config.steps, recorder);
      result.series = recorder.take();
      break;
    }
    case RegimeTag::kQuantumDeterministic:
    case RegimeTag::kQuantumStaticRandom:
    case RegimeTag::kQuantumPerStepRandom: {
      const KickKernel kernel =
          build_kick_kernel(config.system.kick_strength, config.tail_tol);
      AmplitudeState state =
          initial_delta_state(config.lattice, config.initial_n);
      SeriesRecorder recorder(config.regime, sys, kernel.half_width, stride);
      const EvolutionOptions options{config.convolution,
                                     config.edge_threshold};
      state = evolve_quantum(std::move(state), kernel, sys, config.steps,
                             recorder, options);
      result.series = recorder.take();
      if (config.write_snapshot) {
        result.snapshot =
            detail::snapshot_of(probabilities_of(state), state.lattice);
      }
      break;
    }
    case RegimeTag::kRateEquation: {
      const KickKernel kernel =
          build_kick_kernel(config.system.kick_strength, config.tail_tol);
      ProbabilityState state =
          initial_delta_probability(config.lattice, config.initial_n);
      SeriesRecorder recorder(config.regime, sys, kernel.half_width, stride);
      state = evolve_rate(std::move(state), kernel, config.steps, recorder,
                          config.edge_threshold);
      result.series = recorder.take();
      if (config.write_snapshot) {
        result.snapshot = detail::snapshot_of(state.probs, state.lattice);
      }
      break;
    }
    case RegimeTag::kMonteCarloMeasured: {
      const KickKernel kernel =
          build_kick_kernel(config.system.kick_strength, config.tail_tol);
      const EvolutionOptions options{config.convolution,
                                     config.edge_threshold};
      // Measurements happen at multiples of meas_period; of those, every
      // stride_meas-th is recorded (stride is spelled in kicks).
      const std::int64_t stride_meas =
          std::max<std::int64_t>(1, (stride + config.meas_period - 1) /
                                        config.meas_period);
      const std::int64_t n_meas = config.steps / config.meas_period;
      const std::size_t lattice_size =
          static_cast<std::size_t>(config.lattice.size());

      std::vector<std::int64_t> recorded_steps;
      for (std::int64_t k = stride_meas; k <= n_meas; k += stride_meas) {
        recorded_steps.push_back(k * config.meas_period);
      }
      std::vector<std::vector<std::int64_t>> counts(
          recorded_steps.size(), std::vector<std::int64_t>(lattice_size, 0));

      for (std::int64_t traj = 0; traj < config.trajectories; ++traj) {
        CounterRng rng(rng::hash2(config.seed, rng::kTrajectoryStream),
                       static_cast<std::uint64_t>(traj));
        AmplitudeState state =
            initial_delta_state(config.lattice, config.initial_n);
        std::size_t slot = 0;
        auto sink = [&](std::int64_t step, std::int64_t outcome) {
          if (slot < recorded_steps.size() && step == recorded_steps[slot]) {
            ++counts[slot][config.lattice.index_of(outcome)];
            ++slot;
          }
        };
        evolve_measured(std::move(state), kernel, sys, config.steps,
                        config.meas_period, rng, options, sink);
      }

      result.series.regime = RegimeTag::kMonteCarloMeasured;
      // Step 0 row: all trajectories at the initial site.
      {
        std::vector<double> p0(lattice_size, 0.0);
        p0[config.lattice.index_of(config.initial_n)] = 1.0;
        const Moments m = moments(p0, config.lattice, sys, kernel.half_width);
        result.series.rows.push_back({0, m.mean_n, m.var_n, m.energy,
                                      m.participation_ratio, m.edge_mass});
      }
      std::vector<double> empirical(lattice_size, 0.0);
      for (std::size_t r = 0; r < recorded_steps.size(); ++r) {
        for (std::size_t i = 0; i < lattice_size; ++i) {
          empirical[i] = static_cast<double>(counts[r][i]) /
                         static_cast<double>(config.trajectories);
        }
        const Moments m =
            moments(empirical, config.lattice, sys, kernel.half_width);
        result.series.rows.push_back({recorded_steps[r], m.mean_n, m.var_n,
                                      m.energy, m.participation_ratio,
                                      m.edge_mass});
      }
      if (config.write_snapshot && !recorded_steps.empty()) {
        result.snapshot = detail::snapshot_of(empirical, config.lattice);
      }
      break;
    }
  }

  result.series.validate();
  result.analysis = detail::summarize(result.series, config, result.snapshot);
  return result;
}

// ---------------------------------------------------------------------------
// Persistence: CSV for series, JSON for summary/metadata, both written
// atomically (temp file in the same directory, then rename).

namespace detail {

inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DynamicsError("cannot open " + tmp.string() + " for writing");
    }
    out << content;
    if (!out.flush()) {
      throw DynamicsError("write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string series_to_csv(const ObservableSeries& series) {
  std::string out = "step,mean_n,var_n,energy,participation_ratio,edge_mass\n";
  for (const auto& r : series.rows) {
    out += std::to_string(r.step);
    out += ',';
    out += detail::format_double(r.mean_n);
    out += ',';
    out += detail::format_double(r.var_n);
    out += ',';
    out += detail::format_double(r.energy);
    out += ',';
    out += detail::format_double(r.participation_ratio);
    out += ',';
    out += detail::format_double(r.edge_mass);
    out += '\n';
  }
  return out;
}

inline ObservableSeries series_from_csv(const std::string& text,
                                        RegimeTag regime) {
  ObservableSeries series;
  series.regime = regime;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw AnalysisError("empty series CSV");
  if (line != "step,mean_n,var_n,energy,participation_ratio,edge_mass") {
    throw AnalysisError("unexpected series CSV header: " + line);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ObservableRow row;
    char* end = nullptr;
    const char* p = line.c_str();
    row.step = std::strtoll(p, &end, 10);
    double* fields[5] = {&row.mean_n, &row.var_n, &row.energy,
                         &row.participation_ratio, &row.edge_mass};
    for (double* f : fields) {
      if (*end != ',') throw AnalysisError("malformed series CSV row: " + line);
      p = end + 1;
      *f = std::strtod(p, &end);
    }
    series.rows.push_back(row);
  }
  return series;
}

inline Json analysis_to_json(const AnalysisSummary& a) {
  Json j;
  if (a.diffusion) {
    j["diffusion"] = Json{{"coefficient", a.diffusion->coefficient},
                          {"stderr", a.diffusion->stderr_b},
                          {"points", a.diffusion->points},
                          {"window_first_step", a.diffusion_window.first_step},
                          {"window_last_step", a.diffusion_window.last_step}};
  } else {
    j["diffusion"] = nullptr;
  }
  if (a.break_time) {
    const auto& b = *a.break_time;
    j["break_time"] = Json{{"suppression_detected", b.suppression_detected},
                           {"t_star", b.t_star},
                           {"ci_low", b.ci_low},
                           {"ci_high", b.ci_high},
                           {"early_slope", b.early_slope},
                           {"late_slope", b.late_slope},
                           {"slope_ratio", b.slope_ratio}};
  } else {
    j["break_time"] = nullptr;
  }
  if (a.localization) {
    j["localization"] = Json{{"length", a.localization->length},
                             {"stderr", a.localization->stderr_ell},
                             {"r_squared", a.localization->r_squared},
                             {"sites", a.localization->sites}};
  } else {
    j["localization"] = nullptr;
  }
  j["notes"] = a.notes;
  return j;
}

/// Write `<base>.csv` (series) and `<base>.json` (config, analysis, snapshot).
/// Output is deterministic: no timestamps, fixed float formatting.
inline void write_run_result(const RunResult& result,
                             const std::string& base_path) {
  detail::atomic_write_file(base_path + ".csv",
                            series_to_csv(result.series));

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["config"] = to_json(result.config);
  j["series_file"] = std::filesystem::path(base_path + ".csv")
                         .filename()
                         .string();
  j["analysis"] = analysis_to_json(result.analysis);
  if (result.snapshot.present) {
    j["snapshot"] = Json{{"n_min", result.snapshot.n_min},
                         {"n_max", result.snapshot.n_max},
                         {"probs", result.snapshot.probs}};
  } else {
    j["snapshot"] = nullptr;
  }
  detail::atomic_write_file(base_path + ".json", j.dump(2) + "\n");
}

/// Load a result bundle written by write_run_result.
inline RunResult read_run_result(const std::string& base_path) {
  std::ifstream jf(base_path + ".json", std::ios::binary);
  if (!jf) throw ConfigError("cannot open " + base_path + ".json");
  Json j;
  try {
    j = Json::parse(jf);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(base_path + ".json is not valid JSON: " + e.what());
  }
  if (!j.contains("schema_version") || !j.at("schema_version").is_string()) {
    throw ConfigError(base_path + ".json has no schema_version");
  }
  RunResult result;
  result.config = config_from_json(j.at("config"));

  std::ifstream cf(base_path + ".csv", std::ios::binary);
  if (!cf) throw ConfigError("cannot open " + base_path + ".csv");
  std::stringstream buffer;
  buffer << cf.rdbuf();
  result.series = series_from_csv(buffer.str(), result.config.regime);

  if (j.contains("snapshot") && j.at("snapshot").is_object()) {
    const Json& s = j.at("snapshot");
    result.snapshot.present = true;
    result.snapshot.n_min = s.at("n_min").get<std::int64_t>();
    result.snapshot.n_max = s.at("n_max").get<std::int64_t>();
    result.snapshot.probs = s.at("probs").get<std::vector<double>>();
  }
  result.analysis = detail::summarize(result.series, result.config,
                                      result.snapshot);
  return result;
}

/// Run and persist; returns the bundle.
inline RunResult run_and_write(const ExperimentConfig& config) {
  RunResult result = run_experiment(config);
  if (!config.output_path.empty()) {
    write_run_result(result, config.output_path);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCellOutcome {
  std::size_t index = 0;
  Json parameters;  // grid key -> value for this cell
  bool ok = false;
  std::string error;
  std::string output_base;
  // headline metrics (NaN when unavailable)
  double b_est = std::numeric_limits<double>::quiet_NaN();
  double t_star = std::numeric_limits<double>::quiet_NaN();
  double ell = std::numeric_limits<double>::quiet_NaN();
  bool no_suppression = false;
};

struct SweepReport {
  std::vector<SweepCellOutcome> cells;
  std::size_t failed = 0;

  std::string aggregate_csv() const {
    std::string out =
        "cell,status,parameters,b_est,t_star,ell,no_suppression\n";
    for (const auto& c : cells) {
      out += std::to_string(c.index);
      out += ',';
      out += c.ok ? "ok" : "error";
      out += ',';
      std::string params = c.parameters.dump();
      for (auto& ch : params) {
        if (ch == ',') ch = ';';  // keep the CSV single-delimiter
      }
      out += params;
      out += ',';
      out += detail::format_double(c.b_est);
      out += ',';
      out += detail::format_double(c.t_star);
      out += ',';
      out += detail::format_double(c.ell);
      out += ',';
      out += c.no_suppression ? "1" : "0";
      out += '\n';
    }
    return out;
  }
};

inline Json sweep_cell_parameters(const SweepPlan& plan,
                                  std::size_t cell_index) {
  Json params;
  std::size_t rest = cell_index;
  for (const auto& [key, values] : plan.grids) {
    params[key] = values[rest % values.size()];
    rest /= values.size();
  }
  return params;
}

/// Execute every cell of the plan, at most `max_concurrency` at a time.
/// Cell failures are recorded, not propagated; results and the aggregate
/// table are independent of scheduling order.
inline SweepReport run_sweep(const SweepPlan& plan,
                             const std::string& output_dir) {
  const std::size_t n = plan.cell_count();
  SweepReport report;
  report.cells.resize(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      SweepCellOutcome& cell = report.cells[i];
      cell.index = i;
      cell.parameters = sweep_cell_parameters(plan, i);
      try {
        ExperimentConfig config = sweep_cell_config(plan, i);
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu", i);
        cell.output_base =
            (std::filesystem::path(output_dir) / name).string();
        config.output_path = cell.output_base;
        const RunResult result = run_and_write(config);
        cell.ok = true;
        if (result.analysis.diffusion) {
          cell.b_est = result.analysis.diffusion->coefficient;
        }
        if (result.analysis.break_time) {
          if (result.analysis.break_time->suppression_detected) {
            cell.t_star = result.analysis.break_time->t_star;
          } else {
            cell.no_suppression = true;
          }
        }
        if (result.analysis.localization) {
          cell.ell = result.analysis.localization->length;
        }
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(plan.max_concurrency),
                            std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& c : report.cells) {
    if (!c.ok) ++report.failed;
  }

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["cells_total"] = n;
  j["cells_failed"] = report.failed;
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json cj;
    cj["index"] = c.index;
    cj["parameters"] = c.parameters;
    cj["status"] = c.ok ? "ok" : "error";
    if (!c.ok) cj["error"] = c.error;
    cj["output_base"] = c.output_base;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  detail::atomic_write_file(
      (std::filesystem::path(output_dir) / "sweep_report.json").string(),
      j.dump(2) + "\n");
  detail::atomic_write_file(
      (std::filesystem::path(output_dir) / "aggregate.csv").string(),
      report.aggregate_csv());
  return report;
}

// ---------------------------------------------------------------------------
// Regime comparison

struct ComparisonReport {
  double kick_strength = 0.0;
  double period = 0.0;
  std::vector<std::string> labels;
  std::vector<std::int64_t> steps;             // aligned recorded steps
  std::vector<std::vector<double>> var_table;  // [label][step index]
  Json ratios;

  std::string table_csv() const {
    std::string out = "step";
    for (const auto& l : labels) out += ",var_" + l;
    out += '\n';
    for (std::size_t r = 0; r < steps.size(); ++r) {
      out += std::to_string(steps[r]);
      for (const auto& col : var_table) {
        out += ',';
        out += detail::format_double(col[r]);
      }
      out += '\n';
    }
    return out;
  }
};

/// Align var(t) across bundles sharing (K, T) and report slope ratios
/// against the classical bundle (or the first bundle when none is classical).
inline ComparisonReport compare_regimes(const std::vector<RunResult>& bundles) {
  if (bundles.size() < 2) {
    throw ConfigError("compare needs at least two result bundles");
  }
  const double k = bundles[0].config.system.kick_strength;
  const double t = bundles[0].config.system.period;
  for (const auto& b : bundles) {
    if (b.config.system.kick_strength != k || b.config.system.period != t) {
      throw ConfigError(
          "bundles do not share (K, T): expected (" + std::to_string(k) + ", " +
          std::to_string(t) + "), got (" +
          std::to_string(b.config.system.kick_strength) + ", " +
          std::to_string(b.config.system.period) + ")");
    }
  }

  ComparisonReport report;
  report.kick_strength = k;
  report.period = t;

  // Labels: regime name, disambiguated when repeated.
  std::map<std::string, int> used;
  for (const auto& b : bundles) {
    std::string label = detail::name_of(detail::regime_names(),
                                        b.config.regime);
    const int count = used[label]++;
    if (count > 0) label += "_" + std::to_string(count + 1);
    report.labels.push_back(label);
  }

  // Aligned steps: intersection of recorded steps.
  std::map<std::int64_t, std::size_t> step_hits;
  for (const auto& b : bundles) {
    for (const auto& row : b.series.rows) ++step_hits[row.step];
  }
  for (const auto& [step, hits] : step_hits) {
    if (hits == bundles.size()) report.steps.push_back(step);
  }

  report.var_table.resize(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    std::map<std::int64_t, double> by_step;
    for (const auto& row : bundles[i].series.rows) {
      by_step[row.step] = row.var_n;
    }
    for (const auto step : report.steps) {
      report.var_table[i].push_back(by_step.at(step));
    }
  }

  // Slopes of var vs t: full window and late half-window per bundle.
  auto slopes_of = [&](const RunResult& b) -> std::pair<double, double> {
    std::vector<double> xs, ys;
    for (const auto& row : b.series.rows) {
      xs.push_back(static_cast<double>(row.step) * t);
      ys.push_back(row.var_n);
    }
    const LinearFit full = fit_line(xs, ys);
    const std::size_t half = xs.size() / 2;
    const std::vector<double> lx(xs.begin() + static_cast<std::ptrdiff_t>(half),
                                 xs.end());
    const std::vector<double> ly(ys.begin() + static_cast<std::ptrdiff_t>(half),
                                 ys.end());
    const LinearFit late = fit_line(lx, ly);
    return {full.slope, late.slope};
  };

  std::size_t reference = 0;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (bundles[i].config.regime == RegimeTag::kClassical) {
      reference = i;
      break;
    }
  }
  const auto [ref_full, ref_late] = slopes_of(bundles[reference]);

  Json ratios;
  ratios["reference"] = report.labels[reference];
  ratios["reference_full_slope"] = ref_full;
  Json per = Json::array();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const auto [full, late] = slopes_of(bundles[i]);
    Json e;
    e["label"] = report.labels[i];
    e["full_slope"] = full;
    e["late_slope"] = late;
    e["full_over_reference"] = ref_full != 0.0 ? full / ref_full
                                               : std::numeric_limits<double>::quiet_NaN();
    e["late_over_reference"] = ref_full != 0.0 ? late / ref_full
                                               : std::numeric_limits<double>::quiet_NaN();
    per.push_back(e);
  }
  ratios["bundles"] = per;
  report.ratios = ratios;
  return report;
}

/// Persist a comparison: `<base>.csv` aligned table, `<base>.json` ratios.
inline void write_comparison(const ComparisonReport& report,
                             const std::string& base_path) {
  detail::atomic_write_file(base_path + ".csv", report.table_csv());
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["kick_strength"] = report.kick_strength;
  j["period"] = report.period;
  j["ratios"] = report.ratios;
  detail::atomic_write_file(base_path + ".json", j.dump(2) + "\n");
}

}  // namespace kicked
