#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kicked/errors.hpp"
#include "kicked/observables.hpp"
#include "kicked/quantum.hpp"
#include "kicked/rng.hpp"
#include "kicked/system.hpp"
#include "kicked/version.hpp"

namespace kicked {

using Json = nlohmann::ordered_json;

namespace detail {

inline const std::map<std::string, H0Kind>& h0_names() {
  static const std::map<std::string, H0Kind> names = {
      {"rotor", H0Kind::kRotor},
      {"linear_oscillator", H0Kind::kLinearOscillator},
      {"power_law", H0Kind::kPowerLaw},
  };
  return names;
}

inline const std::map<std::string, RegimeTag>& regime_names() {
  static const std::map<std::string, RegimeTag> names = {
      {"classical", RegimeTag::kClassical},
      {"quantum_deterministic", RegimeTag::kQuantumDeterministic},
      {"quantum_static_random", RegimeTag::kQuantumStaticRandom},
      {"quantum_per_step_random", RegimeTag::kQuantumPerStepRandom},
      {"rate_equation", RegimeTag::kRateEquation},
      {"monte_carlo_measured", RegimeTag::kMonteCarloMeasured},
  };
  return names;
}

inline const std::map<std::string, KickPhaseConvention>& convention_names() {
  static const std::map<std::string, KickPhaseConvention> names = {
      {"paper_literal", KickPhaseConvention::kPaperLiteral},
      {"physical_kick", KickPhaseConvention::kPhysicalKick},
  };
  return names;
}

inline const std::map<std::string, ConvolutionMethod>& convolution_names() {
  static const std::map<std::string, ConvolutionMethod> names = {
      {"direct", ConvolutionMethod::kDirect},
      {"fft", ConvolutionMethod::kFft},
  };
  return names;
}

inline const std::map<std::string, PhaseMode>& phase_mode_names() {
  static const std::map<std::string, PhaseMode> names = {
      {"deterministic", PhaseMode::kDeterministic},
      {"static_random", PhaseMode::kStaticRandom},
      {"per_step_random", PhaseMode::kPerStepRandom},
  };
  return names;
}

template <class T>
std::string name_of(const std::map<std::string, T>& names, T value) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  throw ConfigError("unnamed enum value");
}

template <class T>
T parse_enum(const std::map<std::string, T>& names, const Json& j,
             const std::string& field) {
  if (!j.is_string()) {
    throw ConfigError("field '" + field + "' must be a string");
  }
  const auto it = names.find(j.get<std::string>());
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [name, v] : names) {
      if (!allowed.empty()) allowed += ", ";
      allowed += name;
    }
    throw ConfigError("field '" + field + "': unknown value '" +
                      j.get<std::string>() + "' (allowed: " + allowed + ")");
  }
  return it->second;
}

inline void reject_unknown_keys(const Json& j, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown field '" + where + key + "'");
    }
  }
}

template <class T>
T get_number(const Json& j, const std::string& field) {
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) {
      throw ConfigError("field '" + field + "' must be an integer");
    }
    if (std::is_unsigned_v<T> && !j.is_number_unsigned() &&
        j.get<std::int64_t>() < 0) {
      throw ConfigError("field '" + field + "' must be >= 0");
    }
  } else {
    if (!j.is_number()) {
      throw ConfigError("field '" + field + "' must be a number");
    }
  }
  return j.get<T>();
}

}  // namespace detail

/// Everything needed to reproduce one run. Fully serializable; a persisted
/// config re-runs to bit-identical results given equal seeds.
struct ExperimentConfig {
  KickedSystem system;
  ActionLattice lattice{-2048, 2048};
  RegimeTag regime = RegimeTag::kQuantumDeterministic;
  std::int64_t steps = 1000;
  std::int64_t meas_period = 1;        // s: kicks per measurement (MC regime)
  std::int64_t trajectories = 1000;    // MC regime
  std::int64_t ensemble_count = 100000;  // classical regime
  double initial_action = 0.0;         // classical I0
  std::int64_t initial_n = 0;          // lattice regimes
  std::uint64_t seed = 1;
  std::int64_t record_stride = 0;  // 0 = auto
  double tail_tol = 1e-28;
  double edge_threshold = 1e-8;
  ConvolutionMethod convolution = ConvolutionMethod::kDirect;
  std::string output_path;          // base path; files get .csv/.json suffixes
  bool write_snapshot = true;

  bool operator==(const ExperimentConfig&) const = default;

  /// Phase mode implied by the regime (quantum regimes only).
  PhaseMode regime_phase_mode() const {
    switch (regime) {
      case RegimeTag::kQuantumStaticRandom:
        return PhaseMode::kStaticRandom;
      case RegimeTag::kQuantumPerStepRandom:
        return PhaseMode::kPerStepRandom;
      default:
        return PhaseMode::kDeterministic;
    }
  }

  /// The system actually used for dynamics: phase mode and phase seed are
  /// derived from the regime and master seed.
  KickedSystem effective_system() const {
    KickedSystem sys = system;
    sys.phase_mode = regime_phase_mode();
    sys.phase_seed = rng::hash2(seed, rng::kPhaseSeedStream);
    return sys;
  }

  std::int64_t effective_record_stride() const {
    return record_stride > 0 ? record_stride : auto_record_stride(steps);
  }

  void validate() const {
    system.validate();
    lattice.validate();
    if (steps < 0) throw ConfigError("field 'steps' must be >= 0");
    if (meas_period < 1) throw ConfigError("field 'meas_period' must be >= 1");
    if (trajectories < 1) {
      throw ConfigError("field 'trajectories' must be >= 1");
    }
    if (ensemble_count < 1) {
      throw ConfigError("field 'ensemble_count' must be >= 1");
    }
    if (record_stride < 0) {
      throw ConfigError("field 'record_stride' must be >= 0");
    }
    if (!(tail_tol > 0.0) || tail_tol > 1e-12) {
      throw ConfigError("field 'tail_tol' must be in (0, 1e-12]");
    }
    if (!(edge_threshold > 0.0) || edge_threshold > 1.0) {
      throw ConfigError("field 'edge_threshold' must be in (0, 1]");
    }
    if (!lattice.contains(initial_n)) {
      throw ConfigError("field 'initial_n' is off-lattice");
    }
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  Json sys;
  sys["hamiltonian"] = detail::name_of(detail::h0_names(), c.system.hamiltonian);
  sys["omega"] = c.system.omega;
  sys["power_coeff"] = c.system.power_coeff;
  sys["power_exp"] = c.system.power_exp;
  sys["kick_strength"] = c.system.kick_strength;
  sys["period"] = c.system.period;
  sys["kick_phase_convention"] =
      detail::name_of(detail::convention_names(), c.system.convention);
  j["system"] = sys;
  j["lattice"] = Json{{"n_min", c.lattice.n_min}, {"n_max", c.lattice.n_max}};
  j["regime"] = detail::name_of(detail::regime_names(), c.regime);
  j["steps"] = c.steps;
  j["meas_period"] = c.meas_period;
  j["trajectories"] = c.trajectories;
  j["ensemble_count"] = c.ensemble_count;
  j["initial_action"] = c.initial_action;
  j["initial_n"] = c.initial_n;
  j["seed"] = c.seed;
  j["record_stride"] = c.record_stride;
  j["tail_tol"] = c.tail_tol;
  j["edge_threshold"] = c.edge_threshold;
  j["convolution"] =
      detail::name_of(detail::convolution_names(), c.convolution);
  j["output"] = Json{{"path", c.output_path},
                     {"write_snapshot", c.write_snapshot}};
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown_keys(
      j, "",
      {"schema_version", "system", "lattice", "regime", "steps", "meas_period",
       "trajectories", "ensemble_count", "initial_action", "initial_n", "seed",
       "record_stride", "tail_tol", "edge_threshold", "convolution", "output"});

  if (j.contains("schema_version")) {
    if (!j.at("schema_version").is_string()) {
      throw ConfigError("field 'schema_version' must be a string");
    }
    const std::string v = j.at("schema_version").get<std::string>();
    int major = -1;
    try {
      major = std::stoi(v.substr(0, v.find('.')));
    } catch (const std::exception&) {
      throw ConfigError("field 'schema_version' is malformed: '" + v + "'");
    }
    if (major != kSchemaMajor) {
      throw ConfigError("unsupported schema_version '" + v +
                        "' (this build reads major " +
                        std::to_string(kSchemaMajor) + ")");
    }
  }

  ExperimentConfig c;
  if (j.contains("system")) {
    const Json& sys = j.at("system");
    detail::reject_unknown_keys(sys, "system.",
                                {"hamiltonian", "omega", "power_coeff",
                                 "power_exp", "kick_strength", "period",
                                 "phase_mode", "kick_phase_convention"});
    if (sys.contains("hamiltonian")) {
      c.system.hamiltonian = detail::parse_enum(
          detail::h0_names(), sys.at("hamiltonian"), "system.hamiltonian");
    }
    if (sys.contains("omega")) {
      c.system.omega = detail::get_number<double>(sys.at("omega"), "system.omega");
    }
    if (sys.contains("power_coeff")) {
      c.system.power_coeff =
          detail::get_number<double>(sys.at("power_coeff"), "system.power_coeff");
    }
    if (sys.contains("power_exp")) {
      c.system.power_exp =
          detail::get_number<double>(sys.at("power_exp"), "system.power_exp");
    }
    if (sys.contains("kick_strength")) {
      c.system.kick_strength = detail::get_number<double>(
          sys.at("kick_strength"), "system.kick_strength");
    }
    if (sys.contains("period")) {
      c.system.period =
          detail::get_number<double>(sys.at("period"), "system.period");
    }
    if (sys.contains("kick_phase_convention")) {
      c.system.convention =
          detail::parse_enum(detail::convention_names(),
                             sys.at("kick_phase_convention"),
                             "system.kick_phase_convention");
    }
  }
  if (j.contains("lattice")) {
    const Json& lat = j.at("lattice");
    detail::reject_unknown_keys(lat, "lattice.", {"n_min", "n_max"});
    if (lat.contains("n_min")) {
      c.lattice.n_min =
          detail::get_number<std::int64_t>(lat.at("n_min"), "lattice.n_min");
    }
    if (lat.contains("n_max")) {
      c.lattice.n_max =
          detail::get_number<std::int64_t>(lat.at("n_max"), "lattice.n_max");
    }
  }
  if (j.contains("regime")) {
    c.regime =
        detail::parse_enum(detail::regime_names(), j.at("regime"), "regime");
  }
  if (j.contains("steps")) {
    c.steps = detail::get_number<std::int64_t>(j.at("steps"), "steps");
  }
  if (j.contains("meas_period")) {
    c.meas_period =
        detail::get_number<std::int64_t>(j.at("meas_period"), "meas_period");
  }
  if (j.contains("trajectories")) {
    c.trajectories =
        detail::get_number<std::int64_t>(j.at("trajectories"), "trajectories");
  }
  if (j.contains("ensemble_count")) {
    c.ensemble_count = detail::get_number<std::int64_t>(j.at("ensemble_count"),
                                                        "ensemble_count");
  }
  if (j.contains("initial_action")) {
    c.initial_action =
        detail::get_number<double>(j.at("initial_action"), "initial_action");
  }
  if (j.contains("initial_n")) {
    c.initial_n =
        detail::get_number<std::int64_t>(j.at("initial_n"), "initial_n");
  }
  if (j.contains("seed")) {
    c.seed = detail::get_number<std::uint64_t>(j.at("seed"), "seed");
  }
  if (j.contains("record_stride")) {
    c.record_stride = detail::get_number<std::int64_t>(j.at("record_stride"),
                                                       "record_stride");
  }
  if (j.contains("tail_tol")) {
    c.tail_tol = detail::get_number<double>(j.at("tail_tol"), "tail_tol");
  }
  if (j.contains("edge_threshold")) {
    c.edge_threshold =
        detail::get_number<double>(j.at("edge_threshold"), "edge_threshold");
  }
  if (j.contains("convolution")) {
    c.convolution = detail::parse_enum(detail::convolution_names(),
                                       j.at("convolution"), "convolution");
  }
  if (j.contains("output")) {
    const Json& out = j.at("output");
    detail::reject_unknown_keys(out, "output.", {"path", "write_snapshot"});
    if (out.contains("path")) {
      if (!out.at("path").is_string()) {
        throw ConfigError("field 'output.path' must be a string");
      }
      c.output_path = out.at("path").get<std::string>();
    }
    if (out.contains("write_snapshot")) {
      if (!out.at("write_snapshot").is_boolean()) {
        throw ConfigError("field 'output.write_snapshot' must be a boolean");
      }
      c.write_snapshot = out.at("write_snapshot").get<bool>();
    }
  }

  // An explicit phase_mode is accepted but must agree with the regime.
  if (j.contains("system") && j.at("system").contains("phase_mode")) {
    const PhaseMode declared =
        detail::parse_enum(detail::phase_mode_names(),
                           j.at("system").at("phase_mode"), "system.phase_mode");
    if (declared != c.regime_phase_mode()) {
      throw ConfigError(
          "field 'system.phase_mode' contradicts the regime; drop it or match "
          "the regime's mode");
    }
  }

  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) {
  return to_json(c).dump(2) + "\n";
}

/// A base config plus named value grids; cells are the cross product.
struct SweepPlan {
  ExperimentConfig base;
  // Dotted config paths ("system.kick_strength", "meas_period", "seed")
  // mapped to the values each cell takes. Keys are applied in sorted order.
  std::vector<std::pair<std::string, std::vector<Json>>> grids;
  int max_concurrency = 4;
  std::string output_dir;

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& [key, values] : grids) n *= values.size();
    return n;
  }
};

inline SweepPlan parse_sweep_plan(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("plan is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("plan must be a JSON object");
  detail::reject_unknown_keys(
      j, "", {"base", "grids", "max_concurrency", "output_dir"});
  if (!j.contains("base")) throw ConfigError("plan is missing field 'base'");
  if (!j.contains("grids")) throw ConfigError("plan is missing field 'grids'");

  SweepPlan plan;
  plan.base = config_from_json(j.at("base"));
  if (!j.at("grids").is_object()) {
    throw ConfigError("field 'grids' must be an object of arrays");
  }
  std::map<std::string, std::vector<Json>> sorted;
  for (const auto& [key, values] : j.at("grids").items()) {
    if (!values.is_array() )
      throw ConfigError("grid '" + key + "' must be an array");
    sorted[key] = std::vector<Json>(values.begin(), values.end());
  }
  plan.grids.assign(sorted.begin(), sorted.end());
  if (j.contains("max_concurrency")) {
    plan.max_concurrency =
        detail::get_number<int>(j.at("max_concurrency"), "max_concurrency");
    if (plan.max_concurrency < 1) {
      throw ConfigError("field 'max_concurrency' must be >= 1");
    }
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) {
      throw ConfigError("field 'output_dir' must be a string");
    }
    plan.output_dir = j.at("output_dir").get<std::string>();
  }
  return plan;
}

/// Config for one sweep cell: grid values patched into the base, plus a
/// derived per-cell seed (unless the sweep itself varies the seed).
inline ExperimentConfig sweep_cell_config(const SweepPlan& plan,
                                          std::size_t cell_index) {
  Json patched = to_json(plan.base);
  std::size_t rest = cell_index;
  bool sweeps_seed = false;
  for (const auto& [key, values] : plan.grids) {
    const std::size_t pick = rest % values.size();
    rest /= values.size();
    std::string pointer = "/" + key;
    for (auto& ch : pointer) {
      if (ch == '.') ch = '/';
    }
    patched[Json::json_pointer(pointer)] = values[pick];
    if (key == "seed") sweeps_seed = true;
  }
  ExperimentConfig config = config_from_json(patched);
  if (!sweeps_seed) {
    config.seed = rng::hash3(plan.base.seed, rng::kSweepCellStream, cell_index);
  }
  config.output_path.clear();  // assigned by the sweep runner
  return config;
}

}  // namespace kicked
