#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kicked/bessel.hpp"
#include "kicked/errors.hpp"
#include "kicked/quantum.hpp"
#include "kicked/rng.hpp"
#include "kicked/system.hpp"

namespace kicked {

/// Occupation probabilities P_n on the action lattice, after `step` kicks.
struct ProbabilityState {
  ActionLattice lattice;
  std::vector<double> probs;
  std::int64_t step = 0;

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

inline ProbabilityState initial_delta_probability(const ActionLattice& lattice,
                                                  std::int64_t n0) {
  lattice.validate();
  if (!lattice.contains(n0)) {
    throw std::domain_error("initial site n0 = " + std::to_string(n0) +
                            " is off-lattice");
  }
  ProbabilityState state;
  state.lattice = lattice;
  state.probs.assign(static_cast<std::size_t>(lattice.size()), 0.0);
  state.probs[lattice.index_of(n0)] = 1.0;
  return state;
}

/// Instantaneous dephasing: P_n = |a_n|^2 at the same lattice and step.
/// The non-stochastic counterpart of measurement, used to hand a quantum
/// state to the rate map.
inline ProbabilityState dephase(const AmplitudeState& state) {
  ProbabilityState p;
  p.lattice = state.lattice;
  p.step = state.step;
  p.probs.resize(state.amplitudes.size());
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    p.probs[i] = std::norm(state.amplitudes[i]);
  }
  return p;
}

/// One period of the rate map P'_n = sum_m J^2_{m-n}(K) P_m: a convolution
/// with the doubly stochastic row, under the same fail-fast edge policy as
/// the quantum map.
inline ProbabilityState rate_step(const ProbabilityState& state,
                                  const KickKernel& kernel,
                                  double edge_threshold = 1e-8) {
  detail::check_kernel_for_dynamics(kernel, state.lattice);
  detail::check_edge_leakage(state.probs, state.lattice, kernel,
                             edge_threshold, state.step,
                             [](double p) { return p; });
  ProbabilityState next;
  next.lattice = state.lattice;
  next.step = state.step + 1;
  next.probs.assign(state.probs.size(), 0.0);

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(state.probs.size());
  const std::ptrdiff_t m = kernel.half_width;
  std::ptrdiff_t lo = 0, hi = n - 1;
  while (lo <= hi && state.probs[static_cast<std::size_t>(lo)] == 0.0) ++lo;
  while (hi >= lo && state.probs[static_cast<std::size_t>(hi)] == 0.0) --hi;
  if (lo > hi) return next;

  const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, lo - m);
  const std::ptrdiff_t last = std::min<std::ptrdiff_t>(n - 1, hi + m);
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    const std::ptrdiff_t d_lo = std::max(-m, -i);
    const std::ptrdiff_t d_hi = std::min(m, n - 1 - i);
    double acc = 0.0;
    for (std::ptrdiff_t d = d_lo; d <= d_hi; ++d) {
      const double j = kernel.values[static_cast<std::size_t>(d + m)];
      acc += j * j * state.probs[static_cast<std::size_t>(i + d)];
    }
    next.probs[static_cast<std::size_t>(i)] = acc;
  }
  return next;
}

template <class Recorder>
ProbabilityState evolve_rate(ProbabilityState state, const KickKernel& kernel,
                             std::int64_t steps, Recorder& recorder,
                             double edge_threshold = 1e-8) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  recorder.record(state);
  for (std::int64_t i = 0; i < steps; ++i) {
    state = rate_step(state, kernel, edge_threshold);
    recorder.record(state);
  }
  return state;
}

struct CollapseResult {
  std::int64_t outcome = 0;
  AmplitudeState state;
};

/// Projective energy measurement: samples n with probability |a_n|^2 (Born
/// rule) and collapses to the basis state at that n, step counter unchanged.
/// Consumes exactly one draw from the generator.
inline CollapseResult measure_collapse(const AmplitudeState& state,
                                       CounterRng& rng) {
  const double total = state.norm_sq();
  if (!(total > 0.0)) {
    throw std::logic_error("measure_collapse: state has zero norm");
  }
  const double target = rng.next_unit() * total;
  double cum = 0.0;
  std::size_t picked = state.amplitudes.size();
  std::size_t last_occupied = 0;
  for (std::size_t i = 0; i < state.amplitudes.size(); ++i) {
    const double p = std::norm(state.amplitudes[i]);
    if (p > 0.0) last_occupied = i;
    cum += p;
    if (cum > target) {
      picked = i;
      break;
    }
  }
  if (picked == state.amplitudes.size()) picked = last_occupied;

  CollapseResult result;
  result.outcome = state.lattice.site(picked);
  result.state.lattice = state.lattice;
  result.state.step = state.step;
  result.state.amplitudes.assign(state.amplitudes.size(), {0.0, 0.0});
  result.state.amplitudes[picked] = {1.0, 0.0};
  return result;
}

struct TrajectoryPoint {
  std::int64_t step = 0;
  std::int64_t outcome = 0;
};

struct NullMeasurementSink {
  void operator()(std::int64_t, std::int64_t) const {}
};

/// Watched evolution: repeat [meas_period kicks of the unitary map, then a
/// projective measurement]. meas_period = 1 is the fully watched regime;
/// larger values interpolate toward unwatched dynamics. Returns the
/// (step, outcome) record of every measurement. A trailing group of kicks
/// shorter than meas_period is left unmeasured.
template <class Sink = NullMeasurementSink>
std::vector<TrajectoryPoint> evolve_measured(
    AmplitudeState state, const KickKernel& kernel, const KickedSystem& system,
    std::int64_t steps, std::int64_t meas_period, CounterRng& rng,
    const EvolutionOptions& options = {}, Sink&& sink = Sink{}) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (meas_period < 1) throw ConfigError("meas_period must be >= 1");

  std::vector<TrajectoryPoint> trajectory;
  trajectory.reserve(static_cast<std::size_t>(steps / meas_period));
  for (std::int64_t j = 1; j <= steps; ++j) {
    state = quantum_step(state, kernel, system, options);
    if (j % meas_period == 0) {
      CollapseResult collapsed = measure_collapse(state, rng);
      state = std::move(collapsed.state);
      trajectory.push_back({j, collapsed.outcome});
      sink(j, collapsed.outcome);
    }
  }
  return trajectory;
}

}  // namespace kicked
