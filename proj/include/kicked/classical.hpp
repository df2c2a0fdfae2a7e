#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kicked/errors.hpp"
#include "kicked/rng.hpp"
#include "kicked/system.hpp"

namespace kicked {

/// Ensemble of (I, theta) phase-space points advanced by the kick map.
struct ClassicalEnsemble {
  std::vector<double> action;  // I, unbounded
  std::vector<double> angle;   // theta in [0, 2*pi)
  std::int64_t step = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return action.size(); }

  double action_mean() const {
    double s = 0.0;
    for (double v : action) s += v;
    return s / static_cast<double>(action.size());
  }

  double action_variance() const {
    const double mu = action_mean();
    double s = 0.0;
    for (double v : action) s += (v - mu) * (v - mu);
    return s / static_cast<double>(action.size());
  }

  double energy_mean(const KickedSystem& sys) const {
    double s = 0.0;
    for (double v : action) s += h0_energy(sys, v);
    return s / static_cast<double>(action.size());
  }
};

/// All points at action I0, angles i.i.d. uniform on [0, 2*pi).
inline ClassicalEnsemble init_ensemble(std::size_t count, double initial_action,
                                       std::uint64_t seed) {
  if (count < 1) throw ConfigError("ensemble count must be >= 1");
  ClassicalEnsemble ens;
  ens.seed = seed;
  ens.action.assign(count, initial_action);
  ens.angle.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ens.angle[i] =
        kTwoPi * rng::uniform_unit(seed, rng::kClassicalInitStream, i);
  }
  return ens;
}

/// One period of the classical map, applied to every point:
///   I_{j+1}     = I_j + K sin(theta_j)
///   theta_{j+1} = theta_j + Omega(I_{j+1}) T      (new action, then angle)
/// The angle is reduced into [0, 2*pi) after each step.
inline void classical_step_inplace(ClassicalEnsemble& ens,
                                   const KickedSystem& sys) {
  const double k = sys.kick_strength;
  const double t = sys.period;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double new_action = ens.action[i] + k * std::sin(ens.angle[i]);
    double freq;
    try {
      freq = omega(sys, new_action);
    } catch (const std::domain_error& e) {
      throw DynamicsError("classical step " + std::to_string(ens.step + 1) +
                          ", point " + std::to_string(i) + ": " + e.what());
    }
    ens.action[i] = new_action;
    ens.angle[i] = reduce_angle(ens.angle[i] + freq * t);
  }
  ++ens.step;
}

inline ClassicalEnsemble classical_step(const ClassicalEnsemble& ens,
                                        const KickedSystem& sys) {
  ClassicalEnsemble next = ens;
  classical_step_inplace(next, sys);
  return next;
}

/// Advance `steps` periods, feeding the recorder after each (and initially).
template <class Recorder>
void evolve_classical(ClassicalEnsemble& ens, const KickedSystem& sys,
                      std::int64_t steps, Recorder& recorder) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  recorder.record(ens, sys);
  for (std::int64_t i = 0; i < steps; ++i) {
    classical_step_inplace(ens, sys);
    recorder.record(ens, sys);
  }
}

}  // namespace kicked
