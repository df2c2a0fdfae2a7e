#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "kicked/errors.hpp"
#include "kicked/rng.hpp"

namespace kicked {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Unperturbed Hamiltonian H0(I). Units: hbar = m = e = 1 throughout.
enum class H0Kind {
  kRotor,             // H0(I) = I^2 / 2
  kLinearOscillator,  // H0(I) = omega * I
  kPowerLaw,          // H0(I) = c * I^p, p > 0
};

enum class PhaseMode {
  kDeterministic,  // free phase H0(n) * T
  kStaticRandom,   // 2*pi*g(n), g fixed across steps
  kPerStepRandom,  // 2*pi*g(n, step), fresh every step
};

// The kernel of the kick e^{-iK cos(theta)}. PaperLiteral keeps the row real,
// J_{m-n}(K); PhysicalKick carries the extra (-i)^{m-n} of the plane-wave
// expansion. Squared entries are identical, so all measured statistics agree.
enum class KickPhaseConvention {
  kPaperLiteral,
  kPhysicalKick,
};

/// Problem definition shared by every dynamical regime. Immutable value type.
struct KickedSystem {
  H0Kind hamiltonian = H0Kind::kRotor;
  double omega = 1.0;       // linear-oscillator frequency
  double power_coeff = 1.0; // power-law c
  double power_exp = 2.0;   // power-law p, > 0
  double kick_strength = 5.0;  // K >= 0
  double period = 1.0;         // T > 0
  PhaseMode phase_mode = PhaseMode::kDeterministic;
  std::uint64_t phase_seed = 0;
  KickPhaseConvention convention = KickPhaseConvention::kPaperLiteral;

  bool operator==(const KickedSystem&) const = default;

  void validate() const {
    if (!(kick_strength >= 0.0)) {
      throw ConfigError("kick_strength must be >= 0, got " +
                        std::to_string(kick_strength));
    }
    if (!(period > 0.0)) {
      throw ConfigError("period must be > 0, got " + std::to_string(period));
    }
    if (hamiltonian == H0Kind::kPowerLaw && !(power_exp > 0.0)) {
      throw ConfigError("power_exp must be > 0, got " +
                        std::to_string(power_exp));
    }
  }
};

/// Finite window [n_min, n_max] of the action quantum number n.
struct ActionLattice {
  std::int64_t n_min = -2048;
  std::int64_t n_max = 2048;

  std::int64_t size() const { return n_max - n_min + 1; }
  bool contains(std::int64_t n) const { return n >= n_min && n <= n_max; }
  std::size_t index_of(std::int64_t n) const {
    return static_cast<std::size_t>(n - n_min);
  }
  std::int64_t site(std::size_t index) const {
    return n_min + static_cast<std::int64_t>(index);
  }

  void validate() const {
    if (n_min > 0 || n_max < 0) {
      throw ConfigError("lattice must contain n = 0: got [" +
                        std::to_string(n_min) + ", " + std::to_string(n_max) +
                        "]");
    }
    if (size() < 2) {
      throw ConfigError("lattice size must be >= 2");
    }
  }

  bool operator==(const ActionLattice&) const = default;
};

namespace detail {

inline bool is_integer(double x) { return x == std::floor(x); }

}  // namespace detail

/// H0 evaluated at action I.
inline double h0_energy(const KickedSystem& sys, double action) {
  switch (sys.hamiltonian) {
    case H0Kind::kRotor:
      return 0.5 * action * action;
    case H0Kind::kLinearOscillator:
      return sys.omega * action;
    case H0Kind::kPowerLaw:
      if (action < 0.0 && !detail::is_integer(sys.power_exp)) {
        throw std::domain_error(
            "power-law H0 undefined for negative action with non-integer "
            "exponent p = " +
            std::to_string(sys.power_exp));
      }
      return sys.power_coeff * std::pow(action, sys.power_exp);
  }
  throw ConfigError("unknown Hamiltonian kind");
}

/// Intrinsic frequency Omega = dH0/dI at action I.
inline double omega(const KickedSystem& sys, double action) {
  switch (sys.hamiltonian) {
    case H0Kind::kRotor:
      return action;
    case H0Kind::kLinearOscillator:
      return sys.omega;
    case H0Kind::kPowerLaw: {
      const double p = sys.power_exp;
      if (action == 0.0 && p < 1.0) {
        throw std::domain_error(
            "power-law dH0/dI singular at I = 0 for p < 1");
      }
      if (action < 0.0 && !detail::is_integer(p)) {
        throw std::domain_error(
            "power-law dH0/dI undefined for negative action with non-integer "
            "exponent p = " +
            std::to_string(p));
      }
      return sys.power_coeff * p * std::pow(action, p - 1.0);
    }
  }
  throw ConfigError("unknown Hamiltonian kind");
}

/// Reduce an angle into [0, 2*pi).
inline double reduce_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Free-rotation phase accumulated between kicks, in [0, 2*pi).
///
/// Deterministic mode returns H0(n)*T mod 2*pi; its independence of `step`
/// is what makes the phases only pseudorandom in n and produces localization.
/// The random modes replace it by 2*pi*g(n) (fixed) or 2*pi*g(n, step)
/// (fresh per kick), reproducible bit-exactly from the seed.
inline double free_phase(const KickedSystem& sys, std::int64_t n,
                         std::int64_t step) {
  switch (sys.phase_mode) {
    case PhaseMode::kDeterministic:
      return reduce_angle(h0_energy(sys, static_cast<double>(n)) * sys.period);
    case PhaseMode::kStaticRandom:
      return kTwoPi * rng::uniform_unit(sys.phase_seed, rng::kStaticPhaseStream,
                                        static_cast<std::uint64_t>(n));
    case PhaseMode::kPerStepRandom:
      return kTwoPi *
             rng::to_unit(rng::hash3(
                 rng::hash2(sys.phase_seed, rng::kPerStepPhaseStream),
                 static_cast<std::uint64_t>(n),
                 static_cast<std::uint64_t>(step)));
  }
  throw ConfigError("unknown phase mode");
}

}  // namespace kicked
