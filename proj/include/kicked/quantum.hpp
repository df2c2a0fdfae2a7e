#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "kicked/bessel.hpp"
#include "kicked/errors.hpp"
#include "kicked/fft.hpp"
#include "kicked/system.hpp"

namespace kicked {

/// How the kick convolution is evaluated. Both paths agree to 1e-12
/// elementwise; direct is the default and is faster for localized states.
enum class ConvolutionMethod {
  kDirect,
  kFft,
};

/// Complex amplitude vector a_n on the action lattice, after `step` kicks.
struct AmplitudeState {
  ActionLattice lattice;
  std::vector<std::complex<double>> amplitudes;  // size lattice.size()
  std::int64_t step = 0;

  double norm_sq() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
  }
};

struct EvolutionOptions {
  ConvolutionMethod method = ConvolutionMethod::kDirect;
  double edge_threshold = 1e-8;
};

/// Basis state delta_{n,n0} at step 0.
inline AmplitudeState initial_delta_state(const ActionLattice& lattice,
                                          std::int64_t n0) {
  lattice.validate();
  if (!lattice.contains(n0)) {
    throw std::domain_error("initial site n0 = " + std::to_string(n0) +
                            " is off-lattice [" + std::to_string(lattice.n_min) +
                            ", " + std::to_string(lattice.n_max) + "]");
  }
  AmplitudeState state;
  state.lattice = lattice;
  state.amplitudes.assign(static_cast<std::size_t>(lattice.size()),
                          {0.0, 0.0});
  state.amplitudes[lattice.index_of(n0)] = {1.0, 0.0};
  state.step = 0;
  return state;
}

namespace detail {

/// Probability mass in the outer `band` sites of each lattice edge.
template <class Vec, class NormOf>
double edge_mass_of(const Vec& v, int band, NormOf norm_of) {
  const std::size_t n = v.size();
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(band), n);
  double mass = 0.0;
  for (std::size_t i = 0; i < b; ++i) mass += norm_of(v[i]);
  for (std::size_t i = n - b; i < n; ++i) mass += norm_of(v[i]);
  return mass;
}

inline void check_kernel_for_dynamics(const KickKernel& kernel,
                                      const ActionLattice& lattice) {
  if (kernel.tail_bound > 1e-12) {
    throw ConfigError("kernel tail_bound " + std::to_string(kernel.tail_bound) +
                      " too loose for dynamics (must be <= 1e-12)");
  }
  if (lattice.size() < 2 * static_cast<std::int64_t>(kernel.width())) {
    throw ConfigError("lattice size " + std::to_string(lattice.size()) +
                      " below twice the kernel width " +
                      std::to_string(kernel.width()) +
                      "; enlarge the lattice or lower K");
  }
}

/// Fail-fast edge policy shared by the quantum and rate maps.
template <class Vec, class NormOf>
void check_edge_leakage(const Vec& v, const ActionLattice& lattice,
                        const KickKernel& kernel, double threshold,
                        std::int64_t step, NormOf norm_of) {
  const double mass = edge_mass_of(v, kernel.half_width, norm_of);
  if (mass > threshold) {
    const std::int64_t ext = lattice.size() / 2;
    throw EdgeLeakageError(step, mass, lattice.n_min, lattice.n_max,
                           lattice.n_min - ext, lattice.n_max + ext);
  }
}

/// [lo, hi] index range of nonzero entries; {1, 0} when all zero.
template <class Vec>
std::pair<std::ptrdiff_t, std::ptrdiff_t> support_of(const Vec& v) {
  std::ptrdiff_t lo = 0, hi = static_cast<std::ptrdiff_t>(v.size()) - 1;
  while (lo <= hi && v[static_cast<std::size_t>(lo)] ==
                         typename Vec::value_type{}) {
    ++lo;
  }
  while (hi >= lo && v[static_cast<std::size_t>(hi)] ==
                         typename Vec::value_type{}) {
    --hi;
  }
  return {lo, hi};
}

/// out[i] = sum_{d=-M..M} row[d+M] * in[i+d], entries outside [0, size) zero.
/// Only the nonzero support of `in`, padded by M, is visited; the result is
/// bit-identical to the full sum because the skipped terms are exact zeros.
template <class Scalar>
void correlate_direct(const std::vector<std::complex<double>>& in,
                      const std::vector<Scalar>& row, int half_width,
                      std::vector<std::complex<double>>& out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
  out.assign(in.size(), {0.0, 0.0});
  const auto [lo, hi] = support_of(in);
  if (lo > hi) return;
  const std::ptrdiff_t m = half_width;
  const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, lo - m);
  const std::ptrdiff_t last = std::min<std::ptrdiff_t>(n - 1, hi + m);
  for (std::ptrdiff_t i = first; i <= last; ++i) {
    const std::ptrdiff_t d_lo = std::max(-m, -i);
    const std::ptrdiff_t d_hi = std::min(m, n - 1 - i);
    std::complex<double> acc{0.0, 0.0};
    for (std::ptrdiff_t d = d_lo; d <= d_hi; ++d) {
      acc += row[static_cast<std::size_t>(d + m)] *
             in[static_cast<std::size_t>(i + d)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
}

/// Same correlation through a zero-padded cyclic convolution.
template <class Scalar>
void correlate_fft(const std::vector<std::complex<double>>& in,
                   const std::vector<Scalar>& row, int half_width,
                   std::vector<std::complex<double>>& out) {
  const std::size_t n = in.size();
  const std::size_t m = static_cast<std::size_t>(half_width);
  const std::size_t p = next_pow2(n + 2 * m);

  std::vector<std::complex<double>> a(p, {0.0, 0.0});
  std::copy(in.begin(), in.end(), a.begin());

  // Correlation b_n = sum_d r_d a_{n+d} equals convolution with the flipped
  // row h_j = r_{-j}, stored with negative indices wrapped mod p.
  std::vector<std::complex<double>> h(p, {0.0, 0.0});
  for (int d = -half_width; d <= half_width; ++d) {
    const std::size_t idx = d <= 0 ? static_cast<std::size_t>(-d)
                                   : p - static_cast<std::size_t>(d);
    h[idx] = row[static_cast<std::size_t>(d + half_width)];
  }

  fft_radix2(a, false);
  fft_radix2(h, false);
  for (std::size_t i = 0; i < p; ++i) a[i] *= h[i];
  fft_radix2(a, true);

  out.assign(n, {0.0, 0.0});
  std::copy(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), out.begin());
}

}  // namespace detail

/// One kick of the amplitude map:
///   a'_n = e^{-i free_phase(n, step)} * sum_m a_m U_{m-n},
/// with the step counter advanced by one. Aborts on edge leakage before
/// touching the state.
inline AmplitudeState quantum_step(const AmplitudeState& state,
                                   const KickKernel& kernel,
                                   const KickedSystem& system,
                                   const EvolutionOptions& options = {}) {
  if (kernel.kick_strength != system.kick_strength) {
    throw ConfigError("kernel built for K = " +
                      std::to_string(kernel.kick_strength) +
                      " but system has K = " +
                      std::to_string(system.kick_strength));
  }
  detail::check_kernel_for_dynamics(kernel, state.lattice);
  detail::check_edge_leakage(state.amplitudes, state.lattice, kernel,
                             options.edge_threshold, state.step,
                             [](const std::complex<double>& a) {
                               return std::norm(a);
                             });

  AmplitudeState next;
  next.lattice = state.lattice;
  next.step = state.step + 1;

  // sum_m a_m U_{m-n} = sum_d U_d a_{n+d}: a correlation with the kernel row.
  if (system.convention == KickPhaseConvention::kPaperLiteral) {
    if (options.method == ConvolutionMethod::kDirect) {
      detail::correlate_direct(state.amplitudes, kernel.values,
                               kernel.half_width, next.amplitudes);
    } else {
      detail::correlate_fft(state.amplitudes, kernel.values,
                            kernel.half_width, next.amplitudes);
    }
  } else {
    const auto row = unitary_row(kernel, system.convention);
    if (options.method == ConvolutionMethod::kDirect) {
      detail::correlate_direct(state.amplitudes, row, kernel.half_width,
                               next.amplitudes);
    } else {
      detail::correlate_fft(state.amplitudes, row, kernel.half_width,
                            next.amplitudes);
    }
  }

  for (std::size_t i = 0; i < next.amplitudes.size(); ++i) {
    if (next.amplitudes[i] == std::complex<double>{}) continue;
    const double phi =
        free_phase(system, state.lattice.site(i), state.step);
    next.amplitudes[i] *= std::complex<double>(std::cos(phi), -std::sin(phi));
  }
  return next;
}

/// Apply `steps` kicks, feeding each new state (and the initial one) to the
/// recorder. Edge-leakage errors carry the step index at failure.
template <class Recorder>
AmplitudeState evolve_quantum(AmplitudeState state, const KickKernel& kernel,
                              const KickedSystem& system, std::int64_t steps,
                              Recorder& recorder,
                              const EvolutionOptions& options = {}) {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  recorder.record(state);
  for (std::int64_t i = 0; i < steps; ++i) {
    state = quantum_step(state, kernel, system, options);
    recorder.record(state);
  }
  return state;
}

}  // namespace kicked
