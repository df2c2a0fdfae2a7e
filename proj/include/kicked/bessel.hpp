#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "kicked/errors.hpp"
#include "kicked/system.hpp"

namespace kicked {

/// Truncated row of Bessel values J_m(K), m = -half_width..half_width,
/// with a certified bound on the squared mass left outside the window.
/// Source of both the unitary kick kernel and the stochastic kernel.
struct KickKernel {
  double kick_strength = 0.0;  // K
  int half_width = 0;          // M
  std::vector<double> values;  // J_m(K), size 2M+1, index m + M
  double tail_bound = 0.0;     // certified bound on sum_{|m|>M} J_m(K)^2

  double at(int m) const {
    return values[static_cast<std::size_t>(m + half_width)];
  }
  int width() const { return 2 * half_width + 1; }
};

namespace detail {

// Buffer limit for the downward recurrence (~128 MB of doubles). Anything
// larger is almost certainly a mistyped K.
inline constexpr std::size_t kMaxRecurrenceLength = std::size_t{1} << 24;

}  // namespace detail

namespace detail {

struct MillerRun {
  std::vector<double> values;  // normalized J_m for m = 0..trial_m
  double top_tail = 0.0;       // certified bound on the squared mass above
};

/// Downward (Miller) recurrence J_{m-1} = (2m/K) J_m - J_{m+1}, seeded with
/// an arbitrary tiny value well above trial_m. Upward recurrence is unstable
/// for m > K; downward is self-correcting, the seed's contamination by the
/// dominant solution dies off over the start margin. The run is normalized
/// with J_0 + 2 sum_{k>=1} J_{2k} = 1. The squared mass above trial_m is
/// bounded by a geometric majorant from the last two values, with a
/// conservative factor 10.
inline MillerRun miller_run(double K, int trial_m) {
  const int start =
      trial_m + static_cast<int>(std::ceil(std::sqrt(40.0 * trial_m))) + 8;
  if (static_cast<std::size_t>(start) + 2 > kMaxRecurrenceLength) {
    throw ResourceError("kick kernel for K = " + std::to_string(K) +
                        " needs a recurrence of length " +
                        std::to_string(start) + ", above the build limit " +
                        std::to_string(kMaxRecurrenceLength));
  }

  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[static_cast<std::size_t>(start)] = 1e-30;
  const double two_over_k = 2.0 / K;
  const double rescale_limit = 1e270;
  for (int m = start; m >= 1; --m) {
    j[static_cast<std::size_t>(m) - 1] =
        two_over_k * m * j[static_cast<std::size_t>(m)] -
        j[static_cast<std::size_t>(m) + 1];
    if (std::abs(j[static_cast<std::size_t>(m) - 1]) > rescale_limit) {
      for (int i = m - 1; i <= start + 1; ++i) {
        j[static_cast<std::size_t>(i)] /= rescale_limit;
      }
    }
  }

  double norm = j[0];
  for (int m = 2; m <= start; m += 2) {
    norm += 2.0 * j[static_cast<std::size_t>(m)];
  }

  MillerRun run;
  run.values.resize(static_cast<std::size_t>(trial_m) + 1);
  for (int m = 0; m <= trial_m; ++m) {
    run.values[static_cast<std::size_t>(m)] =
        j[static_cast<std::size_t>(m)] / norm;
  }

  const double top = std::abs(run.values[static_cast<std::size_t>(trial_m)]);
  const double prev =
      std::abs(run.values[static_cast<std::size_t>(trial_m) - 1]);
  if (top > 0.0 && prev > 0.0) {
    const double r2 = (top / prev) * (top / prev);
    if (r2 >= 0.5) {
      throw ResourceError("kick kernel tail not decaying at half-width " +
                          std::to_string(trial_m) + " for K = " +
                          std::to_string(K));
    }
    run.top_tail = 10.0 * 2.0 * top * top * r2 / (1.0 - r2);
  }
  return run;
}

}  // namespace detail

/// Build the kick kernel for strength K with tail mass certified <= tail_tol.
/// The trial half-width starts near K + 12 + 8 K^{1/3} and grows until the
/// certified tail meets tail_tol; the window is then shrunk to the smallest
/// half-width that still meets it.
inline KickKernel build_kick_kernel(double K, double tail_tol = 1e-28) {
  if (!(K >= 0.0)) {
    throw ConfigError("kick strength K must be >= 0, got " +
                      std::to_string(K));
  }
  if (!(tail_tol > 0.0) || tail_tol > 1e-8) {
    throw ConfigError("tail_tol must be in (0, 1e-8], got " +
                      std::to_string(tail_tol));
  }

  KickKernel kernel;
  kernel.kick_strength = K;

  if (K == 0.0) {
    // J_m(0) = delta_{m,0}: no kick means the identity map.
    kernel.half_width = 0;
    kernel.values = {1.0};
    kernel.tail_bound = 0.0;
    return kernel;
  }

  const int base_m =
      static_cast<int>(std::ceil(K + 12.0 + 8.0 * std::cbrt(K)));
  detail::MillerRun run;
  int trial_m = base_m;
  for (;; trial_m += base_m / 2 + 16) {
    run = detail::miller_run(K, trial_m);
    if (run.top_tail <= tail_tol) break;
  }

  // Shrink to the smallest half-width still meeting tail_tol.
  int half = trial_m;
  double tail = run.top_tail;
  while (half > 0) {
    const double v = run.values[static_cast<std::size_t>(half)];
    const double candidate = tail + 2.0 * v * v;
    if (candidate > tail_tol) break;
    tail = candidate;
    --half;
  }

  kernel.half_width = half;
  kernel.tail_bound = tail;
  kernel.values.resize(static_cast<std::size_t>(2 * half + 1));
  for (int m = 0; m <= half; ++m) {
    const double v = run.values[static_cast<std::size_t>(m)];
    kernel.values[static_cast<std::size_t>(half + m)] = v;
    // parity J_{-m} = (-1)^m J_m, exact as stored
    kernel.values[static_cast<std::size_t>(half - m)] =
        (m % 2 == 0) ? v : -v;
  }
  return kernel;
}

/// One row of the unitary kick operator, U_m for m = -M..M.
inline std::vector<std::complex<double>> unitary_row(
    const KickKernel& kernel,
    KickPhaseConvention convention = KickPhaseConvention::kPaperLiteral) {
  std::vector<std::complex<double>> row(kernel.values.size());
  if (convention == KickPhaseConvention::kPaperLiteral) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      row[i] = kernel.values[i];
    }
    return row;
  }
  // PhysicalKick: multiply each entry by (-i)^m.
  for (int m = -kernel.half_width; m <= kernel.half_width; ++m) {
    const double v = kernel.at(m);
    switch (((m % 4) + 4) % 4) {
      case 0: row[static_cast<std::size_t>(m + kernel.half_width)] = {v, 0.0}; break;
      case 1: row[static_cast<std::size_t>(m + kernel.half_width)] = {0.0, -v}; break;
      case 2: row[static_cast<std::size_t>(m + kernel.half_width)] = {-v, 0.0}; break;
      default: row[static_cast<std::size_t>(m + kernel.half_width)] = {0.0, v}; break;
    }
  }
  return row;
}

/// Transition probabilities p_m = J_m(K)^2; a doubly stochastic row.
inline std::vector<double> stochastic_row(const KickKernel& kernel) {
  std::vector<double> row(kernel.values.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    row[i] = kernel.values[i] * kernel.values[i];
  }
  return row;
}

}  // namespace kicked
