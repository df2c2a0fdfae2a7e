#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kicked/classical.hpp"
#include "kicked/errors.hpp"
#include "kicked/measured.hpp"
#include "kicked/quantum.hpp"
#include "kicked/system.hpp"

namespace kicked {

enum class RegimeTag {
  kClassical,
  kQuantumDeterministic,
  kQuantumStaticRandom,
  kQuantumPerStepRandom,
  kRateEquation,
  kMonteCarloMeasured,
};

struct Moments {
  double mean_n = 0.0;
  double var_n = 0.0;
  double energy = 0.0;
  double participation_ratio = 1.0;
  double edge_mass = 0.0;
};

/// Standard diagnostics of a normalized distribution on the lattice.
/// `edge_band` is the width (in sites) of the outer bands counted as edge
/// mass, normally the kernel half-width.
inline Moments moments(const std::vector<double>& probs,
                       const ActionLattice& lattice, const KickedSystem& sys,
                       int edge_band) {
  Moments m;
  double total = 0.0, mean = 0.0, second = 0.0, energy = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const double n = static_cast<double>(lattice.site(i));
    total += p;
    mean += n * p;
    second += n * n * p;
    energy += h0_energy(sys, n) * p;
    sq += p * p;
  }
  mean /= total;
  m.mean_n = mean;
  m.var_n = second / total - mean * mean;
  if (m.var_n < 0.0) m.var_n = 0.0;  // rounding guard near a point mass
  m.energy = energy / total;
  m.participation_ratio = (total * total) / sq;
  const std::size_t band =
      std::min(probs.size() / 2, static_cast<std::size_t>(std::max(edge_band, 0)));
  double edge = 0.0;
  for (std::size_t i = 0; i < band; ++i) edge += probs[i];
  for (std::size_t i = probs.size() - band; i < probs.size(); ++i) {
    edge += probs[i];
  }
  m.edge_mass = edge / total;
  return m;
}

inline std::vector<double> probabilities_of(const AmplitudeState& state) {
  std::vector<double> p(state.amplitudes.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::norm(state.amplitudes[i]);
  }
  return p;
}

inline Moments moments(const AmplitudeState& state, const KickedSystem& sys,
                       int edge_band) {
  return moments(probabilities_of(state), state.lattice, sys, edge_band);
}

inline Moments moments(const ProbabilityState& state, const KickedSystem& sys,
                       int edge_band) {
  return moments(state.probs, state.lattice, sys, edge_band);
}

struct ObservableRow {
  std::int64_t step = 0;
  double mean_n = 0.0;
  double var_n = 0.0;
  double energy = 0.0;
  double participation_ratio = 0.0;
  double edge_mass = 0.0;
};

/// Time series of recorded diagnostics for one run.
struct ObservableSeries {
  RegimeTag regime = RegimeTag::kQuantumDeterministic;
  std::vector<ObservableRow> rows;

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (i > 0 && rows[i - 1].step >= r.step) {
        throw AnalysisError("series steps not strictly increasing at row " +
                            std::to_string(i));
      }
      if (std::isfinite(r.var_n) && r.var_n < 0.0) {
        throw AnalysisError("negative var_n at step " + std::to_string(r.step));
      }
      if (std::isfinite(r.participation_ratio) &&
          r.participation_ratio < 1.0 - 1e-9) {
        throw AnalysisError("participation_ratio < 1 at step " +
                            std::to_string(r.step));
      }
      if (std::isfinite(r.edge_mass) &&
          (r.edge_mass < 0.0 || r.edge_mass > 1.0 + 1e-12)) {
        throw AnalysisError("edge_mass outside [0, 1] at step " +
                            std::to_string(r.step));
      }
    }
  }
};

/// Records lattice-state diagnostics every `stride` steps (step 0 included).
class SeriesRecorder {
 public:
  SeriesRecorder(RegimeTag regime, const KickedSystem& sys, int edge_band,
                 std::int64_t stride)
      : sys_(sys), edge_band_(edge_band), stride_(stride > 0 ? stride : 1) {
    series_.regime = regime;
  }

  template <class State>
  void record(const State& state) {
    if (state.step % stride_ != 0) return;
    const Moments m = moments(state, sys_, edge_band_);
    series_.rows.push_back({state.step, m.mean_n, m.var_n, m.energy,
                            m.participation_ratio, m.edge_mass});
  }

  const ObservableSeries& series() const { return series_; }
  ObservableSeries take() { return std::move(series_); }

 private:
  KickedSystem sys_;
  int edge_band_;
  std::int64_t stride_;
  ObservableSeries series_;
};

/// Classical counterpart: action moments of the ensemble. Lattice-only
/// diagnostics (participation ratio, edge mass) are recorded as NaN.
class ClassicalRecorder {
 public:
  explicit ClassicalRecorder(std::int64_t stride)
      : stride_(stride > 0 ? stride : 1) {
    series_.regime = RegimeTag::kClassical;
  }

  void record(const ClassicalEnsemble& ens, const KickedSystem& sys) {
    if (ens.step % stride_ != 0) return;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    series_.rows.push_back({ens.step, ens.action_mean(),
                            ens.action_variance(), ens.energy_mean(sys), nan,
                            nan});
  }

  const ObservableSeries& series() const { return series_; }
  ObservableSeries take() { return std::move(series_); }

 private:
  std::int64_t stride_;
  ObservableSeries series_;
};

struct NullRecorder {
  template <class... Args>
  void record(const Args&...) {}
};

/// Default recording stride: every step up to 1e3 steps, then thinned so at
/// most ~1e3 rows are kept.
inline std::int64_t auto_record_stride(std::int64_t steps) {
  if (steps <= 1000) return 1;
  return (steps + 999) / 1000;
}

}  // namespace kicked
