#include "kicked/classical.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "kicked/analysis.hpp"

using kicked::ClassicalEnsemble;
using kicked::classical_step;
using kicked::classical_step_inplace;
using kicked::H0Kind;
using kicked::init_ensemble;
using kicked::KickedSystem;
using kicked::kTwoPi;

namespace {

KickedSystem rotor(double k, double t = 1.0) {
  KickedSystem sys;
  sys.hamiltonian = H0Kind::kRotor;
  sys.kick_strength = k;
  sys.period = t;
  return sys;
}

std::vector<std::pair<std::int64_t, double>> variance_series(
    ClassicalEnsemble& ens, const KickedSystem& sys, std::int64_t steps) {
  std::vector<std::pair<std::int64_t, double>> out;
  out.emplace_back(ens.step, ens.action_variance());
  for (std::int64_t j = 0; j < steps; ++j) {
    classical_step_inplace(ens, sys);
    out.emplace_back(ens.step, ens.action_variance());
  }
  return out;
}

}  // namespace

TEST(InitEnsemble, SpecExamples) {
  const ClassicalEnsemble ens = init_ensemble(1000, 0.0, 11);
  EXPECT_EQ(ens.size(), 1000u);
  EXPECT_EQ(ens.action_variance(), 0.0);
  EXPECT_EQ(ens.action_mean(), 0.0);

  double angle_mean = 0.0;
  for (double th : ens.angle) {
    EXPECT_GE(th, 0.0);
    EXPECT_LT(th, kTwoPi);
    angle_mean += th;
  }
  angle_mean /= static_cast<double>(ens.size());
  const double four_sigma = 4.0 * kTwoPi / std::sqrt(12.0 * 1000.0);
  EXPECT_NEAR(angle_mean, kTwoPi / 2.0, four_sigma);

  const ClassicalEnsemble again = init_ensemble(1000, 0.0, 11);
  EXPECT_EQ(ens.angle, again.angle);

  EXPECT_THROW(init_ensemble(0, 0.0, 1), kicked::ConfigError);
}

TEST(ClassicalStep, HandComputedPoint) {
  ClassicalEnsemble ens;
  ens.action = {0.0};
  ens.angle = {kTwoPi / 4.0};  // pi/2
  const KickedSystem sys = rotor(5.0, 1.0);
  classical_step_inplace(ens, sys);
  EXPECT_NEAR(ens.action[0], 5.0, 1e-14);  // 5 sin(pi/2)
  EXPECT_NEAR(ens.angle[0], kTwoPi / 4.0 + 5.0 - kTwoPi, 1e-14);
  EXPECT_EQ(ens.step, 1);
}

// The angle update must see the already-updated action; using the old action
// gives a measurably different trajectory.
TEST(ClassicalStep, UpdateOrderIsNewActionFirst) {
  const double i0 = 1.0, th0 = 1.0, k = 2.0, t = 0.5;
  ClassicalEnsemble ens;
  ens.action = {i0};
  ens.angle = {th0};
  classical_step_inplace(ens, rotor(k, t));

  const double i1 = i0 + k * std::sin(th0);
  EXPECT_EQ(ens.action[0], i1);
  EXPECT_EQ(ens.angle[0], kicked::reduce_angle(th0 + i1 * t));

  const double wrong = kicked::reduce_angle(th0 + i0 * t);
  EXPECT_NE(ens.angle[0], wrong);
}

TEST(ClassicalStep, ZeroKickFreeRotation) {
  ClassicalEnsemble ens = init_ensemble(50, 2.0, 3);
  const std::vector<double> before = ens.angle;
  const KickedSystem sys = rotor(0.0, 0.25);
  classical_step_inplace(ens, sys);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    EXPECT_EQ(ens.action[i], 2.0);
    EXPECT_NEAR(ens.angle[i], kicked::reduce_angle(before[i] + 2.0 * 0.25),
                1e-15);
  }
}

TEST(ClassicalStep, PureFunctionalWrapper) {
  const ClassicalEnsemble ens = init_ensemble(10, 0.0, 5);
  const KickedSystem sys = rotor(3.0);
  const ClassicalEnsemble next = classical_step(ens, sys);
  EXPECT_EQ(ens.step, 0);
  EXPECT_EQ(next.step, 1);
  EXPECT_NE(ens.action, next.action);
}

TEST(ClassicalStep, DomainErrorNamesPoint) {
  KickedSystem sys;
  sys.hamiltonian = H0Kind::kPowerLaw;
  sys.power_exp = 0.5;
  sys.kick_strength = 0.0;  // keeps action at 0, where dH0/dI blows up
  sys.period = 1.0;
  ClassicalEnsemble ens;
  ens.action = {1.0, 0.0};
  ens.angle = {0.0, 0.0};
  try {
    classical_step_inplace(ens, sys);
    FAIL() << "expected DynamicsError";
  } catch (const kicked::DynamicsError& e) {
    EXPECT_NE(std::string(e.what()).find("point 1"), std::string::npos);
  }
}

TEST(ClassicalStep, DeterministicVarianceSeries) {
  const KickedSystem sys = rotor(5.0);
  ClassicalEnsemble a = init_ensemble(5000, 0.0, 99);
  ClassicalEnsemble b = init_ensemble(5000, 0.0, 99);
  const auto sa = variance_series(a, sys, 20);
  const auto sb = variance_series(b, sys, 20);
  EXPECT_EQ(sa, sb);
}

// Var(I) ~ (K^2/2) j in the quasilinear regime; 1e5 points, 10% tolerance.
TEST(ClassicalStep, EarlyVarianceGrowth) {
  const double k = 5.0;
  const KickedSystem sys = rotor(k);
  ClassicalEnsemble ens = init_ensemble(100000, 0.0, 7);
  const auto series = variance_series(ens, sys, 12);
  for (std::int64_t j : {3, 6, 9, 12}) {
    const double expected = (k * k / 2.0) * static_cast<double>(j);
    EXPECT_NEAR(series[static_cast<std::size_t>(j)].second, expected,
                0.10 * expected)
        << "step " << j;
  }
}

TEST(DiffusionEstimate, ExactSyntheticLine) {
  std::vector<std::pair<std::int64_t, double>> series;
  const double b = 6.25;
  for (std::int64_t j = 0; j <= 120; ++j) {
    series.emplace_back(j, 2.0 * b * static_cast<double>(j));
  }
  const auto est = kicked::classical_diffusion_estimate(series, 1.0);
  EXPECT_NEAR(est.coefficient, b, 1e-12);
  EXPECT_NEAR(est.stderr_b, 0.0, 1e-12);
}

TEST(DiffusionEstimate, ZeroKickIsZero) {
  const KickedSystem sys = rotor(0.0);
  ClassicalEnsemble ens = init_ensemble(2000, 0.0, 1);
  const auto series = variance_series(ens, sys, 120);
  const auto est = kicked::classical_diffusion_estimate(series, 1.0);
  EXPECT_EQ(est.coefficient, 0.0);
}

TEST(DiffusionEstimate, TooFewPointsRejected) {
  std::vector<std::pair<std::int64_t, double>> series;
  for (std::int64_t j = 0; j <= 15; ++j) {
    series.emplace_back(j, static_cast<double>(j));
  }
  EXPECT_THROW(kicked::classical_diffusion_estimate(series, 1.0,
                                                    kicked::FitWindow{0, 15}),
               kicked::AnalysisError);
}

// B_est tracks K^2/4T across the strongly chaotic regime (25% band covers
// the known oscillatory corrections to the quasilinear estimate).
TEST(DiffusionEstimate, TracksQuasilinearAcrossK) {
  for (double k : {5.0, 8.0, 10.0}) {
    const KickedSystem sys = rotor(k, 1.0);
    ClassicalEnsemble ens = init_ensemble(100000, 0.0, 2024);
    const auto series = variance_series(ens, sys, 100);
    const auto est = kicked::classical_diffusion_estimate(series, 1.0,
                                                          kicked::FitWindow{5, 100});
    const double quasilinear = k * k / 4.0;
    EXPECT_NEAR(est.coefficient, quasilinear, 0.25 * quasilinear) << "K=" << k;
  }
}
