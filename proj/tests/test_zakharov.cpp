#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "wwlab/fit.hpp"
#include "wwlab/zakharov.hpp"

namespace {

using namespace wwlab;
using namespace wwlab::testing;
using zakharov::WaveState;
using zakharov::ZakharovSystem;

constexpr double kGravity = 9.81;

zakharov::WaveParams small_params() {
  zakharov::WaveParams p;
  p.nz = 16;
  return p;
}

WaveState rest(int n) { return {RealVec(n, 0.0), RealVec(n, 0.0), 0.0}; }

WaveState shifted(const WaveState& s, int by) {
  const int n = static_cast<int>(s.eta.size());
  WaveState out = s;
  for (int j = 0; j < n; ++j) {
    out.eta[(j + by) % n] = s.eta[j];
    out.psi[(j + by) % n] = s.psi[j];
  }
  return out;
}

double dispersion(int k) { return std::sqrt(kGravity * k * std::tanh(k)); }

TEST(Rhs, RestStateIsStationary) {
  const ZakharovSystem sys(64, small_params());
  const auto t = sys.rhs(rest(64));
  EXPECT_EQ(spectral::linf_norm(t.eta_t), 0.0);
  EXPECT_EQ(spectral::linf_norm(t.psi_t), 0.0);
}

TEST(Rhs, FlatSurfaceEtaTendencyIsTheFlatDtn) {
  const int n = 64, k = 3;
  const double eps = 1e-3;
  const ZakharovSystem sys(n, small_params());
  const auto t = sys.rhs({RealVec(n, 0.0), cosine(n, k, eps), 0.0});
  EXPECT_LT(max_abs_diff(t.eta_t, cosine(n, k, eps * k * std::tanh(k))), 1e-12);
  // The psi tendency is quadratic in eps.
  EXPECT_LT(spectral::linf_norm(t.psi_t), 10.0 * eps * eps * k * k);
}

TEST(Rhs, CommutesWithTranslationAndKeepsZeroMean) {
  const int n = 64;
  std::mt19937_64 rng(1);
  WaveState s{spectral::random_real_field(rng, n, 8, 2.0), spectral::random_real_field(rng, n, 8, 2.0), 0.0};
  for (double& v : s.eta) v *= 2e-3;
  for (double& v : s.psi) v *= 2e-3;
  const ZakharovSystem sys(n, small_params());
  const auto base = sys.rhs(s);
  const auto moved = sys.rhs(shifted(s, 5));
  const auto back = shifted({base.eta_t, base.psi_t, 0.0}, 5);
  EXPECT_LT(max_abs_diff(moved.eta_t, back.eta), 1e-12);
  EXPECT_LT(max_abs_diff(moved.psi_t, back.psi), 1e-12);
  EXPECT_LE(std::abs(spectral::mean(base.eta_t)), 1e-10);
}

TEST(Evolve, RestStateStaysAtRest) {
  const ZakharovSystem sys(64, small_params());
  const auto traj = zakharov::evolve(sys, rest(64), 0.05, 0.01);
  EXPECT_EQ(spectral::linf_norm(traj.snapshots.back().eta), 0.0);
  EXPECT_EQ(spectral::linf_norm(traj.snapshots.back().psi), 0.0);
  EXPECT_EQ(traj.energy.back(), 0.0);
}

TEST(Evolve, LinearWaveOscillatesAtTheDispersionFrequency) {
  const int n = 64, k = 4;
  const ZakharovSystem sys(n, small_params());
  const auto traj = zakharov::evolve(sys, zakharov::linear_waves(n, {{k, 1e-4, 0.0}}, kGravity, 1.0), 1.2, 0.01);
  std::vector<double> times, phases;
  double previous = 0.0, unwrap = 0.0;
  for (const auto& s : traj.snapshots) {
    const double phase = std::arg(spectral::spectrum(s.eta)[k]);
    if (!times.empty()) {
      double jump = phase - previous;
      while (jump > spectral::kPi) jump -= spectral::kTwoPi;
      while (jump < -spectral::kPi) jump += spectral::kTwoPi;
      unwrap += jump;
    }
    previous = phase;
    times.push_back(s.t);
    phases.push_back(unwrap);
  }
  const double omega = -fit_line(times, phases).slope;
  EXPECT_NEAR(omega / dispersion(k), 1.0, 5e-3);
}

TEST(Evolve, RungeKuttaForwardBackwardErrorIsHighOrder) {
  const int n = 64;
  const ZakharovSystem sys(n, small_params());
  const auto s = zakharov::linear_waves(n, {{3, 1e-4, 0.0}, {5, 5e-5, 1.0}}, kGravity, 1.0);
  std::vector<double> errors;
  for (double dt : {0.02, 0.01}) {
    const auto there = sys.step(s, dt);
    const auto back = sys.step(there, -dt);
    errors.push_back(max_abs_diff(back.eta, s.eta) + max_abs_diff(back.psi, s.psi));
  }
  EXPECT_GT(errors[1], 0.0);
  EXPECT_GT(errors[0] / errors[1], 16.0);
}

TEST(Evolve, ConservesEnergyAndMean) {
  const int n = 128;
  const ZakharovSystem sys(n, small_params());
  const auto traj =
      zakharov::evolve(sys, zakharov::linear_waves(n, {{2, 1e-3, 0.0}, {5, 5e-4, 0.3}}, kGravity, 1.0), 0.1, 1e-3, 10);
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    EXPECT_LE(std::abs(traj.energy[i] - traj.energy[0]) / traj.energy[0], 1e-6);
    EXPECT_LE(std::abs(traj.eta_mean[i] - traj.eta_mean[0]), 1e-10);
  }
  EXPECT_NEAR(traj.snapshots.back().t, 0.1, 1e-12);
}

TEST(Evolve, RejectsStepsAboveTheCflLimit) {
  const ZakharovSystem sys(64, small_params());
  const auto s = zakharov::linear_waves(64, {{3, 1e-3, 0.0}}, kGravity, 1.0);
  EXPECT_GT(sys.cfl_limit(RealVec(64, 0.0)), 0.01);
  EXPECT_THROW(zakharov::evolve(sys, s, 0.2, 0.1), std::runtime_error);
  EXPECT_THROW(zakharov::evolve(sys, s, 0.015, 0.01), std::invalid_argument);
}

TEST(Evolve, NonFiniteStateAbortsWithLastGoodState) {
  // Squaring psi_x overflows in the first stage; the step is far inside the CFL limit.
  const int n = 64;
  const ZakharovSystem sys(n, small_params());
  const WaveState s{RealVec(n, 0.0), cosine(n, 1.0, 1e155), 0.0};
  try {
    zakharov::evolve(sys, s, 1e-200, 1e-200);
    FAIL() << "expected a numerical abort";
  } catch (const zakharov::NumericalAbort& e) {
    EXPECT_EQ(e.last_good().t, 0.0);
    EXPECT_EQ(e.last_good().psi, s.psi);
  }
}

TEST(Energy, FlatOracleAndTranslationInvariance) {
  const int n = 64, k = 3;
  const double eps = 1e-3;
  const ZakharovSystem sys(n, small_params());
  EXPECT_EQ(sys.energy(rest(n)), 0.0);
  const WaveState s{RealVec(n, 0.0), cosine(n, k, eps), 0.0};
  EXPECT_NEAR(sys.energy(s), 0.5 * eps * eps * spectral::kPi * k * std::tanh(k), 1e-15);
  std::mt19937_64 rng(2);
  WaveState r{spectral::random_real_field(rng, n, 8, 2.0), spectral::random_real_field(rng, n, 8, 2.0), 0.0};
  for (double& v : r.eta) v *= 2e-3;
  EXPECT_NEAR(sys.energy(shifted(r, 7)), sys.energy(r), 1e-12 * sys.energy(r));
}

TEST(Traces, RestAndFlatSurface) {
  const int n = 64;
  const ZakharovSystem sys(n, small_params());
  const auto at_rest = sys.traces(rest(n));
  EXPECT_EQ(spectral::linf_norm(at_rest.V), 0.0);
  EXPECT_EQ(spectral::linf_norm(at_rest.B), 0.0);
  for (double a : at_rest.a) EXPECT_NEAR(a, kGravity, 1e-8);

  const auto psi = cosine(n, 4.0, 1e-3);
  const auto flat = sys.traces({RealVec(n, 0.0), psi, 0.0});
  EXPECT_LT(max_abs_diff(flat.B, sys.dtn(RealVec(n, 0.0), psi)), 1e-15);
  EXPECT_LT(max_abs_diff(flat.V, spectral::derivative(psi)), 1e-15);
}

TEST(Traces, VelocityDecompositionIsExact) {
  const int n = 128;
  std::mt19937_64 rng(3);
  WaveState s{spectral::random_real_field(rng, n, 10, 2.0), spectral::random_real_field(rng, n, 10, 2.0), 0.0};
  for (double& v : s.eta) v *= 3e-3;
  for (double& v : s.psi) v *= 3e-3;
  const ZakharovSystem sys(n, small_params());
  const auto tr = sys.traces(s, false);
  const auto eta_x = spectral::derivative(s.eta), psi_x = spectral::derivative(s.psi);
  double worst = 0.0;
  for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(psi_x[j] - tr.V[j] - tr.B[j] * eta_x[j]));
  EXPECT_LE(worst, 1e-12);
}

TEST(Identities, RestTrajectoryHasZeroResiduals) {
  const ZakharovSystem sys(64, small_params());
  const auto traj = zakharov::evolve(sys, rest(64), 0.02, 0.01);
  const auto r = zakharov::identity_residuals(sys, traj, 1, 1);
  EXPECT_LT(r.eta_to_b, 1e-12);
  EXPECT_LT(r.b_to_taylor, 1e-12);
  EXPECT_LT(r.v_to_taylor, 1e-12);
  EXPECT_LT(r.structure, 1e-12);
  EXPECT_LT(r.slope_transport, 1e-12);
  EXPECT_THROW(zakharov::identity_residuals(sys, traj, 0, 1), std::invalid_argument);
}

TEST(Identities, SecondOrderInTheDifferencingStep) {
  const int n = 128;
  const ZakharovSystem sys(n, small_params());
  const auto traj =
      zakharov::evolve(sys, zakharov::linear_waves(n, {{4, 1e-3, 0.0}, {7, 5e-4, 0.3}}, kGravity, 1.0), 0.008, 1e-3);
  const auto wide = zakharov::identity_residuals(sys, traj, 4, 2);
  const auto narrow = zakharov::identity_residuals(sys, traj, 4, 1);
  EXPECT_LT(narrow.eta_to_b, 5e-3);
  EXPECT_LT(narrow.b_to_taylor, 1e-2);
  EXPECT_NEAR(wide.eta_to_b / narrow.eta_to_b, 4.0, 0.2);
  EXPECT_NEAR(wide.b_to_taylor / narrow.b_to_taylor, 4.0, 0.2);
  EXPECT_NEAR(wide.v_to_taylor / narrow.v_to_taylor, 4.0, 0.2);
  EXPECT_NEAR(wide.slope_transport / narrow.slope_transport, 4.0, 0.2);
  EXPECT_GE(narrow.min_taylor, kGravity / 2.0);
}

}  // namespace
