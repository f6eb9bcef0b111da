#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "wwlab/hamiltonian.hpp"

namespace {

using namespace wwlab;
using namespace wwlab::testing;
using hamiltonian::FrequencyConstants;
using hamiltonian::RayState;
using hamiltonian::TruncatedCoeffs;

constexpr double kGravity = 9.81;

RealVec sampled(int n, double (*f)(double)) {
  RealVec out(n);
  for (int j = 0; j < n; ++j) out[j] = f(spectral::kTwoPi * j / n);
  return out;
}

// Frozen smooth coefficients inside the c1 lambda = 8 truncation at lambda = 256.
TruncatedCoeffs wavy_coeffs(double velocity_amp = 0.3) {
  const int n = 128;
  RealVec v(n), a(n);
  for (int j = 0; j < n; ++j) {
    const double x = spectral::kTwoPi * j / n;
    v[j] = velocity_amp * std::sin(x) + 0.1 * std::cos(2.0 * x);
    a[j] = kGravity + 2.0 * std::cos(x) + 0.5 * std::sin(3.0 * x);
  }
  return TruncatedCoeffs::from_fields({0.0}, {v}, {a}, FrequencyConstants{});
}

RayState launch(double x, double xi) {
  RayState r;
  r.x = x;
  r.xi = xi;
  return r;
}

TEST(FrequencyConstants, Validation) {
  EXPECT_NO_THROW(FrequencyConstants{}.validate());
  EXPECT_THROW((FrequencyConstants{100.0, 0.25, 1.0 / 32.0}.validate()), std::invalid_argument);
  EXPECT_THROW((FrequencyConstants{256.0, 0.25, 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((FrequencyConstants{16.0, 0.25, 1.0 / 32.0}.validate()), std::invalid_argument);
  EXPECT_DOUBLE_EQ(FrequencyConstants{}.truncation(), 8.0);
}

TEST(TruncatedCoeffs, LowPassKeepsSmoothDataAndInterpolatesInTime) {
  const int n = 64;
  const RealVec v0 = sampled(n, [](double x) { return std::sin(x); });
  const RealVec v1 = sampled(n, [](double x) { return 3.0 * std::sin(x); });
  const RealVec a = RealVec(n, kGravity);
  const auto c = TruncatedCoeffs::from_fields({0.0, 0.1}, {v0, v1}, {a, a}, FrequencyConstants{});
  const auto mid = c.eval(0.025, 1.0);
  EXPECT_NEAR(mid.V, 1.5 * std::sin(1.0), 1e-13);
  EXPECT_NEAR(mid.V_x, 1.5 * std::cos(1.0), 1e-13);
  EXPECT_NEAR(mid.V_xx, -1.5 * std::sin(1.0), 1e-13);
  EXPECT_NEAR(mid.a, kGravity, 1e-13);
  EXPECT_THROW(c.eval(0.2, 0.0), std::out_of_range);
  EXPECT_THROW(TruncatedCoeffs::from_fields({0.1, 0.0}, {v0, v1}, {a, a}, FrequencyConstants{}), std::invalid_argument);
  EXPECT_THROW(TruncatedCoeffs::constant(0.0, -1.0), std::invalid_argument);
}

TEST(TruncatedCoeffs, RefusesTaylorCoefficientThatLosesPositivity) {
  const int n = 64;
  const RealVec a = sampled(n, [](double x) { return 1.0 + 2.0 * std::cos(x); });
  EXPECT_THROW(TruncatedCoeffs::from_fields({0.0}, {RealVec(n, 0.0)}, {a}, FrequencyConstants{}), std::runtime_error);
}

TEST(Hamiltonian, ConstantCoefficientValues) {
  const auto c = TruncatedCoeffs::constant(0.7, kGravity);
  const double lambda = 256.0;
  const auto h = hamiltonian::hamiltonian_eval(c, 0.0, 1.0, lambda);
  EXPECT_NEAR(h.H, 0.7 * lambda + std::sqrt(kGravity * lambda), 1e-12);
  EXPECT_NEAR(h.H_xi, 0.7 + 0.5 * std::sqrt(kGravity / lambda), 1e-14);
  EXPECT_EQ(h.H_x, 0.0);
  const auto neg = hamiltonian::hamiltonian_eval(c, 0.0, 1.0, -lambda);
  EXPECT_NEAR(neg.H_xi, 0.7 - 0.5 * std::sqrt(kGravity / lambda), 1e-14);
  EXPECT_THROW(hamiltonian::hamiltonian_eval(c, 0.0, 1.0, 0.0), std::domain_error);
}

TEST(Hamiltonian, PartialsMatchFiniteDifferences) {
  const auto c = wavy_coeffs();
  const double x = 0.9, xi = 256.0, hx = 1e-5, hxi = 1e-3;
  const auto h = hamiltonian::hamiltonian_eval(c, 0.0, x, xi);
  auto at = [&](double y, double k) { return hamiltonian::hamiltonian_eval(c, 0.0, y, k); };
  EXPECT_NEAR(h.H_xixi, (at(x, xi + hxi).H_xi - at(x, xi - hxi).H_xi) / (2 * hxi), 1e-8);
  EXPECT_NEAR(h.H_xi, (at(x, xi + hxi).H - at(x, xi - hxi).H) / (2 * hxi), 1e-8);
  EXPECT_NEAR(h.H_x, (at(x + hx, xi).H - at(x - hx, xi).H) / (2 * hx), 1e-5 * std::abs(h.H_x));
  EXPECT_NEAR(h.H_xx, (at(x + hx, xi).H_x - at(x - hx, xi).H_x) / (2 * hx), 1e-5 * std::abs(h.H_xx));
  EXPECT_NEAR(h.H_xxi, (at(x + hx, xi).H_xi - at(x - hx, xi).H_xi) / (2 * hx), 1e-6);
}

TEST(Flow, ConstantCoefficientClosedForms) {
  const double v0 = 0.4, a0 = kGravity, x = 1.0, s = 0.1;
  const auto c = TruncatedCoeffs::constant(v0, a0);
  for (double xi : {256.0, -300.0}) {
    const auto b = hamiltonian::flow_integrate(c, {{x, xi}}, s, {0.0, 0.35});
    for (std::size_t i = 0; i < b.times.size(); ++i) {
      const double dt = b.times[i] - s, sgn = xi > 0 ? 1.0 : -1.0;
      const RayState& r = b.states[i][0];
      EXPECT_NEAR(r.x, x + (v0 + 0.5 * std::sqrt(a0) * sgn / std::sqrt(std::abs(xi))) * dt, 1e-8);
      EXPECT_EQ(r.xi, xi);
      EXPECT_NEAR(r.phase, -0.5 * std::sqrt(a0 * std::abs(xi)) * dt, 1e-8);
      EXPECT_NEAR(r.dx_dx, 1.0, 1e-12);
      EXPECT_EQ(r.dxi_dx, 0.0);
      EXPECT_NEAR(r.dxi_dxi, 1.0, 1e-12);
      EXPECT_NEAR(r.dx_dxi, -0.25 * std::sqrt(a0) * std::pow(std::abs(xi), -1.5) * dt, 1e-8);
    }
  }
}

TEST(Flow, GroupPropertyAndTimeReversal) {
  const auto c = wavy_coeffs();
  const RayState start = launch(0.7, 256.0);
  const hamiltonian::FlowOptions opt{1e-3, 0.0, 0.0};
  const RayState direct = hamiltonian::advance_ray(c, start, 0.0, 0.25, opt);
  const RayState mid = hamiltonian::advance_ray(c, start, 0.0, 0.1, opt);
  const RayState composed = hamiltonian::advance_ray(c, launch(mid.x, mid.xi), 0.1, 0.25, opt);
  EXPECT_NEAR(composed.x, direct.x, 1e-6);
  EXPECT_NEAR(composed.xi / direct.xi, 1.0, 1e-6);
  const RayState back = hamiltonian::advance_ray(c, launch(direct.x, direct.xi), 0.25, 0.0, opt);
  EXPECT_NEAR(back.x, start.x, 1e-6);
  EXPECT_NEAR(back.xi / start.xi, 1.0, 1e-6);
}

TEST(Flow, SmallFrozenVelocityPreservesTheBand) {
  const int n = 64;
  const RealVec v = sampled(n, [](double x) { return 0.01 * std::sin(x); });
  const auto c = TruncatedCoeffs::from_fields({0.0}, {v}, {RealVec(n, kGravity)}, FrequencyConstants{});
  std::vector<std::pair<double, double>> init;
  for (int r = 0; r < 16; ++r) init.emplace_back(spectral::kTwoPi * r / 16, 256.0);
  std::vector<double> times;
  for (int i = 0; i <= 25; ++i) times.push_back(0.01 * i);
  const auto b = hamiltonian::flow_integrate(c, init, 0.0, times, hamiltonian::band_options(256.0));
  const auto rep = hamiltonian::bilipschitz_report(b);
  EXPECT_LE(rep.band_drift, 0.01);
  EXPECT_GT(rep.band_drift, 0.0);
}

TEST(Flow, BandExitAbortsWithTimeStamp) {
  const int n = 64;
  // Compressive velocity multiplies xi by exp(40 t) near x = pi.
  const RealVec v = sampled(n, [](double x) { return 40.0 * std::sin(x); });
  const auto c = TruncatedCoeffs::from_fields({0.0}, {v}, {RealVec(n, kGravity)}, FrequencyConstants{});
  try {
    hamiltonian::flow_integrate(c, {{spectral::kPi, 256.0}}, 0.0, {0.25}, hamiltonian::band_options(256.0));
    FAIL() << "expected a flow abort";
  } catch (const hamiltonian::FlowAbort& e) {
    EXPECT_GT(e.time(), 0.03);
    EXPECT_LT(e.time(), 0.04);
  }
}

TEST(LinearizedFlow, VariationalMatchesNeighbouringRays) {
  const auto c = wavy_coeffs();
  const double x = 2.1, xi = 256.0, t = 0.2;
  const RayState r = hamiltonian::advance_ray(c, launch(x, xi), 0.0, t, {});
  const auto fd = hamiltonian::linearized_flow_fd(c, x, xi, 0.0, t, 1e-5, 1e-2);
  EXPECT_NEAR(r.dx_dx, fd[0], 1e-6 * std::abs(fd[0]));
  EXPECT_NEAR(r.dx_dxi, fd[1], 1e-6 * std::abs(fd[1]));
  EXPECT_NEAR(r.dxi_dx, fd[2], 1e-6 * std::abs(fd[2]));
  EXPECT_NEAR(r.dxi_dxi, fd[3], 1e-6 * std::abs(fd[3]));
  // Hamiltonian flows preserve area.
  EXPECT_NEAR(r.dx_dx * r.dxi_dxi - r.dx_dxi * r.dxi_dx, 1.0, 1e-8);
}

TEST(Spreading, ConstantCoefficientRatioAndSign) {
  const double lambda = 256.0;
  const auto c = TruncatedCoeffs::constant(0.0, kGravity);
  const std::vector<double> times{-0.2, -0.1, 0.1, 0.2, 0.3};
  for (double xi : {lambda, 2.0 * lambda}) {
    const auto b = hamiltonian::flow_integrate(c, {{1.0, xi}}, 0.0, times);
    const auto rep = hamiltonian::spreading_report(b, 0, c, lambda);
    const double expected = std::pow(lambda / xi, 1.5);
    EXPECT_NEAR(rep.min_ratio, expected, 1e-8);
    EXPECT_NEAR(rep.max_ratio, expected, 1e-8);
    EXPECT_TRUE(rep.sign_consistent);
    EXPECT_NEAR(rep.fit.r2, 1.0, 1e-12);
  }
}

TEST(TwoPoint, ConstantCoefficientGeometry) {
  const double lambda = 256.0;
  const auto c = TruncatedCoeffs::constant(0.0, kGravity);
  std::vector<std::pair<double, double>> init;
  for (int r = 0; r < 8; ++r) init.emplace_back(1.0 + 0.01 * r, 256.0);
  const auto b = hamiltonian::flow_integrate(c, init, 0.0, {0.0, 0.1, 0.2});
  // Equal frequencies translate rigidly; the widest pair at adjacent times maximizes d / (d + lambda^{-1/2} |t - s|).
  const double rate = std::pow(lambda, -0.5);
  EXPECT_NEAR(hamiltonian::persistence_constant(b, lambda), 0.07 / (0.07 + 0.1 * rate), 1e-9);
  EXPECT_EQ(hamiltonian::two_point_constant(b, lambda), 0.0);
  EXPECT_NEAR(hamiltonian::torus_distance(0.1, spectral::kTwoPi - 0.1), 0.2, 1e-15);
}

TEST(SelectS0, TieBreaksToEarliest) {
  const FrequencyConstants k{64.0, 0.25, 1.0 / 32.0};
  const int n = 512;
  const std::vector<RealVec> flat(3, RealVec(n, 0.0));
  EXPECT_EQ(hamiltonian::select_s0(flat, k), 0u);
  const RealVec eta = sampled(n, [](double x) { return 1e-3 * std::cos(x); });
  EXPECT_EQ(hamiltonian::select_s0({eta, eta, eta}, k), 0u);
  EXPECT_THROW(hamiltonian::select_s0({}, k), std::invalid_argument);
}

TEST(ComputeF1, FlatSurfaceAndPreconditions) {
  const FrequencyConstants k{64.0, 0.25, 1.0 / 32.0};
  EXPECT_EQ(spectral::linf_norm(hamiltonian::compute_F1(RealVec(512, 0.0), k)), 0.0);
  EXPECT_THROW(hamiltonian::compute_F1(RealVec(256, 0.0), k), std::invalid_argument);
  const RealVec steep = sampled(512, [](double x) { return std::cos(x); });
  EXPECT_THROW(hamiltonian::compute_F1(steep, k), std::domain_error);
}

TEST(ComputeF1, SmallSlopeReducesToTruncatedThirdDerivativeOverAbsXi) {
  // With |eta_x| <= 3e-5 the symbol is 1/|xi| up to that relative size. The cutoff c1 lambda = 4
  // keeps cos 3x and removes cos 40x, so F1 -> |D|^{-1} d_x^3 (1e-5 cos 3x) = 9e-5 sin 3x.
  const FrequencyConstants k{128.0, 0.25, 1.0 / 32.0};
  const int n = 1024;
  RealVec eta(n), oracle(n);
  for (int j = 0; j < n; ++j) {
    const double x = spectral::kTwoPi * j / n;
    eta[j] = 1e-7 * std::cos(40.0 * x) + 1e-5 * std::cos(3.0 * x);
    oracle[j] = 9e-5 * std::sin(3.0 * x);
  }
  EXPECT_LT(max_abs_diff(hamiltonian::compute_F1(eta, k), oracle), 1e-8);
}

TEST(Eikonal, ConstantCoefficientPhaseIsExact) {
  const double v0 = 0.3, a0 = kGravity, xi = 256.0, x = 2.0, s0 = 0.05;
  const auto c = TruncatedCoeffs::constant(v0, a0);
  const double half = 4.0 * std::pow(256.0, -0.75);
  const auto phase = hamiltonian::eikonal_solve(c, x, xi, s0, {0.0, 0.05, 0.2}, half);
  for (std::size_t i = 0; i < phase.time_count(); ++i) {
    const double dt = phase.time(i) - s0;
    const double shift = (v0 + 0.5 * std::sqrt(a0 / xi)) * dt;
    for (double y : {x - 0.5 * half, x, x + 0.7 * half}) {
      const auto [psi, dpsi] = phase.eval(i, y + shift);
      EXPECT_NEAR(psi, xi * (y + shift - x) - dt * (v0 * xi + std::sqrt(a0 * xi)), 1e-8);
      EXPECT_NEAR(dpsi, xi, 1e-8);
    }
  }
  EXPECT_THROW(phase.eval(0, x + 2.0 * half), std::out_of_range);
  EXPECT_THROW(hamiltonian::eikonal_solve(c, x, xi, s0, {0.0}, half, 4), std::invalid_argument);
}

TEST(Eikonal, SlopeMatchesFrequencyOnEveryCharacteristic) {
  const auto c = wavy_coeffs();
  const double xi = 256.0, half = 4.0 * std::pow(256.0, -0.75);
  const auto phase = hamiltonian::eikonal_solve(c, 1.3, xi, 0.0, {-0.1, 0.0, 0.1, 0.2}, half);
  const auto& b = phase.bundle();
  for (std::size_t i = 0; i < phase.time_count(); ++i)
    for (const RayState& r : b.states[i]) EXPECT_NEAR(phase.eval(i, r.x).second / r.xi, 1.0, 1e-6);
  EXPECT_LE(hamiltonian::eikonal_drift(phase, std::pow(256.0, -0.75)), 0.2 * std::pow(256.0, 0.75));
}

TEST(Eikonal, PhaseSatisfiesTheHamiltonJacobiEquation) {
  // d_t psi + H(y, d_y psi) = 0 at a fixed point inside the tube, by differencing in time.
  const auto c = wavy_coeffs(0.05);
  const double xi = 256.0, half = 4.0 * std::pow(256.0, -0.75), dt = 1e-4, t = 0.1;
  const auto phase = hamiltonian::eikonal_solve(c, 1.3, xi, 0.0, {t - dt, t, t + dt}, half, 65);
  const double y = phase.center(1).x + 0.2 * half;
  const double psi_t = (phase.eval(2, y).first - phase.eval(0, y).first) / (2.0 * dt);
  const double h = hamiltonian::hamiltonian_eval(c, t, y, phase.eval(1, y).second).H;
  EXPECT_NEAR(psi_t + h, 0.0, 1e-4 * std::abs(h));
}

}  // namespace
