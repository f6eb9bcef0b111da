#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "wwlab/elliptic.hpp"
#include "wwlab/paradiff.hpp"
#include "wwlab/zakharov.hpp"

namespace {

using namespace wwlab;
using namespace wwlab::testing;
using elliptic::StripField;

constexpr double kDepth = 1.0;
constexpr double kDelta = 0.1;
constexpr double kGravity = 9.81;

elliptic::StripSolver make_solver(const RealVec& eta, int nz = 32) {
  const int n = static_cast<int>(eta.size());
  auto grid = elliptic::StripGrid::chebyshev(n, nz);
  auto map = elliptic::build_flattening(grid, eta, kDepth, kDelta);
  return elliptic::StripSolver(grid, map);
}

double flat_symbol(double xi) { return std::abs(xi) * std::tanh(kDepth * std::abs(xi)); }

double integral(const RealVec& f, const RealVec& g) {
  double acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) acc += f[j] * g[j];
  return acc * spectral::kTwoPi / static_cast<double>(f.size());
}

RealVec smooth_surface(std::mt19937_64& rng, int n, double amplitude) {
  auto eta = spectral::random_real_field(rng, n, 6, 2.0);
  const double scale = amplitude / spectral::linf_norm(eta);
  for (double& v : eta) v *= scale;
  return eta;
}

TEST(StripGrid, HasBothEndpointsAndRejectsTinyGrids) {
  const auto g = elliptic::StripGrid::chebyshev(64, 16);
  EXPECT_EQ(g.z.front(), 0.0);
  EXPECT_EQ(g.z.back(), -1.0);
  EXPECT_THROW(elliptic::StripGrid::chebyshev(64, 3), std::invalid_argument);
  EXPECT_THROW(elliptic::StripGrid::chebyshev(48, 16), std::invalid_argument);
}

TEST(Flattening, RestSurfaceGivesLinearMap) {
  const auto grid = elliptic::StripGrid::chebyshev(64, 16);
  const auto m = elliptic::build_flattening(grid, RealVec(64, 0.0), kDepth, kDelta);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 64; ++j) {
      EXPECT_NEAR(m.rho(i, j), kDepth * grid.z[i], 1e-14);
      EXPECT_NEAR(m.rho_z(i, j), kDepth, 1e-14);
      EXPECT_NEAR(m.rho_x(i, j), 0.0, 1e-14);
    }
}

TEST(Flattening, ConstantSurfaceKeepsBothBoundaries) {
  const auto grid = elliptic::StripGrid::chebyshev(64, 16);
  const auto m = elliptic::build_flattening(grid, RealVec(64, 0.05), kDepth, kDelta);
  for (int j = 0; j < 64; ++j) {
    EXPECT_NEAR(m.rho(0, j), 0.05, 1e-14);
    EXPECT_NEAR(m.rho(15, j), -kDepth, 1e-14);
  }
}

TEST(Flattening, SmallCosineSurfaceStaysNonDegenerate) {
  const auto grid = elliptic::StripGrid::chebyshev(128, 32);
  const auto m = elliptic::build_flattening(grid, cosine(128, 1.0, 0.01), kDepth, kDelta);
  EXPECT_GT(m.rho_z.minCoeff(), 0.9);
  EXPECT_GE(m.min_rho_z, std::min(kDepth / 2.0, 1.0));
}

TEST(Flattening, DegenerateMapIsAnError) {
  const auto grid = elliptic::StripGrid::chebyshev(64, 16);
  EXPECT_THROW(elliptic::build_flattening(grid, cosine(64, 3.0, 2.0), kDepth, kDelta), std::runtime_error);
  EXPECT_THROW(elliptic::build_flattening(grid, RealVec(64, 0.0), -1.0, kDelta), std::invalid_argument);
}

TEST(Coefficients, RestSurfaceGivesFlatOperator) {
  const auto grid = elliptic::StripGrid::chebyshev(64, 16);
  const auto c = elliptic::compute_coefficients(elliptic::build_flattening(grid, RealVec(64, 0.0), 2.0, kDelta));
  EXPECT_NEAR((c.alpha.array() - 4.0).abs().maxCoeff(), 0.0, 1e-13);
  EXPECT_NEAR(c.beta.array().abs().maxCoeff(), 0.0, 1e-13);
  EXPECT_NEAR(c.gamma.array().abs().maxCoeff(), 0.0, 1e-13);
}

TEST(Coefficients, PositiveAndReflectionEquivariant) {
  const int n = 64;
  std::mt19937_64 rng(1);
  const auto eta = smooth_surface(rng, n, 0.02);
  RealVec mirrored(n);
  for (int j = 0; j < n; ++j) mirrored[j] = eta[(n - j) % n];
  const auto grid = elliptic::StripGrid::chebyshev(n, 16);
  const auto m = elliptic::build_flattening(grid, eta, kDepth, kDelta);
  const auto c = elliptic::compute_coefficients(m);
  const auto cm = elliptic::compute_coefficients(elliptic::build_flattening(grid, mirrored, kDepth, kDelta));
  const double max_grad = m.rho_x.array().abs().maxCoeff();
  EXPECT_GE(c.alpha.minCoeff(), m.min_rho_z * m.min_rho_z / (1.0 + max_grad * max_grad) - 1e-14);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < n; ++j) {
      EXPECT_NEAR(cm.alpha(i, j), c.alpha(i, (n - j) % n), 1e-12);
      EXPECT_NEAR(cm.beta(i, j), -c.beta(i, (n - j) % n), 1e-12);
      EXPECT_NEAR(cm.gamma(i, j), c.gamma(i, (n - j) % n), 1e-12);
    }
}

TEST(StripSolve, FlatSeparationOfVariables) {
  const int n = 64, k = 5;
  const auto solver = make_solver(RealVec(n, 0.0), 24);
  const auto sol = solver.solve(cosine(n, k));
  for (int i = 0; i < 24; ++i) {
    const double profile = std::cosh(kDepth * k * (solver.grid().z[i] + 1.0)) / std::cosh(kDepth * k);
    for (int j = 0; j < n; ++j) EXPECT_NEAR(sol.theta(i, j), profile * std::cos(k * spectral::kTwoPi * j / n), 1e-12);
  }
}

TEST(StripSolve, ConstantsAndZeroAreExact) {
  std::mt19937_64 rng(2);
  const auto solver = make_solver(smooth_surface(rng, 64, 0.02), 16);
  const auto one = solver.solve(RealVec(64, 1.0));
  EXPECT_LT((one.theta.array() - 1.0).abs().maxCoeff(), 1e-10);
  const auto zero = solver.solve(RealVec(64, 0.0));
  EXPECT_EQ(zero.theta.array().abs().maxCoeff(), 0.0);
}

TEST(StripSolve, TraceMatchesDataOnCurvedSurface) {
  std::mt19937_64 rng(3);
  const auto solver = make_solver(smooth_surface(rng, 128, 0.03), 24);
  const auto f = spectral::random_real_field(rng, 128, 30);
  const auto sol = solver.solve(f);
  for (int j = 0; j < 128; ++j) EXPECT_NEAR(sol.theta(0, j), f[j], 1e-12);
  EXPECT_LE(sol.report.residual, 1e-10);
}

TEST(Dtn, FlatMultiplierOnEveryMode) {
  const int n = 256;
  const auto solver = make_solver(RealVec(n, 0.0), 32);
  for (int k = 1; k <= n / 4; ++k) {
    const auto f = cosine(n, k);
    const auto g = elliptic::dtn(solver, f);
    const double exact = flat_symbol(k);
    EXPECT_LT(max_abs_diff(g, spectral::fourier_multiplier(f, flat_symbol)) / exact, 1e-8) << "k = " << k;
  }
}

TEST(Dtn, ConstantsAreInTheKernel) {
  std::mt19937_64 rng(4);
  const auto solver = make_solver(smooth_surface(rng, 128, 0.03), 24);
  EXPECT_LT(spectral::linf_norm(elliptic::dtn(solver, RealVec(128, 2.0))), 1e-9);
}

TEST(Dtn, SymmetricAndNonNegative) {
  std::mt19937_64 rng(5);
  const int n = 128;
  for (int trial = 0; trial < 20; ++trial) {
    const auto solver = make_solver(smooth_surface(rng, n, 0.02), 32);
    const auto f = spectral::random_real_field(rng, n, 40, 1.0);
    const auto g = spectral::random_real_field(rng, n, 40, 1.0);
    const auto gf = elliptic::dtn(solver, f), gg = elliptic::dtn(solver, g);
    EXPECT_GE(integral(f, gf), 0.0);
    EXPECT_LE(std::abs(integral(f, gg) - integral(g, gf)), 1e-8 * spectral::l2_norm(f) * spectral::l2_norm(g));
  }
}

// Finite-depth expansion G(eps eta) = G0 + eps (D eta D - G0 eta G0) + O(eps^2).
RealVec first_order_dtn(const RealVec& eta, const RealVec& f) {
  const auto g0 = [](const RealVec& u) { return spectral::fourier_multiplier(u, flat_symbol); };
  const RealVec df = spectral::derivative(f);
  const RealVec d_eta_df = spectral::derivative(spectral::multiply(eta, df));
  const RealVec g_eta_g = g0(spectral::multiply(eta, g0(f)));
  RealVec out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = -d_eta_df[j] - g_eta_g[j];
  return out;
}

TEST(Dtn, MatchesFirstOrderExpansionWithQuadraticRemainder) {
  const int n = 128;
  const auto shape = cosine(n, 2.0, 1.0, 0.4);
  const auto f = cosine(n, 5.0);
  const auto g0f = spectral::fourier_multiplier(f, flat_symbol);
  const auto g1f = first_order_dtn(shape, f);
  std::vector<double> errors;
  for (double eps : {4e-3, 2e-3, 1e-3}) {
    RealVec eta(n);
    for (int j = 0; j < n; ++j) eta[j] = eps * shape[j];
    const auto g = elliptic::dtn(make_solver(eta, 32), f);
    RealVec pred(n);
    for (int j = 0; j < n; ++j) pred[j] = g0f[j] + eps * g1f[j];
    errors.push_back(spectral::l2_norm(difference(g, pred)));
  }
  EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.4);
  EXPECT_NEAR(errors[1] / errors[2], 4.0, 0.4);
}

TEST(Dtn, VerticalRefinementConvergesFast) {
  const int n = 64;
  std::mt19937_64 rng(6);
  const auto eta = smooth_surface(rng, n, 0.05);
  const auto f = spectral::random_real_field(rng, n, 12, 1.0);
  const auto reference = elliptic::dtn(make_solver(eta, 48), f);
  const double coarse = relative_l2(elliptic::dtn(make_solver(eta, 6), f), reference);
  const double medium = relative_l2(elliptic::dtn(make_solver(eta, 12), f), reference);
  EXPECT_GT(coarse, 0.0);
  // Second order or better: halving the spacing cuts the error at least fourfold.
  EXPECT_GT(coarse / std::max(medium, 1e-15), 4.0);
}

TEST(Paralinearization, FlatResidualIsTheTanhDefect) {
  const int n = 128;
  const auto solver = make_solver(RealVec(n, 0.0), 32);
  const auto lambda = paradiff::SymbolGrid::from_multiplier(n, [](double xi) { return std::abs(xi); }, 1.0);
  for (int k : {1, 2, 3, 8}) {
    const auto f = cosine(n, k);
    const auto residual = difference(elliptic::dtn(solver, f), paradiff::paradiff_op(lambda, f));
    const paradiff::AdmissibleCutoff cut;
    const double oracle = flat_symbol(k) - k * cut.psi(k);
    EXPECT_LT(max_abs_diff(residual, cosine(n, k, oracle)), 1e-10) << "k = " << k;
  }
  EXPECT_EQ(spectral::linf_norm(paradiff::paradiff_op(lambda, RealVec(n, 0.0))), 0.0);
}

TEST(Paralinearization, ResidualGrowsAtMostLinearlyInAmplitude) {
  // Balanced frequencies: a smooth surface under high-frequency data leaves
  // only round-off, since the low-high interaction is the paraproduct itself.
  const int n = 128;
  const auto shape = cosine(n, 8.0);
  const auto f = cosine(n, 4.0);
  const auto lambda = paradiff::SymbolGrid::from_multiplier(n, [](double xi) { return std::abs(xi); }, 1.0);
  const auto tf = paradiff::paradiff_op(lambda, f);
  std::vector<double> norms;
  for (double eps : {0.001, 0.002, 0.004}) {
    RealVec eta(n);
    for (int j = 0; j < n; ++j) eta[j] = eps * shape[j];
    norms.push_back(spectral::sobolev_norm(difference(elliptic::dtn(make_solver(eta), f), tf), 0.5));
  }
  EXPECT_LE(norms[1] / norms[0], 2.0 * 1.1);
  EXPECT_LE(norms[2] / norms[1], 2.0 * 1.1);
}

TEST(Pressure, HydrostaticRestState) {
  const int n = 64;
  const auto solver = make_solver(RealVec(n, 0.0), 16);
  const auto potential = solver.solve(RealVec(n, 0.0));
  const auto p = elliptic::pressure(solver, potential, kGravity);
  for (double a : p.taylor) EXPECT_NEAR(a, kGravity, 1e-8);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < n; ++j) EXPECT_NEAR(p.pressure(i, j), -kGravity * kDepth * solver.grid().z[i], 1e-10);
}

TEST(Pressure, LinearWaveShiftsTaylorCoefficientLinearly) {
  const int n = 128;
  std::vector<double> shifts;
  for (double eps : {2e-3, 1e-3}) {
    const auto s = zakharov::linear_waves(n, {{3, eps, 0.0}}, kGravity, kDepth);
    const auto solver = make_solver(s.eta);
    const auto p = elliptic::pressure(solver, solver.solve(s.psi), kGravity);
    double dev = 0.0;
    for (double a : p.taylor) dev = std::max(dev, std::abs(a - kGravity));
    shifts.push_back(dev);
  }
  EXPECT_GT(shifts[1], 0.0);
  EXPECT_NEAR(shifts[0] / shifts[1], 2.0, 0.1);
}

TEST(Potential, SurfaceGradientMatchesTraceFormulas) {
  const int n = 128;
  const auto s = zakharov::linear_waves(n, {{2, 2e-3, 0.0}, {5, 1e-3, 1.0}}, kGravity, kDepth);
  const auto solver = make_solver(s.eta);
  const auto sol = solver.solve(s.psi);
  const auto d = elliptic::physical_derivatives(solver.map(), sol);
  RealVec b, v;
  zakharov::ZakharovSystem::velocity_traces(spectral::derivative(s.eta), spectral::derivative(s.psi),
                                            elliptic::dtn_from_solution(solver.map(), sol), b, v);
  RealVec phi_x(n), phi_y(n);
  for (int j = 0; j < n; ++j) {
    phi_x[j] = d.phi_x(0, j);
    phi_y[j] = d.phi_y(0, j);
  }
  EXPECT_LT(relative_l2(phi_x, v), 1e-6);
  EXPECT_LT(relative_l2(phi_y, b), 1e-6);
}

TEST(Potential, IsHarmonicInPhysicalCoordinates) {
  // phi_yy = (theta_zz rho_z - theta_z rho_zz) / rho_z^3, computed independently of phi_xx.
  const int n = 128, nz = 32;
  const auto s = zakharov::linear_waves(n, {{2, 5e-3, 0.0}, {4, 2e-3, 0.7}}, kGravity, kDepth);
  const auto solver = make_solver(s.eta, nz);
  const auto sol = solver.solve(s.psi);
  const auto& m = solver.map();
  const auto d = elliptic::physical_derivatives(m, sol);
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < n; ++j) {
      const double rz = m.rho_z(i, j);
      const double phi_yy = (sol.theta_zz(i, j) * rz - sol.theta_z(i, j) * m.rho_zz(i, j)) / (rz * rz * rz);
      worst = std::max(worst, std::abs(d.phi_xx(i, j) + phi_yy));
      scale = std::max(scale, std::abs(d.phi_xx(i, j)));
    }
  EXPECT_LT(worst, 1e-6 * scale);
}

}  // namespace
