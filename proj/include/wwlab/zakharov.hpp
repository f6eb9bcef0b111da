#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwlab/elliptic.hpp"
#include "wwlab/spectral.hpp"

namespace wwlab::zakharov {

using spectral::RealVec;

struct WaveParams {
  double g = 9.81;
  double h = 1.0;
  double delta = 0.1;
  int nz = 32;
  elliptic::BottomGeometry geometry = elliptic::BottomGeometry::kFlat;
  double filter_strength = 36.0;
  double filter_order = 36.0;
  double dealias_fraction = 2.0 / 3.0;
  double solver_tol = 1e-10;
  double cfl = 0.5;
};

struct WaveState {
  RealVec eta, psi;
  double t = 0.0;
};

struct Tendency {
  RealVec eta_t, psi_t;
};

// Surface traces: B = d_y phi, V = d_x phi, a = -d_y P, all at y = eta.
struct TraceSet {
  RealVec dtn_psi, B, V, a;
  double min_taylor = 0.0;
};

// Thrown when the evolution produces a non-finite value; carries the last
// finite state.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, WaveState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const WaveState& last_good() const { return last_good_; }

 private:
  WaveState last_good_;
};

inline bool all_finite(const RealVec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

class ZakharovSystem {
 public:
  ZakharovSystem(int n, WaveParams params)
      : n_(n), params_(params), grid_(elliptic::StripGrid::chebyshev(n, params.nz)) {
    spectral::GridSpec{n, spectral::kTwoPi, params.dealias_fraction}.validate();
    if (!(params.g > 0.0) || !(params.h > 0.0)) throw std::invalid_argument("g and h must be positive");
  }

  int n() const { return n_; }
  const WaveParams& params() const { return params_; }
  const elliptic::StripGrid& strip() const { return grid_; }

  elliptic::StripSolver solver(const RealVec& eta) const {
    return elliptic::StripSolver(grid_, elliptic::build_flattening(grid_, eta, params_.h, params_.delta, params_.geometry),
                                 params_.solver_tol);
  }

  RealVec dtn(const RealVec& eta, const RealVec& f) const { return elliptic::dtn(solver(eta), f); }

  // B = (eta_x psi_x + G psi)/(1 + eta_x^2), V = psi_x - B eta_x.
  static void velocity_traces(const RealVec& eta_x, const RealVec& psi_x, const RealVec& g_psi, RealVec& b, RealVec& v) {
    const std::size_t n = eta_x.size();
    b.resize(n);
    v.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = (eta_x[j] * psi_x[j] + g_psi[j]) / (1.0 + eta_x[j] * eta_x[j]);
      v[j] = psi_x[j] - b[j] * eta_x[j];
    }
  }

  TraceSet traces(const WaveState& s, bool with_taylor = true) const {
    const elliptic::StripSolver sol = solver(s.eta);
    const elliptic::StripSolution potential = sol.solve(s.psi);
    TraceSet out;
    out.dtn_psi = elliptic::dtn_from_solution(sol.map(), potential);
    velocity_traces(spectral::derivative(s.eta), spectral::derivative(s.psi), out.dtn_psi, out.B, out.V);
    if (with_taylor) {
      out.a = elliptic::pressure(sol, potential, params_.g).taylor;
      out.min_taylor = *std::min_element(out.a.begin(), out.a.end());
    }
    return out;
  }

  Tendency rhs(const WaveState& s) const {
    const RealVec g_psi = dtn(s.eta, s.psi);
    const RealVec eta_x = spectral::derivative(s.eta), psi_x = spectral::derivative(s.psi);
    RealVec psi_t(n_);
    for (int j = 0; j < n_; ++j) {
      const double num = eta_x[j] * psi_x[j] + g_psi[j];
      psi_t[j] = -params_.g * s.eta[j] - 0.5 * psi_x[j] * psi_x[j] + 0.5 * num * num / (1.0 + eta_x[j] * eta_x[j]);
    }
    return {spectral::dealias(g_psi, params_.dealias_fraction), spectral::dealias(psi_t, params_.dealias_fraction)};
  }

  // Hamiltonian 1/2 int psi G psi + g/2 int eta^2.
  double energy(const WaveState& s) const { return energy_from(s, dtn(s.eta, s.psi)); }

  double energy_from(const WaveState& s, const RealVec& g_psi) const {
    double kinetic = 0.0, potential = 0.0;
    for (int j = 0; j < n_; ++j) {
      kinetic += s.psi[j] * g_psi[j];
      potential += s.eta[j] * s.eta[j];
    }
    const double dx = spectral::kTwoPi / n_;
    return 0.5 * dx * kinetic + 0.5 * params_.g * dx * potential;
  }

  double filter_factor(double k) const {
    const double kmax = n_ / 2.0;
    return std::exp(-params_.filter_strength * std::pow(std::abs(k) / kmax, params_.filter_order));
  }

  void filter(WaveState& s) const {
    auto f = [this](double k) { return filter_factor(k); };
    s.eta = spectral::fourier_multiplier(s.eta, f);
    s.psi = spectral::fourier_multiplier(s.psi, f);
  }

  // c_cfl / (max|V| k_max + sqrt(g k_max)).
  double cfl_limit(const RealVec& velocity) const {
    const double kmax = n_ / 2.0;
    return params_.cfl / (spectral::linf_norm(velocity) * kmax + std::sqrt(params_.g * kmax));
  }

  // Classical RK4 followed by the spectral filter.
  WaveState step(const WaveState& s, double dt) const {
    auto axpy = [this](const WaveState& base, const Tendency& k, double c) {
      WaveState out{base.eta, base.psi, base.t + c};
      for (int j = 0; j < n_; ++j) {
        out.eta[j] += c * k.eta_t[j];
        out.psi[j] += c * k.psi_t[j];
      }
      return out;
    };
    const Tendency k1 = rhs(s);
    const Tendency k2 = rhs(axpy(s, k1, 0.5 * dt));
    const Tendency k3 = rhs(axpy(s, k2, 0.5 * dt));
    const Tendency k4 = rhs(axpy(s, k3, dt));
    WaveState out{s.eta, s.psi, s.t + dt};
    for (int j = 0; j < n_; ++j) {
      out.eta[j] += dt / 6.0 * (k1.eta_t[j] + 2.0 * k2.eta_t[j] + 2.0 * k3.eta_t[j] + k4.eta_t[j]);
      out.psi[j] += dt / 6.0 * (k1.psi_t[j] + 2.0 * k2.psi_t[j] + 2.0 * k3.psi_t[j] + k4.psi_t[j]);
    }
    filter(out);
    return out;
  }

 private:
  int n_;
  WaveParams params_;
  elliptic::StripGrid grid_;
};

struct Trajectory {
  double dt = 0.0;
  int stride = 1;
  std::vector<WaveState> snapshots;
  std::vector<double> energy;    // per snapshot
  std::vector<double> eta_mean;  // per snapshot

  double spacing() const { return dt * stride; }
};

// Fixed-step evolution storing every stride-th state, including the first
// and the one at t_end.
inline Trajectory evolve(const ZakharovSystem& sys, const WaveState& initial, double t_end, double dt, int stride = 1) {
  if (!(dt > 0.0) || stride < 1) throw std::invalid_argument("dt and stride must be positive");
  const int steps = static_cast<int>(std::llround((t_end - initial.t) / dt));
  if (std::abs(steps * dt - (t_end - initial.t)) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("t_end - t0 must be a multiple of dt");
  Trajectory traj;
  traj.dt = dt;
  traj.stride = stride;
  WaveState state = initial;
  auto record = [&](const WaveState& s) {
    const RealVec g_psi = sys.dtn(s.eta, s.psi);
    RealVec b, v;
    ZakharovSystem::velocity_traces(spectral::derivative(s.eta), spectral::derivative(s.psi), g_psi, b, v);
    if (dt > sys.cfl_limit(v))
      throw std::runtime_error("time step " + std::to_string(dt) + " exceeds CFL limit " +
                               std::to_string(sys.cfl_limit(v)));
    traj.snapshots.push_back(s);
    traj.energy.push_back(sys.energy_from(s, g_psi));
    traj.eta_mean.push_back(spectral::mean(s.eta));
  };
  record(state);
  for (int i = 1; i <= steps; ++i) {
    WaveState next;
    try {
      next = sys.step(state, dt);
    } catch (const std::runtime_error& e) {
      // A non-finite stage surfaces first as a failed strip solve.
      throw NumericalAbort(std::string(e.what()) + " at t = " + std::to_string(state.t + dt), state);
    }
    next.t = initial.t + i * dt;
    if (!all_finite(next.eta) || !all_finite(next.psi))
      throw NumericalAbort("non-finite state at t = " + std::to_string(next.t), state);
    state = std::move(next);
    if (i % stride == 0 || i == steps) record(state);
  }
  return traj;
}

struct WaveMode {
  int k = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

// Linear progressive waves eta = A cos(kx + p), psi = (g A/omega) sin(kx + p)
// with omega^2 = g |k| tanh(h |k|).
inline WaveState linear_waves(int n, const std::vector<WaveMode>& modes, double g, double h) {
  WaveState s{RealVec(n, 0.0), RealVec(n, 0.0), 0.0};
  for (const WaveMode& m : modes) {
    if (m.k == 0) throw std::invalid_argument("linear wave needs k != 0");
    const double omega = std::sqrt(g * std::abs(m.k) * std::tanh(h * std::abs(m.k)));
    for (int j = 0; j < n; ++j) {
      const double arg = m.k * spectral::kTwoPi * j / n + m.phase;
      s.eta[j] += m.amplitude * std::cos(arg);
      s.psi[j] += (m.k > 0 ? 1.0 : -1.0) * g * m.amplitude / omega * std::sin(arg);
    }
  }
  return s;
}

// Relative L2 residuals of the surface identities, with L = d_t + V d_x
// realized by centered differences across snapshots index -/+ offset.
struct IdentityResiduals {
  double time = 0.0;
  double spacing = 0.0;
  double eta_to_b = 0.0;         // L eta = B
  double b_to_taylor = 0.0;      // L B = a - g
  double v_to_taylor = 0.0;      // L V = -a eta_x
  double structure = 0.0;        // G(eta) B = -V_x, the residual is the bottom term
  double slope_transport = 0.0;  // L eta_x = G(eta) V - eta_x V_x
  double min_taylor = 0.0;
};

inline double relative_l2(const RealVec& lhs, const RealVec& rhs) {
  RealVec diff(lhs.size());
  for (std::size_t j = 0; j < lhs.size(); ++j) diff[j] = lhs[j] - rhs[j];
  const double denom = spectral::l2_norm(rhs);
  const double num = spectral::l2_norm(diff);
  // Quiescent reference fields carry only round-off; report the absolute residual.
  if (denom <= 1e-10) return num;
  return num / denom;
}

inline IdentityResiduals identity_residuals(const ZakharovSystem& sys, const Trajectory& traj, int index, int offset) {
  const int count = static_cast<int>(traj.snapshots.size());
  if (offset < 1 || index - offset < 0 || index + offset >= count)
    throw std::invalid_argument("identity residuals need snapshots on both sides of index");
  const WaveState& mid = traj.snapshots[index];
  const WaveState& before = traj.snapshots[index - offset];
  const WaveState& after = traj.snapshots[index + offset];
  const double span = after.t - before.t;
  const int n = sys.n();
  const double g = sys.params().g;

  const TraceSet c = sys.traces(mid, true);
  const TraceSet lo = sys.traces(before, false);
  const TraceSet hi = sys.traces(after, false);
  const RealVec eta_x = spectral::derivative(mid.eta), eta_xx = spectral::derivative(mid.eta, 2);
  const RealVec b_x = spectral::derivative(c.B), v_x = spectral::derivative(c.V);
  const RealVec eta_x_lo = spectral::derivative(before.eta), eta_x_hi = spectral::derivative(after.eta);
  const RealVec g_b = sys.dtn(mid.eta, c.B), g_v = sys.dtn(mid.eta, c.V);

  RealVec l_eta(n), l_b(n), l_v(n), l_eta_x(n), a_minus_g(n), minus_a_eta_x(n), minus_v_x(n), slope_rhs(n);
  for (int j = 0; j < n; ++j) {
    l_eta[j] = (after.eta[j] - before.eta[j]) / span + c.V[j] * eta_x[j];
    l_b[j] = (hi.B[j] - lo.B[j]) / span + c.V[j] * b_x[j];
    l_v[j] = (hi.V[j] - lo.V[j]) / span + c.V[j] * v_x[j];
    l_eta_x[j] = (eta_x_hi[j] - eta_x_lo[j]) / span + c.V[j] * eta_xx[j];
    a_minus_g[j] = c.a[j] - g;
    minus_a_eta_x[j] = -c.a[j] * eta_x[j];
    minus_v_x[j] = -v_x[j];
    slope_rhs[j] = g_v[j] - eta_x[j] * v_x[j];
  }
  IdentityResiduals r;
  r.time = mid.t;
  r.spacing = 0.5 * span;
  r.eta_to_b = relative_l2(l_eta, c.B);
  r.b_to_taylor = relative_l2(l_b, a_minus_g);
  r.v_to_taylor = relative_l2(l_v, minus_a_eta_x);
  r.structure = relative_l2(g_b, minus_v_x);
  r.slope_transport = relative_l2(l_eta_x, slope_rhs);
  r.min_taylor = c.min_taylor;
  return r;
}

}  // namespace wwlab::zakharov
