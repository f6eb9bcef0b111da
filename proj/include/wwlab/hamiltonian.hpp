#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwlab/fit.hpp"
#include "wwlab/paradiff.hpp"
#include "wwlab/spectral.hpp"
#include "wwlab/zakharov.hpp"

namespace wwlab::hamiltonian {

using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

// Frequency scales for one dyadic lambda. Coefficients are truncated at
// c1 lambda, gaps are measured in units of c mu.
struct FrequencyConstants {
  double lambda = 256.0;
  double c = 0.25;
  double c1 = 1.0 / 32.0;

  void validate() const {
    if (!(lambda > 0.0) || !spectral::is_power_of_two(static_cast<int>(lambda)) ||
        static_cast<double>(static_cast<int>(lambda)) != lambda)
      throw std::invalid_argument("lambda must be a dyadic integer");
    if (!(c1 > 0.0 && c1 < c && c < 1.0)) throw std::invalid_argument("need 0 < c1 < c < 1");
    if (c1 * lambda < 1.0) throw std::invalid_argument("c1 * lambda must be at least 1");
  }
  double truncation() const { return c1 * lambda; }
  double x_scale() const { return std::pow(lambda, -0.75); }
  double xi_scale() const { return std::pow(lambda, 0.75); }
};

// Real trigonometric polynomial mean + 2 Re sum_{k=1..K} c_k e^{ikx}.
class SparseSeries {
 public:
  SparseSeries() = default;

  // S_{<= kappa} f, kept exactly: the cutoff vanishes beyond |k| = 2 kappa.
  static SparseSeries low_pass(const RealVec& f, double kappa) {
    const int n = static_cast<int>(f.size());
    const ComplexVec spec = spectral::spectrum(f);
    SparseSeries s;
    s.mean_ = spec[0].real() / n * spectral::lp::low(0.0, kappa);
    const int kmax = std::min(static_cast<int>(std::floor(2.0 * kappa)), n / 2 - 1);
    for (int k = 1; k <= kmax; ++k) s.coeffs_.push_back(spec[k] / double(n) * spectral::lp::low(k, kappa));
    return s;
  }

  static SparseSeries constant(double value) {
    SparseSeries s;
    s.mean_ = value;
    return s;
  }

  // Value and first two derivatives at x.
  std::array<double, 3> eval(double x) const {
    std::array<double, 3> out{mean_, 0.0, 0.0};
    const Complex step = std::exp(Complex(0.0, x));
    Complex phase = step;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      const double k = static_cast<double>(i + 1);
      const Complex term = coeffs_[i] * phase;
      out[0] += 2.0 * term.real();
      out[1] += -2.0 * k * term.imag();
      out[2] += -2.0 * k * k * term.real();
      phase *= step;
    }
    return out;
  }

  RealVec on_grid(int n) const {
    ComplexVec spec(n, 0.0);
    spec[0] = mean_ * n;
    for (std::size_t i = 0; i < coeffs_.size() && static_cast<int>(i + 1) < n / 2; ++i) {
      spec[i + 1] = coeffs_[i] * double(n);
      spec[n - 1 - i] = std::conj(coeffs_[i]) * double(n);
    }
    return spectral::from_spectrum<double>(spec);
  }

  int bandwidth() const { return static_cast<int>(coeffs_.size()); }
  bool is_constant() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Complex& c) { return c == 0.0; });
  }

 private:
  double mean_ = 0.0;
  std::vector<Complex> coeffs_;
};

struct CoefficientSample {
  double V = 0.0, V_x = 0.0, V_xx = 0.0;
  double a = 0.0, a_x = 0.0, a_xx = 0.0;
};

// V_lambda and a_lambda as time-tagged sparse series, linear in t between
// snapshots. A single snapshot gives time-frozen coefficients.
class TruncatedCoeffs {
 public:
  static TruncatedCoeffs constant(double velocity, double taylor) {
    if (!(taylor > 0.0)) throw std::invalid_argument("Taylor coefficient must be positive");
    TruncatedCoeffs c;
    c.times_ = {0.0};
    c.velocity_ = {SparseSeries::constant(velocity)};
    c.taylor_ = {SparseSeries::constant(taylor)};
    c.min_taylor_ = taylor;
    return c;
  }

  static TruncatedCoeffs from_fields(const std::vector<double>& times, const std::vector<RealVec>& velocity,
                                     const std::vector<RealVec>& taylor, const FrequencyConstants& k) {
    k.validate();
    if (times.empty() || times.size() != velocity.size() || times.size() != taylor.size())
      throw std::invalid_argument("coefficient snapshots are inconsistent");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw std::invalid_argument("snapshot times must increase");
    TruncatedCoeffs c;
    c.times_ = times;
    c.min_taylor_ = std::numeric_limits<double>::infinity();
    double raw_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
      c.velocity_.push_back(SparseSeries::low_pass(velocity[i], k.truncation()));
      c.taylor_.push_back(SparseSeries::low_pass(taylor[i], k.truncation()));
      const RealVec grid = c.taylor_.back().on_grid(static_cast<int>(taylor[i].size()));
      c.min_taylor_ = std::min(c.min_taylor_, *std::min_element(grid.begin(), grid.end()));
      raw_min = std::min(raw_min, *std::min_element(taylor[i].begin(), taylor[i].end()));
    }
    if (!(c.min_taylor_ >= raw_min / 2.0) || !(c.min_taylor_ > 0.0))
      throw std::runtime_error("truncated Taylor coefficient fell below half its minimum");
    return c;
  }

  // Snapshot i alone, frozen in time.
  TruncatedCoeffs frozen_at(std::size_t i) const {
    TruncatedCoeffs c;
    c.times_ = {times_.at(i)};
    c.velocity_ = {velocity_.at(i)};
    c.taylor_ = {taylor_.at(i)};
    c.min_taylor_ = min_taylor_;
    return c;
  }

  bool time_independent() const { return times_.size() == 1; }
  bool is_constant() const { return time_independent() && velocity_[0].is_constant() && taylor_[0].is_constant(); }
  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  double min_taylor() const { return min_taylor_; }

  CoefficientSample eval(double t, double x) const {
    std::size_t lo = 0;
    double w = 0.0;
    locate(t, lo, w);
    auto v0 = velocity_[lo].eval(x), a0 = taylor_[lo].eval(x);
    if (w > 0.0) {
      const auto v1 = velocity_[lo + 1].eval(x), a1 = taylor_[lo + 1].eval(x);
      for (int i = 0; i < 3; ++i) {
        v0[i] += w * (v1[i] - v0[i]);
        a0[i] += w * (a1[i] - a0[i]);
      }
    }
    return {v0[0], v0[1], v0[2], a0[0], a0[1], a0[2]};
  }

  // Grid samples of (V_lambda, a_lambda) at time t.
  std::pair<RealVec, RealVec> on_grid(double t, int n) const {
    std::size_t lo = 0;
    double w = 0.0;
    locate(t, lo, w);
    RealVec v = velocity_[lo].on_grid(n), a = taylor_[lo].on_grid(n);
    if (w > 0.0) {
      const RealVec v1 = velocity_[lo + 1].on_grid(n), a1 = taylor_[lo + 1].on_grid(n);
      for (int j = 0; j < n; ++j) {
        v[j] += w * (v1[j] - v[j]);
        a[j] += w * (a1[j] - a[j]);
      }
    }
    return {v, a};
  }

 private:
  void locate(double t, std::size_t& lo, double& w) const {
    lo = 0;
    w = 0.0;
    if (times_.size() == 1) return;
    const double tol = 1e-12 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - tol || t > times_.back() + tol)
      throw std::out_of_range("time " + std::to_string(t) + " outside the coefficient snapshots");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    lo = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin() - 1);
    if (lo + 1 >= times_.size()) {
      lo = times_.size() - 1;
      return;
    }
    w = std::clamp((t - times_[lo]) / (times_[lo + 1] - times_[lo]), 0.0, 1.0);
  }

  std::vector<double> times_;
  std::vector<SparseSeries> velocity_, taylor_;
  double min_taylor_ = 0.0;
};

// Traces of a Zakharov trajectory turned into truncated coefficients.
inline TruncatedCoeffs coefficients_from_trajectory(const zakharov::ZakharovSystem& sys, const zakharov::Trajectory& traj,
                                                    const FrequencyConstants& k) {
  std::vector<double> times;
  std::vector<RealVec> velocity, taylor;
  for (const auto& s : traj.snapshots) {
    const zakharov::TraceSet tr = sys.traces(s, true);
    times.push_back(s.t);
    velocity.push_back(tr.V);
    taylor.push_back(tr.a);
  }
  return TruncatedCoeffs::from_fields(times, velocity, taylor, k);
}

// H = V xi + sqrt(a |xi|) and the partial derivatives the flow needs.
struct HamiltonianValue {
  double H = 0.0, H_xi = 0.0, H_x = 0.0;
  double H_xixi = 0.0, H_xxi = 0.0, H_xx = 0.0;
};

inline HamiltonianValue hamiltonian(const CoefficientSample& c, double xi) {
  if (xi == 0.0) throw std::domain_error("hamiltonian is singular at xi = 0");
  if (!(c.a > 0.0)) throw std::domain_error("Taylor coefficient must be positive");
  const double ax = std::abs(xi), sgn = xi > 0.0 ? 1.0 : -1.0;
  const double root_a = std::sqrt(c.a);
  const double root_a_x = c.a_x / (2.0 * root_a);
  const double root_a_xx = c.a_xx / (2.0 * root_a) - c.a_x * c.a_x / (4.0 * c.a * root_a);
  const double root_xi = std::sqrt(ax);
  HamiltonianValue h;
  h.H = c.V * xi + root_a * root_xi;
  h.H_xi = c.V + 0.5 * root_a * sgn / root_xi;
  h.H_x = c.V_x * xi + root_a_x * root_xi;
  h.H_xixi = -0.25 * root_a / (ax * root_xi);
  h.H_xxi = c.V_x + 0.5 * root_a_x * sgn / root_xi;
  h.H_xx = c.V_xx * xi + root_a_xx * root_xi;
  return h;
}

inline HamiltonianValue hamiltonian_eval(const TruncatedCoeffs& coeffs, double t, double x, double xi) {
  return hamiltonian(coeffs.eval(t, x), xi);
}

// One characteristic with its phase (the Legendre integral of xi H_xi - H)
// and the Jacobian of (x, xi) with respect to the initial data.
struct RayState {
  double x = 0.0, xi = 0.0, phase = 0.0;
  double dx_dx = 1.0, dx_dxi = 0.0, dxi_dx = 0.0, dxi_dxi = 1.0;
};

class FlowAbort : public std::runtime_error {
 public:
  FlowAbort(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct FlowOptions {
  double max_dt = 1e-3;
  double band_lo = 0.0;  // |xi| must stay in [band_lo, band_hi] when band_hi > 0
  double band_hi = 0.0;
};

inline FlowOptions band_options(double lambda, double max_dt = 1e-3) {
  return {max_dt, lambda / 4.0, 4.0 * lambda};
}

namespace detail {

inline RayState ray_derivative(const TruncatedCoeffs& coeffs, double t, const RayState& r) {
  const HamiltonianValue h = hamiltonian_eval(coeffs, t, r.x, r.xi);
  RayState d;
  d.x = h.H_xi;
  d.xi = -h.H_x;
  d.phase = r.xi * h.H_xi - h.H;
  d.dx_dx = h.H_xxi * r.dx_dx + h.H_xixi * r.dxi_dx;
  d.dx_dxi = h.H_xxi * r.dx_dxi + h.H_xixi * r.dxi_dxi;
  d.dxi_dx = -h.H_xx * r.dx_dx - h.H_xxi * r.dxi_dx;
  d.dxi_dxi = -h.H_xx * r.dx_dxi - h.H_xxi * r.dxi_dxi;
  return d;
}

inline RayState axpy(const RayState& r, const RayState& d, double c) {
  return {r.x + c * d.x,          r.xi + c * d.xi,          r.phase + c * d.phase,   r.dx_dx + c * d.dx_dx,
          r.dx_dxi + c * d.dx_dxi, r.dxi_dx + c * d.dxi_dx, r.dxi_dxi + c * d.dxi_dxi};
}

inline RayState rk4(const TruncatedCoeffs& coeffs, double t, const RayState& r, double dt) {
  const RayState k1 = ray_derivative(coeffs, t, r);
  const RayState k2 = ray_derivative(coeffs, t + 0.5 * dt, axpy(r, k1, 0.5 * dt));
  const RayState k3 = ray_derivative(coeffs, t + 0.5 * dt, axpy(r, k2, 0.5 * dt));
  const RayState k4 = ray_derivative(coeffs, t + dt, axpy(r, k3, dt));
  RayState out = r;
  auto comb = [dt](double a, double b, double c, double d) { return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d); };
  out.x += comb(k1.x, k2.x, k3.x, k4.x);
  out.xi += comb(k1.xi, k2.xi, k3.xi, k4.xi);
  out.phase += comb(k1.phase, k2.phase, k3.phase, k4.phase);
  out.dx_dx += comb(k1.dx_dx, k2.dx_dx, k3.dx_dx, k4.dx_dx);
  out.dx_dxi += comb(k1.dx_dxi, k2.dx_dxi, k3.dx_dxi, k4.dx_dxi);
  out.dxi_dx += comb(k1.dxi_dx, k2.dxi_dx, k3.dxi_dx, k4.dxi_dx);
  out.dxi_dxi += comb(k1.dxi_dxi, k2.dxi_dxi, k3.dxi_dxi, k4.dxi_dxi);
  return out;
}

}  // namespace detail

// Rays launched at time s, stored at the requested times (either side of s).
struct RayBundle {
  double s = 0.0;
  std::vector<double> times;
  std::vector<std::pair<double, double>> initial;  // (x, xi) at s
  std::vector<std::vector<RayState>> states;       // [time][ray]

  std::size_t ray_count() const { return initial.size(); }
};

inline RayState advance_ray(const TruncatedCoeffs& coeffs, RayState r, double from, double to, const FlowOptions& opt) {
  if (from == to) return r;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(to - from) / opt.max_dt - 1e-9)));
  const double dt = (to - from) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = from + i * dt;
    r = detail::rk4(coeffs, t, r, dt);
    if (!std::isfinite(r.x) || !std::isfinite(r.xi)) throw FlowAbort("non-finite ray", t + dt);
    if (opt.band_hi > 0.0 && (std::abs(r.xi) < opt.band_lo || std::abs(r.xi) > opt.band_hi))
      throw FlowAbort("ray left the frequency band at t = " + std::to_string(t + dt), t + dt);
  }
  return r;
}

inline RayBundle flow_integrate(const TruncatedCoeffs& coeffs, const std::vector<std::pair<double, double>>& init, double s,
                                const std::vector<double>& times, const FlowOptions& opt = {}) {
  RayBundle b;
  b.s = s;
  b.times = times;
  b.initial = init;
  b.states.assign(times.size(), std::vector<RayState>(init.size()));
  std::vector<std::size_t> forward, backward;
  for (std::size_t i = 0; i < times.size(); ++i) (times[i] >= s ? forward : backward).push_back(i);
  std::sort(forward.begin(), forward.end(), [&](auto a, auto c) { return times[a] < times[c]; });
  std::sort(backward.begin(), backward.end(), [&](auto a, auto c) { return times[a] > times[c]; });
  for (std::size_t r = 0; r < init.size(); ++r) {
    for (const auto* order : {&forward, &backward}) {
      RayState state;
      state.x = init[r].first;
      state.xi = init[r].second;
      double t = s;
      for (std::size_t i : *order) {
        state = advance_ray(coeffs, state, t, times[i], opt);
        t = times[i];
        b.states[i][r] = state;
      }
    }
  }
  return b;
}

// Jacobian by centered differences of neighbouring rays, as an independent
// route to the variational equations.
inline std::array<double, 4> linearized_flow_fd(const TruncatedCoeffs& coeffs, double x, double xi, double s, double t,
                                                double hx, double hxi, const FlowOptions& opt = {}) {
  auto run = [&](double x0, double xi0) {
    RayState r;
    r.x = x0;
    r.xi = xi0;
    return advance_ray(coeffs, r, s, t, opt);
  };
  const RayState xp = run(x + hx, xi), xm = run(x - hx, xi), kp = run(x, xi + hxi), km = run(x, xi - hxi);
  return {(xp.x - xm.x) / (2 * hx), (kp.x - km.x) / (2 * hxi), (xp.xi - xm.xi) / (2 * hx), (kp.xi - km.xi) / (2 * hxi)};
}

// sup |d_x x^t - 1| (the scaled bilipschitz defect) and the band drift
// sup ||xi^t|/|xi| - 1|.
struct BilipschitzReport {
  double defect = 0.0;
  double band_drift = 0.0;
  double min_dx_dx = std::numeric_limits<double>::infinity();
  double max_dx_dx = 0.0;
};

inline BilipschitzReport bilipschitz_report(const RayBundle& b) {
  BilipschitzReport rep;
  for (const auto& row : b.states)
    for (std::size_t r = 0; r < row.size(); ++r) {
      rep.defect = std::max(rep.defect, std::abs(row[r].dx_dx - 1.0));
      rep.min_dx_dx = std::min(rep.min_dx_dx, row[r].dx_dx);
      rep.max_dx_dx = std::max(rep.max_dx_dx, row[r].dx_dx);
      rep.band_drift = std::max(rep.band_drift, std::abs(std::abs(row[r].xi) / std::abs(b.initial[r].second) - 1.0));
    }
  return rep;
}

// -d_xi x^t against (t - s) for one ray, normalized by the constant
// coefficient prediction 1/4 mean(sqrt a) lambda^{-3/2}.
struct SpreadingReport {
  std::vector<double> elapsed, spread, ratio;
  LinearFit fit;
  double min_ratio = 0.0, max_ratio = 0.0;
  bool sign_consistent = true;  // -d_xi x^t has the sign of t - s
};

inline SpreadingReport spreading_report(const RayBundle& b, std::size_t ray, const TruncatedCoeffs& coeffs, double lambda) {
  SpreadingReport rep;
  double root_a_sum = 0.0;
  for (std::size_t i = 0; i < b.times.size(); ++i)
    root_a_sum += std::sqrt(coeffs.eval(b.times[i], b.states[i][ray].x).a);
  const double root_a = root_a_sum / b.times.size();
  const double unit = 0.25 * root_a * std::pow(lambda, -1.5);
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < b.times.size(); ++i) {
    const double dt = b.times[i] - b.s;
    const double spread = -b.states[i][ray].dx_dxi;
    rep.elapsed.push_back(dt);
    rep.spread.push_back(spread);
    if (std::abs(dt) > 1e-12) {
      const double ratio = spread / (dt * unit);
      rep.ratio.push_back(ratio);
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      if (spread * dt <= 0.0) rep.sign_consistent = false;
    }
  }
  rep.fit = fit_line(rep.elapsed, rep.spread);
  return rep;
}

inline double torus_distance(double a, double b) { return std::abs(std::remainder(a - b, spectral::kTwoPi)); }

// Largest |xi_1 - xi_2| |t - s| / lambda^{3/4} over ray pairs whose positions
// agree within lambda^{-3/4} at both stored times t and s.
inline double two_point_constant(const RayBundle& b, double lambda) {
  const double width = std::pow(lambda, -0.75), scale = std::pow(lambda, 0.75);
  double worst = 0.0;
  const std::size_t nt = b.times.size(), nr = b.ray_count();
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = i + 1; j < nr; ++j) {
      const double dxi = std::abs(b.initial[i].second - b.initial[j].second);
      std::vector<std::size_t> close;
      for (std::size_t k = 0; k < nt; ++k)
        if (torus_distance(b.states[k][i].x, b.states[k][j].x) <= width) close.push_back(k);
      if (close.size() < 2) continue;
      double tmin = b.times[close.front()], tmax = tmin;
      for (std::size_t k : close) {
        tmin = std::min(tmin, b.times[k]);
        tmax = std::max(tmax, b.times[k]);
      }
      worst = std::max(worst, dxi * (tmax - tmin) / scale);
    }
  return worst;
}

// Largest |x_1^t - x_2^t| / (|x_1^s - x_2^s| + lambda^{-1/2} |t - s|) over
// ray pairs and pairs of stored times.
inline double persistence_constant(const RayBundle& b, double lambda) {
  const double rate = std::pow(lambda, -0.5);
  double worst = 0.0;
  const std::size_t nt = b.times.size(), nr = b.ray_count();
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = i + 1; j < nr; ++j)
      for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t c = 0; c < nt; ++c) {
          if (a == c) continue;
          const double num = torus_distance(b.states[a][i].x, b.states[a][j].x);
          const double den = torus_distance(b.states[c][i].x, b.states[c][j].x) + rate * std::abs(b.times[a] - b.times[c]);
          if (den > 0.0) worst = std::max(worst, num / den);
        }
  return worst;
}

// ---- F1 = T_{q^{-1}} d_x^3 eta_lambda with q = |xi| - i eta_x xi ----

inline RealVec compute_F1(const RealVec& eta, const FrequencyConstants& k, const paradiff::AdmissibleCutoff& cut = {}) {
  k.validate();
  const int n = static_cast<int>(eta.size());
  if (k.lambda > n / 8) throw std::invalid_argument("F1 needs lambda <= n/8");
  const RealVec eta_x = spectral::derivative(eta);
  for (double s : eta_x)
    if (std::abs(s) > 0.5) throw std::domain_error("|eta_x| too large for the q^{-1} guard");
  const RealVec source = spectral::derivative(spectral::lp::project_low(eta, k.truncation()), 3);
  paradiff::SymbolGrid q_inv;
  q_inv.n = n;
  q_inv.order = -1.0;
  q_inv.sample = [eta_x](double xi, ComplexVec& values) {
    for (std::size_t j = 0; j < eta_x.size(); ++j) values[j] = 1.0 / Complex(std::abs(xi), -eta_x[j] * xi);
  };
  return paradiff::paradiff_op(q_inv, source, cut);
}

// G_V = d_x^2 V_lambda - (d_t + V_lambda d_x) F1 with the time derivative by
// centered differences across snapshots index -/+ offset.
struct IntegrationResidual {
  double time = 0.0;
  double g_v_sup = 0.0;
  double d2v_sup = 0.0;
  double f1_sup = 0.0;
};

inline IntegrationResidual integration_residual(const zakharov::ZakharovSystem& sys, const zakharov::Trajectory& traj,
                                                int index, int offset, const FrequencyConstants& k) {
  const int count = static_cast<int>(traj.snapshots.size());
  if (offset < 1 || index - offset < 0 || index + offset >= count)
    throw std::invalid_argument("integration residual needs snapshots on both sides");
  const auto& mid = traj.snapshots[index];
  const auto& lo = traj.snapshots[index - offset];
  const auto& hi = traj.snapshots[index + offset];
  const zakharov::TraceSet tr = sys.traces(mid, false);
  const RealVec v_lambda = spectral::lp::project_low(tr.V, k.truncation());
  const RealVec d2v = spectral::derivative(v_lambda, 2);
  const RealVec f_mid = compute_F1(mid.eta, k), f_lo = compute_F1(lo.eta, k), f_hi = compute_F1(hi.eta, k);
  const RealVec f_x = spectral::derivative(f_mid);
  const double span = hi.t - lo.t;
  RealVec g_v(d2v.size());
  for (std::size_t j = 0; j < g_v.size(); ++j) g_v[j] = d2v[j] - (f_hi[j] - f_lo[j]) / span - v_lambda[j] * f_x[j];
  return {mid.t, spectral::linf_norm(g_v), spectral::linf_norm(d2v), spectral::linf_norm(f_mid)};
}

// Snapshot minimizing |lambda^{-3/2} F1 xi|_inf at xi = lambda; ties go to
// the earliest snapshot.
inline std::size_t select_s0(const std::vector<RealVec>& etas, const FrequencyConstants& k) {
  if (etas.empty()) throw std::invalid_argument("select_s0 needs snapshots");
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double v = std::pow(k.lambda, -0.5) * spectral::linf_norm(compute_F1(etas[i], k));
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

// ---- eikonal phase on a tube of rays ----

// psi_T(t, y) carried by rays launched across the tube at s0 with linear data
// xi (y - x). At each stored time the phase is a cubic Hermite interpolant in
// y (slopes xi^t) and d_y psi a cubic Hermite interpolant of xi^t (slopes
// d_x xi^t / d_x x^t).
class EikonalPhase {
 public:
  EikonalPhase() = default;
  EikonalPhase(double x, double xi, double s0, RayBundle bundle) : x_(x), xi_(xi), s0_(s0), bundle_(std::move(bundle)) {
    for (std::size_t i = 0; i < bundle_.times.size(); ++i) {
      const auto& row = bundle_.states[i];
      for (std::size_t r = 1; r < row.size(); ++r)
        if (!(row[r].x > row[r - 1].x))
          throw std::runtime_error("caustic: rays cross in the tube at t = " + std::to_string(bundle_.times[i]));
    }
  }

  double x() const { return x_; }
  double xi() const { return xi_; }
  double s0() const { return s0_; }
  const RayBundle& bundle() const { return bundle_; }
  std::size_t time_count() const { return bundle_.times.size(); }
  double time(std::size_t i) const { return bundle_.times[i]; }

  // Central characteristic at stored time i.
  const RayState& center(std::size_t i) const { return bundle_.states[i][bundle_.ray_count() / 2]; }

  double tube_lo(std::size_t i) const { return bundle_.states[i].front().x; }
  double tube_hi(std::size_t i) const { return bundle_.states[i].back().x; }

  // (psi, d_y psi) at an unwrapped y inside the tube at stored time i.
  std::pair<double, double> eval(std::size_t i, double y) const {
    const auto& row = bundle_.states[i];
    if (y < row.front().x || y > row.back().x) throw std::out_of_range("point outside the eikonal tube");
    auto it = std::upper_bound(row.begin(), row.end(), y, [](double v, const RayState& r) { return v < r.x; });
    std::size_t hi = static_cast<std::size_t>(it - row.begin());
    if (hi >= row.size()) hi = row.size() - 1;
    if (hi == 0) hi = 1;
    const RayState& a = row[hi - 1];
    const RayState& b = row[hi];
    const double h = b.x - a.x, s = (y - a.x) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const double psi = h00 * a.phase + h10 * h * a.xi + h01 * b.phase + h11 * h * b.xi;
    const double curv_a = a.dxi_dx / a.dx_dx, curv_b = b.dxi_dx / b.dx_dx;
    const double dpsi = h00 * a.xi + h10 * h * curv_a + h01 * b.xi + h11 * h * curv_b;
    return {psi, dpsi};
  }

 private:
  double x_ = 0.0, xi_ = 0.0, s0_ = 0.0;
  RayBundle bundle_;
};

inline EikonalPhase eikonal_solve(const TruncatedCoeffs& coeffs, double x, double xi, double s0,
                                  const std::vector<double>& times, double half_width, int rays = 33,
                                  const FlowOptions& opt = {}) {
  if (rays < 3 || rays % 2 == 0) throw std::invalid_argument("tube needs an odd ray count >= 3");
  std::vector<std::pair<double, double>> init;
  for (int r = 0; r < rays; ++r) init.emplace_back(x - half_width + 2.0 * half_width * r / (rays - 1), xi);
  RayBundle b = flow_integrate(coeffs, init, s0, times, opt);
  // Linear data xi (y - x) at s0; the Legendre integral carries it forward.
  for (auto& row : b.states)
    for (std::size_t r = 0; r < row.size(); ++r) row[r].phase += xi * (init[r].first - x);
  return EikonalPhase(x, xi, s0, std::move(b));
}

// sup over the tube |y - x^t| <= width of |d_y psi(t, y) - xi^t| at each stored time.
inline double eikonal_drift(const EikonalPhase& phase, double width, int samples = 65) {
  double worst = 0.0;
  for (std::size_t i = 0; i < phase.time_count(); ++i) {
    const RayState& c = phase.center(i);
    for (int m = 0; m < samples; ++m) {
      const double y = c.x - width + 2.0 * width * m / (samples - 1);
      if (y < phase.tube_lo(i) || y > phase.tube_hi(i)) continue;
      worst = std::max(worst, std::abs(phase.eval(i, y).second - c.xi));
    }
  }
  return worst;
}

}  // namespace wwlab::hamiltonian
