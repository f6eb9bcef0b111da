#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwlab/fit.hpp"
#include "wwlab/hamiltonian.hpp"
#include "wwlab/paradiff.hpp"
#include "wwlab/spectral.hpp"

namespace wwlab::dispersive {

using hamiltonian::TruncatedCoeffs;
using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

// kLeft:         V d_x + i sqrt(a) |D|^{1/2}
// kSymmetrized:  V d_x + V_x/2 + i (sqrt(a) |D|^{1/2} + |D|^{1/2} sqrt(a)) / 2,
//                skew-adjoint on L^2.
enum class Quantization { kLeft, kSymmetrized };

inline std::string to_string(Quantization q) { return q == Quantization::kLeft ? "left" : "symmetrized"; }

inline ComplexVec half_derivative(const ComplexVec& u) {
  return spectral::fourier_multiplier(u, [](double xi) { return std::sqrt(std::abs(xi)); });
}

// i H(t, y, D) u for H = V_lambda xi + sqrt(a_lambda |xi|). With
// dispersive = false only the transport part is kept.
inline ComplexVec apply_H(const TruncatedCoeffs& coeffs, double t, const ComplexVec& u, Quantization q = Quantization::kLeft,
                          bool dispersive = true) {
  const int n = static_cast<int>(u.size());
  const auto [velocity, taylor] = coeffs.on_grid(t, n);
  const ComplexVec u_x = spectral::derivative(u);
  ComplexVec out(n);
  for (int j = 0; j < n; ++j) out[j] = velocity[j] * u_x[j];
  if (q == Quantization::kSymmetrized) {
    const RealVec v_x = spectral::derivative(velocity);
    for (int j = 0; j < n; ++j) out[j] += 0.5 * v_x[j] * u[j];
  }
  if (!dispersive) return out;
  RealVec root_a(n);
  for (int j = 0; j < n; ++j) {
    if (!(taylor[j] > 0.0)) throw std::domain_error("Taylor coefficient must be positive");
    root_a[j] = std::sqrt(taylor[j]);
  }
  const ComplexVec half = half_derivative(u);
  if (q == Quantization::kLeft) {
    for (int j = 0; j < n; ++j) out[j] += Complex(0.0, 1.0) * root_a[j] * half[j];
    return out;
  }
  ComplexVec weighted(n);
  for (int j = 0; j < n; ++j) weighted[j] = root_a[j] * u[j];
  const ComplexVec half_weighted = half_derivative(weighted);
  for (int j = 0; j < n; ++j) out[j] += Complex(0.0, 0.5) * (root_a[j] * half[j] + half_weighted[j]);
  return out;
}

// Sharp projector onto lo <= |xi| <= hi.
inline ComplexVec band_projection(const ComplexVec& u, double lo, double hi) {
  return spectral::fourier_multiplier(u, [lo, hi](double xi) {
    const double a = std::abs(xi);
    return (a >= lo && a <= hi) ? 1.0 : 0.0;
  });
}

struct RunSpec {
  double lambda = 256.0;
  TruncatedCoeffs coeffs = TruncatedCoeffs::constant(0.0, 9.81);
  ComplexVec initial;
  std::function<ComplexVec(double)> source;  // f(t); empty means f = 0
  double t0 = 0.0;
  double t_end = 0.25;
  double dt = 1e-3;
  int store_every = 1;
  Quantization quantization = Quantization::kSymmetrized;
  bool dispersive = true;
  bool project_band = true;  // re-project onto [lambda/4, 4 lambda] each step
  bool exact = false;        // exact multiplier propagation, constant coefficients only
  double cfl = 0.5;
};

struct DispersiveRun {
  double lambda = 0.0;
  std::vector<double> times;
  std::vector<ComplexVec> states;
  std::vector<double> source_norms;  // |f(t)|_{L^2} at stored times
  double leakage = 0.0;              // L^2 mass removed by band re-projection
};

inline void check_finite(const ComplexVec& u, double t) {
  for (const Complex& v : u)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("non-finite dispersive state at t = " + std::to_string(t));
}

// Solution of (d_t + iH) u = f. The exact branch evaluates the Duhamel
// integral of each mode in closed form for sources constant in time.
inline DispersiveRun evolve_dispersive(const RunSpec& spec) {
  const int n = static_cast<int>(spec.initial.size());
  if (n == 0) throw std::invalid_argument("empty initial data");
  const int steps = static_cast<int>(std::llround((spec.t_end - spec.t0) / spec.dt));
  if (steps < 1 || std::abs(steps * spec.dt - (spec.t_end - spec.t0)) > 1e-9)
    throw std::invalid_argument("interval must be a positive multiple of dt");
  DispersiveRun run;
  run.lambda = spec.lambda;
  auto source_at = [&](double t) { return spec.source ? spec.source(t) : ComplexVec(n, 0.0); };
  auto store = [&](double t, const ComplexVec& u) {
    run.times.push_back(t);
    run.states.push_back(u);
    run.source_norms.push_back(spec.source ? spectral::l2_norm(source_at(t)) : 0.0);
  };

  if (spec.exact) {
    if (!spec.coeffs.is_constant()) throw std::invalid_argument("exact propagation needs constant coefficients");
    const auto sample = spec.coeffs.eval(spec.t0, 0.0);
    const ComplexVec u0 = spectral::spectrum(spec.initial);
    ComplexVec f0;
    if (spec.source) f0 = spectral::spectrum(spec.source(spec.t0));
    for (int i = 0; i <= steps; ++i) {
      if (i % spec.store_every != 0 && i != steps) continue;
      const double elapsed = i * spec.dt;
      ComplexVec spec_t(n);
      for (int idx = 0; idx < n; ++idx) {
        const double xi = spectral::frequency(idx, n);
        const double omega = sample.V * xi + (spec.dispersive ? std::sqrt(sample.a * std::abs(xi)) : 0.0);
        const Complex prop = std::exp(Complex(0.0, -omega * elapsed));
        spec_t[idx] = prop * u0[idx];
        if (spec.source) {
          // int_0^t e^{-i omega (t - s)} ds
          const Complex weight = omega == 0.0 ? Complex(elapsed) : (1.0 - prop) / Complex(0.0, omega);
          spec_t[idx] += weight * f0[idx];
        }
      }
      store(spec.t0 + elapsed, fft::inverse(spec_t));
    }
    return run;
  }

  const auto [v0, a0] = spec.coeffs.on_grid(spec.t0, n);
  double vmax = spectral::linf_norm(v0), amax = spectral::linf_norm(a0);
  const double limit = spec.cfl / (4.0 * spec.lambda * vmax + std::sqrt(4.0 * spec.lambda * amax));
  if (spec.dt > limit)
    throw std::runtime_error("dispersive time step " + std::to_string(spec.dt) + " exceeds CFL limit " +
                             std::to_string(limit));
  auto rhs = [&](double t, const ComplexVec& u) {
    ComplexVec out = apply_H(spec.coeffs, t, u, spec.quantization, spec.dispersive);
    const ComplexVec f = source_at(t);
    for (int j = 0; j < n; ++j) out[j] = f[j] - out[j];
    return out;
  };
  ComplexVec u = spec.initial;
  store(spec.t0, u);
  for (int i = 1; i <= steps; ++i) {
    const double t = spec.t0 + (i - 1) * spec.dt, h = spec.dt;
    auto axpy = [n](const ComplexVec& a, const ComplexVec& b, double c) {
      ComplexVec out(n);
      for (int j = 0; j < n; ++j) out[j] = a[j] + c * b[j];
      return out;
    };
    const ComplexVec k1 = rhs(t, u);
    const ComplexVec k2 = rhs(t + 0.5 * h, axpy(u, k1, 0.5 * h));
    const ComplexVec k3 = rhs(t + 0.5 * h, axpy(u, k2, 0.5 * h));
    const ComplexVec k4 = rhs(t + h, axpy(u, k3, h));
    for (int j = 0; j < n; ++j) u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    if (spec.project_band) {
      const ComplexVec kept = band_projection(u, spec.lambda / 4.0, 4.0 * spec.lambda);
      double removed = 0.0;
      for (int j = 0; j < n; ++j) removed += std::norm(u[j] - kept[j]);
      run.leakage += std::sqrt(removed * spectral::kTwoPi / n);
      u = kept;
    }
    check_finite(u, t + h);
    if (i % spec.store_every == 0 || i == steps) store(spec.t0 + i * spec.dt, u);
  }
  return run;
}

// ---- space-time norms over the stored times (trapezoid in t) ----

inline double time_l2(const std::vector<double>& times, const std::vector<double>& values) {
  double acc = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    acc += 0.5 * (times[i] - times[i - 1]) * (values[i] * values[i] + values[i - 1] * values[i - 1]);
  return std::sqrt(acc);
}

inline double time_l1(const std::vector<double>& times, const std::vector<double>& values) {
  double acc = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
  return acc;
}

inline double linf_l2(const DispersiveRun& run) {
  double m = 0.0;
  for (const auto& u : run.states) m = std::max(m, spectral::l2_norm(u));
  return m;
}

inline double data_norm(const DispersiveRun& run) { return linf_l2(run) + time_l1(run.times, run.source_norms); }

// Q = |u|_{L^2 L^inf} / (|f|_{L^1 L^2} + |u|_{L^inf L^2}), L^inf on an
// oversampled grid. Returns NaN for the zero solution.
inline double strichartz_quotient(const DispersiveRun& run, int oversample = 8) {
  std::vector<double> sup;
  for (const auto& u : run.states) sup.push_back(spectral::linf_oversampled(u, oversample));
  const double denom = data_norm(run);
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return time_l2(run.times, sup) / denom;
}

// Band-limited bump centered at x0 with spectrum psi_lambda(xi) on xi > 0.
inline ComplexVec concentrated_bump(int n, double lambda, double x0) {
  ComplexVec spec(n, 0.0);
  for (int idx = 0; idx < n; ++idx) {
    const int k = spectral::frequency(idx, n);
    if (k <= 0) continue;
    spec[idx] = spectral::lp::band(k, lambda) * std::exp(Complex(0.0, -k * x0));
  }
  ComplexVec u = fft::inverse(spec);
  const double norm = spectral::l2_norm(u);
  for (auto& v : u) v /= norm;
  return u;
}

struct ScanPoint {
  double scale = 0.0;  // lambda, kappa, mu or |t - s|
  double value = 0.0;
};

struct ScanReport {
  std::vector<ScanPoint> points;
  LinearFit fit;
};

inline ScanReport fit_scan(std::vector<ScanPoint> points) {
  if (points.size() < 2) throw std::invalid_argument("scan needs at least two points");
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(p.scale);
    y.push_back(p.value);
  }
  return {std::move(points), fit_exponent(x, y)};
}

struct StrichartzOptions {
  double velocity = 0.0;
  double taylor = 9.81;
  double t_end = 0.25;
  int time_samples = 256;
  int oversample = 8;
  bool dispersive = true;
};

// Q(lambda) for the concentrated bump under exact constant-coefficient
// propagation on an n = 8 lambda grid.
inline ScanReport strichartz_scan(const std::vector<double>& lambdas, const StrichartzOptions& opt = {}) {
  if (lambdas.size() < 4) throw std::invalid_argument("Strichartz fit needs at least four lambdas");
  std::vector<ScanPoint> pts;
  for (double lambda : lambdas) {
    const int n = static_cast<int>(8 * lambda);
    RunSpec spec;
    spec.lambda = lambda;
    spec.coeffs = TruncatedCoeffs::constant(opt.velocity, opt.taylor);
    spec.initial = concentrated_bump(n, lambda, spectral::kPi);
    spec.t_end = opt.t_end;
    spec.dt = opt.t_end / opt.time_samples;
    spec.exact = true;
    spec.dispersive = opt.dispersive;
    pts.push_back({lambda, strichartz_quotient(evolve_dispersive(spec), opt.oversample)});
  }
  return fit_scan(std::move(pts));
}

// ---- local smoothing ----

// |w_{x^t, kappa} P u|_{L^2(I; L^2)} / (|u|_{L^inf L^2} + |f|_{L^1 L^2}) with P
// a frequency projection applied at every stored time and x^t the ray.
inline double local_smoothing_ratio(const DispersiveRun& run, const std::vector<double>& ray_x, double kappa,
                                    const std::function<ComplexVec(const ComplexVec&)>& projection) {
  if (ray_x.size() != run.times.size()) throw std::invalid_argument("ray samples do not match the run times");
  std::vector<double> weighted;
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const ComplexVec pu = projection(run.states[i]);
    const RealVec w = paradiff::ls_weight(static_cast<int>(pu.size()), ray_x[i], kappa);
    ComplexVec prod(pu.size());
    for (std::size_t j = 0; j < pu.size(); ++j) prod[j] = w[j] * pu[j];
    weighted.push_back(spectral::l2_norm(prod));
  }
  return time_l2(run.times, weighted) / data_norm(run);
}

// Ray positions for a run, checked against the run's coefficients.
inline std::vector<double> ray_track(const TruncatedCoeffs& coeffs, double x0, double xi0, double s,
                                     const std::vector<double>& times) {
  const hamiltonian::RayBundle b = hamiltonian::flow_integrate(coeffs, {{x0, xi0}}, s, times);
  std::vector<double> xs;
  for (const auto& row : b.states) xs.push_back(row[0].x);
  return xs;
}

// Wave packet chi((x - x0)/kappa^{-3/4}) e^{i xi x} with unit L^2 norm.
inline ComplexVec bump_packet(int n, double x0, double xi, double width) {
  ComplexVec u(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double d = std::remainder(spectral::kTwoPi * j / n - x0, spectral::kTwoPi);
    u[j] = spectral::lp::cutoff(2.0 * d / width) * std::exp(Complex(0.0, xi * spectral::kTwoPi * j / n));
  }
  const double norm = spectral::l2_norm(u);
  for (auto& v : u) v /= norm;
  return u;
}

struct LocalSmoothingOptions {
  double lambda = 1024.0;
  double velocity = 0.0;
  double taylor = 4096.0;
  double t_end = 0.25;
  int time_samples = 256;
  double packet_width = 4.0;  // kappa packet support radius, in units of kappa^{-3/4}
  bool counter_propagating = true;
};

// kappa-scan: a frequency-kappa packet crosses the ray of frequency lambda;
// the weighted norm of S_kappa u is measured on the weight w_{x^t, kappa}.
inline ScanReport local_smoothing_scan(const std::vector<double>& kappas, const LocalSmoothingOptions& opt = {}) {
  std::vector<ScanPoint> pts;
  const TruncatedCoeffs coeffs = TruncatedCoeffs::constant(opt.velocity, opt.taylor);
  const double x_ray = spectral::kPi;
  for (double kappa : kappas) {
    const int size = std::max(64, static_cast<int>(8 * kappa));
    const double unit = std::pow(kappa, -0.75), width = opt.packet_width * unit;
    // The packet starts clear of the weight window. The ray moves right. Counter-propagating data (frequency -kappa) starts
    // to its right, co-propagating data (frequency +kappa, faster) to its left.
    const double sign = opt.counter_propagating ? -1.0 : 1.0;
    const double start = x_ray - sign * (width + 2.0 * unit);
    RunSpec spec;
    spec.lambda = kappa;
    spec.coeffs = coeffs;
    spec.initial = bump_packet(size, start, sign * kappa, width);
    spec.t_end = opt.t_end;
    spec.dt = opt.t_end / opt.time_samples;
    spec.exact = true;
    const DispersiveRun run = evolve_dispersive(spec);
    const std::vector<double> ray = ray_track(coeffs, x_ray, opt.lambda, 0.0, run.times);
    const double ratio = local_smoothing_ratio(run, ray, kappa,
                                               [kappa](const ComplexVec& u) { return spectral::lp::project(u, kappa); });
    pts.push_back({kappa, ratio});
  }
  return fit_scan(std::move(pts));
}

struct GapReport {
  std::vector<ScanPoint> points;    // (mu, measured ratio)
  std::vector<double> normalized;   // ratio / (mu^{-1/2} lambda^{3/8})
  double spread = 0.0;              // max / min of the normalized values
};

// Gap-projection form: broad band data starting on the ray, measured through
// S_{xi^t, lambda, mu} with the time-frozen center xi^t = lambda.
inline GapReport local_smoothing_gap(const std::vector<double>& mus, const LocalSmoothingOptions& opt = {}) {
  const double lambda = opt.lambda, c = 0.25;
  const TruncatedCoeffs coeffs = TruncatedCoeffs::constant(opt.velocity, opt.taylor);
  const int n = static_cast<int>(8 * lambda);
  const double x_ray = spectral::kPi;
  RunSpec spec;
  spec.lambda = lambda;
  spec.coeffs = coeffs;
  spec.initial = concentrated_bump(n, lambda, x_ray);
  spec.t_end = opt.t_end;
  spec.dt = opt.t_end / opt.time_samples;
  spec.exact = true;
  const DispersiveRun run = evolve_dispersive(spec);
  const hamiltonian::RayBundle b = hamiltonian::flow_integrate(coeffs, {{x_ray, lambda}}, 0.0, run.times);
  std::vector<double> ray;
  for (const auto& row : b.states) ray.push_back(row[0].x);
  GapReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double mu : mus) {
    if (!(mu > std::pow(lambda, 0.75) && mu <= lambda))
      throw std::domain_error("mu outside (lambda^{3/4}, lambda]");
    const double xi0 = b.states.front()[0].xi;
    const double ratio = local_smoothing_ratio(run, ray, lambda, [&](const ComplexVec& u) {
      return paradiff::gap_projection(u, xi0, lambda, mu, c);
    });
    rep.points.push_back({mu, ratio});
    const double norm = ratio / (std::pow(mu, -0.5) * std::pow(lambda, 0.375));
    rep.normalized.push_back(norm);
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
  }
  rep.spread = hi / lo;
  return rep;
}

// ---- overlap counting on packet tubes ----

// Phase-space lattice with the exact spacings: x on 2 pi / round(2 pi
// lambda^{3/4}), xi on lambda^{3/4} Z within [xi_lo, xi_hi]. A tube is
// |y - x_T^t| < lambda^{-3/4}.
struct TubeLattice {
  double lambda = 0.0;
  double x_spacing = 0.0;
  double half_width = 0.0;
  std::vector<double> xs, xis;

  static TubeLattice exact(double lambda, double xi_lo_factor = 0.5, double xi_hi_factor = 2.0) {
    TubeLattice l;
    l.lambda = lambda;
    const int nx = static_cast<int>(std::lround(spectral::kTwoPi * std::pow(lambda, 0.75)));
    l.x_spacing = spectral::kTwoPi / nx;
    l.half_width = std::pow(lambda, -0.75);
    for (int i = 0; i < nx; ++i) l.xs.push_back(i * l.x_spacing);
    const double step = std::pow(lambda, 0.75);
    for (int m = static_cast<int>(std::ceil(xi_lo_factor * lambda / step - 1e-12));
         m * step <= xi_hi_factor * lambda + 1e-9; ++m)
      l.xis.push_back(m * step);
    return l;
  }
};

// Tube centers x_T^t at the query times.
class TubeSet {
 public:
  TubeSet(const TubeLattice& lattice, const TruncatedCoeffs& coeffs, double s0, std::vector<double> times)
      : lattice_(lattice), times_(std::move(times)) {
    std::vector<std::pair<double, double>> init;
    for (double xi : lattice.xis)
      for (double x : lattice.xs) init.emplace_back(x, xi);
    const auto b = hamiltonian::flow_integrate(coeffs, init, s0, times_);
    centers_.resize(times_.size());
    sorted_.resize(times_.size());
    for (std::size_t i = 0; i < times_.size(); ++i) {
      for (const auto& r : b.states[i]) centers_[i].push_back(wrap(r.x));
      sorted_[i] = centers_[i];
      std::sort(sorted_[i].begin(), sorted_[i].end());
    }
  }

  std::size_t tube_count() const { return centers_.empty() ? 0 : centers_[0].size(); }
  const std::vector<double>& times() const { return times_; }
  double center(std::size_t time_index, std::size_t tube) const { return centers_[time_index][tube]; }
  double width() const { return lattice_.half_width; }

  // Number of tubes containing (t_i, y).
  int count(std::size_t time_index, double y) const {
    const auto& s = sorted_[time_index];
    const double w = lattice_.half_width;
    int total = 0;
    for (double shift : {-spectral::kTwoPi, 0.0, spectral::kTwoPi}) {
      const double lo = y - w + shift, hi = y + w + shift;
      auto a = std::upper_bound(s.begin(), s.end(), lo);
      auto b = std::lower_bound(s.begin(), s.end(), hi);
      if (b > a) total += static_cast<int>(b - a);
    }
    return total;
  }

  // Number of tubes containing both (t_i, y) and (t_j, z).
  int count_pair(std::size_t i, double y, std::size_t j, double z) const {
    int total = 0;
    for (std::size_t t = 0; t < tube_count(); ++t)
      if (hamiltonian::torus_distance(centers_[i][t], y) < width() &&
          hamiltonian::torus_distance(centers_[j][t], z) < width())
        ++total;
    return total;
  }

  // sup over (y, z) of the two-point count for times i and j, by exhaustive
  // search: a pair of open windows of width 2 lambda^{-3/4} is anchored at
  // the leftmost member in y, then slid over z.
  int max_pair_count(std::size_t i, std::size_t j) const {
    const double w = 2.0 * width();
    const std::size_t count = tube_count();
    int best = 0;
    std::vector<double> zs;
    for (std::size_t a = 0; a < count; ++a) {
      zs.clear();
      for (std::size_t b = 0; b < count; ++b) {
        const double dy = std::remainder(centers_[i][b] - centers_[i][a], spectral::kTwoPi);
        if (dy >= 0.0 && dy < w) zs.push_back(std::remainder(centers_[j][b] - centers_[j][a], spectral::kTwoPi));
      }
      std::sort(zs.begin(), zs.end());
      for (std::size_t lo = 0, hi = 0; lo < zs.size(); ++lo) {
        while (hi < zs.size() && zs[hi] - zs[lo] < w) ++hi;
        best = std::max(best, static_cast<int>(hi - lo));
      }
    }
    return best;
  }

  // Maximum single-point count over the times and a y-grid of spacing width/4.
  int max_count() const {
    int best = 0;
    const int samples = static_cast<int>(std::ceil(4.0 * spectral::kTwoPi / width()));
    for (std::size_t i = 0; i < times_.size(); ++i)
      for (int m = 0; m < samples; ++m) best = std::max(best, count(i, spectral::kTwoPi * m / samples));
    return best;
  }

 private:
  static double wrap(double x) {
    double r = std::fmod(x, spectral::kTwoPi);
    return r < 0.0 ? r + spectral::kTwoPi : r;
  }
  TubeLattice lattice_;
  std::vector<double> times_;
  std::vector<std::vector<double>> centers_, sorted_;
};

struct OverlapOptions {
  bool two_point_sup = true;  // exhaustive sup over (y, z); false gives the mean over reference tubes
  double velocity = 0.0;
  double taylor = 9.81;
  double t_end = 0.4;
  int time_samples = 8;
};

// Maximum single-point count per lambda; the fit is against lambda.
inline ScanReport overlap_scan(const std::vector<double>& lambdas, const OverlapOptions& opt = {}) {
  std::vector<ScanPoint> pts;
  const TruncatedCoeffs coeffs = TruncatedCoeffs::constant(opt.velocity, opt.taylor);
  std::vector<double> times;
  for (int i = 0; i <= opt.time_samples; ++i) times.push_back(opt.t_end * i / opt.time_samples);
  for (double lambda : lambdas) {
    const TubeSet tubes(TubeLattice::exact(lambda), coeffs, 0.0, times);
    pts.push_back({lambda, static_cast<double>(tubes.max_count())});
  }
  return fit_scan(std::move(pts));
}

// Two-point count against |t - s|: the exhaustive sup over point pairs, or
// the mean over reference tubes R of the count for (0, x_R^0), (t, x_R^t).
inline ScanReport two_point_scan(double lambda, const std::vector<double>& separations, const OverlapOptions& opt = {}) {
  const TruncatedCoeffs coeffs = TruncatedCoeffs::constant(opt.velocity, opt.taylor);
  std::vector<double> times{0.0};
  for (double d : separations) times.push_back(d);
  const TubeSet tubes(TubeLattice::exact(lambda), coeffs, 0.0, times);
  std::vector<ScanPoint> pts;
  for (std::size_t k = 0; k < separations.size(); ++k) {
    if (opt.two_point_sup) {
      pts.push_back({separations[k], static_cast<double>(tubes.max_pair_count(0, k + 1))});
      continue;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < tubes.tube_count(); ++r)
      total += tubes.count_pair(0, tubes.center(0, r), k + 1, tubes.center(k + 1, r));
    pts.push_back({separations[k], total / tubes.tube_count()});
  }
  return fit_scan(std::move(pts));
}

}  // namespace wwlab::dispersive
