#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwlab/dispersive.hpp"
#include "wwlab/fft.hpp"
#include "wwlab/fit.hpp"
#include "wwlab/hamiltonian.hpp"
#include "wwlab/spectral.hpp"

namespace wwlab::packets {

using hamiltonian::TruncatedCoeffs;
using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

// ---- window and lattice ----

// chi(s) = cos(pi/2 beta(|s|)) with beta the smooth step from 0 at 0 to 1 at
// 1 satisfying beta(1 - s) = 1 - beta(s). Support [-1, 1] and
// sum_m chi(s - m)^2 = 1.
inline double window(double s) {
  const double a = std::abs(s);
  if (a >= 1.0) return 0.0;
  return std::cos(0.5 * spectral::kPi * spectral::detail::BumpIntegral::instance()(2.0 * a - 1.0));
}

enum class XiRange {
  kFull,  // every grid frequency on the xi lattice
  kBand,  // lambda/4 <= |xi| <= 4 lambda
};

// x on 2 pi / round(2 pi lambda^{3/4}); xi on Xi Z with Xi the power of two
// nearest lambda^{3/4}, so Xi divides n and the xi lattice is grid-aligned.
struct Lattice {
  double lambda = 0.0;
  int n = 0;
  double x_spacing = 0.0;
  int xi_spacing = 0;
  std::vector<double> xs;
  std::vector<int> xis;

  static Lattice make(int n, double lambda, XiRange range) {
    if (!spectral::is_power_of_two(n)) throw std::invalid_argument("frame grid must be a power of two");
    if (range == XiRange::kBand && 4.0 * lambda > n / 2)
      throw std::invalid_argument("band lattice needs 4 lambda <= n/2");
    Lattice l;
    l.lambda = lambda;
    l.n = n;
    const int nx = static_cast<int>(std::lround(spectral::kTwoPi * std::pow(lambda, 0.75)));
    l.x_spacing = spectral::kTwoPi / nx;
    for (int i = 0; i < nx; ++i) l.xs.push_back(i * l.x_spacing);
    l.xi_spacing = static_cast<int>(std::exp2(std::round(std::log2(std::pow(lambda, 0.75)))));
    l.xi_spacing = std::min(l.xi_spacing, n);
    for (int k = -n / 2 + l.xi_spacing; k <= n / 2; k += l.xi_spacing) {
      if (k % l.xi_spacing != 0) continue;
      const double a = std::abs(k);
      if (range == XiRange::kBand && (a < lambda / 4.0 || a > 4.0 * lambda)) continue;
      l.xis.push_back(k);
    }
    if (range == XiRange::kFull) {
      // Grid frequencies are congruent mod n; keep one representative each.
      l.xis.clear();
      for (int k = 0; k < n; k += l.xi_spacing) l.xis.push_back(spectral::frequency(k, n));
    }
    return l;
  }

  std::size_t size() const { return xs.size() * xis.size(); }
  std::size_t index(std::size_t ix, std::size_t ixi) const { return ix * xis.size() + ixi; }
  double amplitude() const { return std::pow(lambda, 0.375); }
};

struct FrameCoeffs {
  Lattice lattice;
  ComplexVec values;  // [x index][xi index]

  explicit FrameCoeffs(Lattice l) : lattice(std::move(l)), values(lattice.size(), 0.0) {}
  Complex& at(std::size_t ix, std::size_t ixi) { return values[lattice.index(ix, ixi)]; }
  Complex at(std::size_t ix, std::size_t ixi) const { return values[lattice.index(ix, ixi)]; }
  double l2() const {
    double acc = 0.0;
    for (const Complex& c : values) acc += std::norm(c);
    return std::sqrt(acc);
  }
};

namespace detail {

// Grid samples of lambda^{3/8} chi((y - x)/x_spacing), stored on their support.
struct WindowSamples {
  int first = 0;
  RealVec values;
};

inline WindowSamples window_samples(const Lattice& l, double x) {
  const int n = l.n;
  const double dx = spectral::kTwoPi / n;
  const int first = static_cast<int>(std::floor((x - l.x_spacing) / dx));
  const int last = static_cast<int>(std::ceil((x + l.x_spacing) / dx));
  WindowSamples w;
  w.first = first;
  for (int j = first; j <= last; ++j) w.values.push_back(l.amplitude() * window((j * dx - x) / l.x_spacing));
  return w;
}

inline int wrap_index(int j, int n) { return ((j % n) + n) % n; }

}  // namespace detail

// a_T = <f, v_T> with v_T(y) = lambda^{3/8} chi_T(y) e^{i xi (y - x_T)}.
inline FrameCoeffs decompose(const ComplexVec& f, const Lattice& l) {
  const int n = l.n;
  if (static_cast<int>(f.size()) != n) throw std::invalid_argument("field size does not match the lattice grid");
  FrameCoeffs out(l);
  ComplexVec h(n), spec(n);
  for (std::size_t ix = 0; ix < l.xs.size(); ++ix) {
    std::fill(h.begin(), h.end(), 0.0);
    const auto w = detail::window_samples(l, l.xs[ix]);
    for (std::size_t m = 0; m < w.values.size(); ++m) {
      const int j = detail::wrap_index(w.first + static_cast<int>(m), n);
      h[j] += w.values[m] * f[j];
    }
    fft::forward(h.data(), spec.data(), n);
    for (std::size_t ixi = 0; ixi < l.xis.size(); ++ixi) {
      const int k = l.xis[ixi];
      out.at(ix, ixi) = (spectral::kTwoPi / n) * spec[spectral::index_of(k, n)] * std::exp(Complex(0.0, k * l.xs[ix]));
    }
  }
  return out;
}

// sum_T a_T v_T.
inline ComplexVec reconstruct(const FrameCoeffs& a) {
  const Lattice& l = a.lattice;
  const int n = l.n;
  ComplexVec out(n, 0.0), spec(n), h(n);
  for (std::size_t ix = 0; ix < l.xs.size(); ++ix) {
    std::fill(spec.begin(), spec.end(), 0.0);
    bool any = false;
    for (std::size_t ixi = 0; ixi < l.xis.size(); ++ixi) {
      const Complex c = a.at(ix, ixi);
      if (c == 0.0) continue;
      any = true;
      const int k = l.xis[ixi];
      spec[spectral::index_of(k, n)] += static_cast<double>(n) * c * std::exp(Complex(0.0, -k * l.xs[ix]));
    }
    if (!any) continue;
    fft::inverse(spec.data(), h.data(), n);
    const auto w = detail::window_samples(l, l.xs[ix]);
    for (std::size_t m = 0; m < w.values.size(); ++m) {
      const int j = detail::wrap_index(w.first + static_cast<int>(m), n);
      out[j] += w.values[m] * h[j];
    }
  }
  return out;
}

// Frame constant A of reconstruct(decompose(.)) measured on e^{i lambda x}.
// The full lattice is tight, so this is the only eigenvalue.
inline double frame_constant(const Lattice& l) {
  ComplexVec e(l.n);
  for (int j = 0; j < l.n; ++j) e[j] = std::exp(Complex(0.0, std::round(l.lambda) * spectral::kTwoPi * j / l.n));
  const ComplexVec back = reconstruct(decompose(e, l));
  return (spectral::inner_product(back, e) / spectral::inner_product(e, e)).real();
}

// ---- data matching ----

struct MatchReport {
  FrameCoeffs coeffs;
  std::vector<double> residuals;  // relative residual after each iteration
  double contraction = 0.0;       // worst ratio of successive residuals
  int iterations = 0;
  bool converged = false;
};

struct MatchOptions {
  double tol = 1e-6;
  int max_iterations = 20;
  bool project_band = true;  // project reconstructions onto lambda/2 <= |xi| <= 2 lambda
};

// a <- a + decompose(f - P reconstruct(a)) / A, starting from a = 0.
inline MatchReport match_data(const ComplexVec& f, const Lattice& l, const MatchOptions& opt = {}) {
  const double frame = frame_constant(l);
  auto project = [&](const ComplexVec& u) {
    return opt.project_band ? dispersive::band_projection(u, l.lambda / 2.0, 2.0 * l.lambda) : u;
  };
  const double norm = spectral::l2_norm(f);
  MatchReport rep{FrameCoeffs(l), {}, 0.0, 0, false};
  if (norm == 0.0) {
    rep.converged = true;
    return rep;
  }
  ComplexVec residual = f;
  double previous = 1.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const FrameCoeffs step = decompose(residual, l);
    for (std::size_t i = 0; i < step.values.size(); ++i) rep.coeffs.values[i] += step.values[i] / frame;
    const ComplexVec approx = project(reconstruct(rep.coeffs));
    for (std::size_t j = 0; j < f.size(); ++j) residual[j] = f[j] - approx[j];
    const double rel = spectral::l2_norm(residual) / norm;
    rep.residuals.push_back(rel);
    rep.contraction = std::max(rep.contraction, rel / previous);
    previous = rel;
    rep.iterations = it;
    if (rel <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (rep.contraction >= 0.9) throw std::runtime_error("frame matching does not contract");
  }
  return rep;
}

struct SourceSlice {
  double time = 0.0;
  double weight = 0.0;  // trapezoid weight
  MatchReport match;
};

// Duhamel source matching: f on [t0, t1] is sampled at slices+1 times and each
// slice is matched as data launched at its own time.
inline std::vector<SourceSlice> match_source(const std::function<ComplexVec(double)>& f, double t0, double t1, int slices,
                                             const Lattice& l, const MatchOptions& opt = {}) {
  if (slices < 1 || !(t1 > t0)) throw std::invalid_argument("source matching needs a positive interval");
  std::vector<SourceSlice> out;
  const double h = (t1 - t0) / slices;
  for (int i = 0; i <= slices; ++i) {
    const double s = t0 + i * h;
    const double w = (i == 0 || i == slices) ? 0.5 * h : h;
    out.push_back({s, w, match_data(f(s), l, opt)});
  }
  return out;
}

// u(t) = sum over slices s <= t of w_s E(t, s) reconstruct(a_s), with the
// propagator E supplied by the caller.
inline ComplexVec duhamel_superposition(const std::vector<SourceSlice>& slices, double t,
                                        const std::function<ComplexVec(const ComplexVec&, double, double)>& propagate) {
  if (slices.empty()) throw std::invalid_argument("no source slices");
  const int n = slices.front().match.coeffs.lattice.n;
  ComplexVec out(n, 0.0);
  const double h = slices.size() > 1 ? slices[1].time - slices[0].time : 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const double s = slices[i].time;
    if (s > t + 1e-12) break;
    // Trapezoid on [t0, t]: the last slice at or below t takes half weight.
    double w = slices[i].weight;
    const bool last = i + 1 == slices.size() || slices[i + 1].time > t + 1e-12;
    if (last && i > 0) w = 0.5 * h;
    if (last && i == 0) w = 0.0;
    if (w == 0.0) continue;
    const ComplexVec data = dispersive::band_projection(reconstruct(slices[i].match.coeffs), slices[i].match.coeffs.lattice.lambda / 2.0,
                                                        2.0 * slices[i].match.coeffs.lattice.lambda);
    const ComplexVec moved = propagate(data, s, t);
    for (int j = 0; j < n; ++j) out[j] += w * moved[j];
  }
  return out;
}

// Exact propagator e^{-i (t - s) H} for constant coefficients.
inline ComplexVec propagate_exact(const TruncatedCoeffs& coeffs, const ComplexVec& u, double s, double t) {
  if (!coeffs.is_constant()) throw std::invalid_argument("exact propagation needs constant coefficients");
  const auto c = coeffs.eval(s, 0.0);
  return spectral::fourier_multiplier(u, [&](double xi) {
    return std::exp(Complex(0.0, -(c.V * xi + std::sqrt(c.a * std::abs(xi))) * (t - s)));
  });
}

// ---- packets ----

enum class PhaseModel {
  kEikonal,  // psi from the ray tube
  kFrozen,   // psi = xi (y - x) for all t; only the envelope moves
};

// u_T(t, y) = lambda^{3/8} chi((y - x^t)/x_spacing) e^{i psi_T(t, y)}.
struct Packet {
  double x = 0.0, xi = 0.0, lambda = 0.0, x_spacing = 0.0;
  hamiltonian::EikonalPhase phase;

  std::size_t time_count() const { return phase.time_count(); }
  double time(std::size_t i) const { return phase.time(i); }

  // Grid samples on the support, as (first index, values).
  std::pair<int, ComplexVec> sparse(std::size_t i, int n, PhaseModel model = PhaseModel::kEikonal) const {
    const double center = phase.center(i).x, dx = spectral::kTwoPi / n;
    const int first = static_cast<int>(std::floor((center - x_spacing) / dx));
    const int last = static_cast<int>(std::ceil((center + x_spacing) / dx));
    ComplexVec values;
    const double amp = std::pow(lambda, 0.375);
    for (int j = first; j <= last; ++j) {
      const double y = j * dx;
      const double chi = window((y - center) / x_spacing);
      if (chi == 0.0) {
        values.push_back(0.0);
        continue;
      }
      const double psi = model == PhaseModel::kEikonal ? phase.eval(i, y).first : xi * (y - x);
      values.push_back(amp * chi * std::exp(Complex(0.0, psi)));
    }
    return {first, values};
  }

  ComplexVec field(std::size_t i, int n, PhaseModel model = PhaseModel::kEikonal) const {
    ComplexVec out(n, 0.0);
    const auto [first, values] = sparse(i, n, model);
    for (std::size_t m = 0; m < values.size(); ++m) out[detail::wrap_index(first + static_cast<int>(m), n)] += values[m];
    return out;
  }
};

inline Packet build_packet(const TruncatedCoeffs& coeffs, double x, double xi, double lambda, double x_spacing, double s0,
                           const std::vector<double>& times, int rays = 33) {
  Packet p;
  p.x = x;
  p.xi = xi;
  p.lambda = lambda;
  p.x_spacing = x_spacing;
  // The tube is twice the packet support so that y stays inside it.
  p.phase = hamiltonian::eikonal_solve(coeffs, x, xi, s0, times, 2.0 * x_spacing, rays,
                                       hamiltonian::band_options(lambda, 1e-3));
  return p;
}

struct ResidualReport {
  double residual = 0.0;  // |(d_t + iH) S~_lambda u_T|_{L^2 L^2}
  double scale = 0.0;     // |sqrt(a_lambda |D|) u_T|_{L^2 L^2}
  double ratio() const { return residual / scale; }
};

struct ResidualOptions {
  double t_end = 0.25;
  int time_samples = 32;
  double step = 1e-6;  // centered difference in t
  PhaseModel model = PhaseModel::kEikonal;
  int grid_factor = 32;  // n = grid_factor * lambda; 8 under-resolves the window
};

// Packet launched at s0 = 0 from (x, lambda), n grid points. The left
// quantization is used for H.
inline ResidualReport packet_residual(const TruncatedCoeffs& coeffs, double x, double lambda, int n,
                                      const ResidualOptions& opt = {}) {
  const double spacing = spectral::kTwoPi / std::lround(spectral::kTwoPi * std::pow(lambda, 0.75));
  std::vector<double> times, centers;
  for (int i = 0; i <= opt.time_samples; ++i) {
    const double t = opt.t_end * i / opt.time_samples;
    centers.push_back(t);
    times.push_back(t - opt.step);
    times.push_back(t);
    times.push_back(t + opt.step);
  }
  const Packet p = build_packet(coeffs, x, lambda, lambda, spacing, 0.0, times);
  auto projected = [&](std::size_t i) { return spectral::lp::project_widened(p.field(i, n, opt.model), lambda); };
  std::vector<double> res, scale;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double t = centers[k];
    const ComplexVec lo = projected(3 * k), mid = projected(3 * k + 1), hi = projected(3 * k + 2);
    ComplexVec r = dispersive::apply_H(coeffs, t, mid, dispersive::Quantization::kLeft);
    for (int j = 0; j < n; ++j) r[j] += (hi[j] - lo[j]) / (2.0 * opt.step);
    res.push_back(spectral::l2_norm(r));
    const auto [velocity, taylor] = coeffs.on_grid(t, n);
    const ComplexVec half = dispersive::half_derivative(p.field(3 * k + 1, n, opt.model));
    ComplexVec s(n);
    for (int j = 0; j < n; ++j) s[j] = std::sqrt(taylor[j]) * half[j];
    scale.push_back(spectral::l2_norm(s));
  }
  return {dispersive::time_l2(centers, res), dispersive::time_l2(centers, scale)};
}

// ratio(lambda); the fit is against lambda.
inline dispersive::ScanReport residual_scan(const TruncatedCoeffs& coeffs, double x, const std::vector<double>& lambdas,
                                            const ResidualOptions& opt = {}) {
  std::vector<dispersive::ScanPoint> pts;
  for (double lambda : lambdas)
    pts.push_back({lambda, packet_residual(coeffs, x, lambda, static_cast<int>(opt.grid_factor * lambda), opt).ratio()});
  return dispersive::fit_scan(std::move(pts));
}

// ---- orthogonality ----

struct OrthogonalityReport {
  double lambda = 0.0;
  std::size_t packets = 0;
  double max_ratio = 0.0;   // max over trials of |sum c_T u_T|^2 / sum |c_T|^2
  double mean_ratio = 0.0;
  double constant() const { return max_ratio / std::log2(lambda); }
};

// Packets with x_T in [center - half_width, center + half_width] and every
// band frequency xi in [lambda/2, 2 lambda] on the xi lattice, evaluated at
// time t with random unit-modulus coefficients.
inline OrthogonalityReport orthogonality(const TruncatedCoeffs& coeffs, double lambda, double center, double half_width,
                                         double t, int trials, std::uint64_t seed) {
  const int n = static_cast<int>(8 * lambda);
  const Lattice l = Lattice::make(n, lambda, XiRange::kBand);
  std::vector<Packet> packets;
  for (double x : l.xs) {
    if (hamiltonian::torus_distance(x, center) > half_width) continue;
    for (int xi : l.xis) {
      if (xi < lambda / 2.0 || xi > 2.0 * lambda) continue;
      packets.push_back(build_packet(coeffs, x, xi, lambda, l.x_spacing, 0.0, {t}, 9));
    }
  }
  if (packets.empty()) throw std::invalid_argument("no packets in the orthogonality window");
  std::vector<std::pair<int, ComplexVec>> samples;
  for (const auto& p : packets) samples.push_back(p.sparse(0, n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, spectral::kTwoPi);
  OrthogonalityReport rep;
  rep.lambda = lambda;
  rep.packets = packets.size();
  for (int trial = 0; trial < trials; ++trial) {
    ComplexVec sum(n, 0.0);
    for (const auto& [first, values] : samples) {
      const Complex c = std::polar(1.0, angle(rng));
      for (std::size_t m = 0; m < values.size(); ++m) sum[detail::wrap_index(first + static_cast<int>(m), n)] += c * values[m];
    }
    const double norm = spectral::l2_norm(sum);
    const double ratio = norm * norm / static_cast<double>(packets.size());
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.mean_ratio += ratio / trials;
  }
  return rep;
}

}  // namespace wwlab::packets
