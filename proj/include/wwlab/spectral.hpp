#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "wwlab/fft.hpp"

namespace wwlab::spectral {

using Complex = std::complex<double>;
using RealVec = std::vector<double>;
using ComplexVec = std::vector<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GridSpec {
  int n_points = 256;
  double length = kTwoPi;
  double dealias_fraction = 2.0 / 3.0;

  void validate() const {
    if (n_points < 16 || (n_points & (n_points - 1)) != 0)
      throw std::invalid_argument("grid size must be a power of two >= 16, got " +
                                  std::to_string(n_points));
    // Every wavenumber formula below assumes the 2*pi torus.
    if (std::abs(length - kTwoPi) > 1e-12)
      throw std::invalid_argument("only the 2*pi torus is supported");
    if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
      throw std::invalid_argument("dealias_fraction must lie in (0, 1]");
  }
  double dx() const { return length / n_points; }
  double x(int j) const { return j * dx(); }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Storage index -> signed integer frequency. The Nyquist slot maps to +n/2.
inline int frequency(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }
inline int index_of(int k, int n) { return ((k % n) + n) % n; }

inline RealVec grid_points(int n) {
  RealVec x(n);
  for (int j = 0; j < n; ++j) x[j] = kTwoPi * j / n;
  return x;
}

template <class T>
ComplexVec spectrum(const std::vector<T>& u) {
  return fft::forward(u);
}

template <class T>
std::vector<T> from_spectrum(const ComplexVec& spec) {
  ComplexVec v = fft::inverse(spec);
  if constexpr (std::is_same_v<T, double>) {
    RealVec out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j].real();
    return out;
  } else {
    return v;
  }
}

inline RealVec real_part(const ComplexVec& v) {
  RealVec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j].real();
  return out;
}

inline ComplexVec to_complex(const RealVec& v) { return ComplexVec(v.begin(), v.end()); }

// Applies m(xi) to every representable frequency. For real fields the
// imaginary part produced by a non-Hermitian symbol is discarded.
template <class T, class M>
std::vector<T> fourier_multiplier(const std::vector<T>& u, M&& m) {
  const int n = static_cast<int>(u.size());
  ComplexVec spec = spectrum(u);
  for (int idx = 0; idx < n; ++idx) {
    const double xi = frequency(idx, n);
    const Complex factor = Complex(m(xi));
    if (!std::isfinite(factor.real()) || !std::isfinite(factor.imag()))
      throw std::domain_error("multiplier is not finite at xi = " + std::to_string(xi));
    spec[idx] *= factor;
  }
  return from_spectrum<T>(spec);
}

// Multiplier applied to an existing spectrum in place.
template <class M>
void multiply_spectrum(ComplexVec& spec, M&& m) {
  const int n = static_cast<int>(spec.size());
  for (int idx = 0; idx < n; ++idx) spec[idx] *= Complex(m(static_cast<double>(frequency(idx, n))));
}

// d^order/dx^order. The Nyquist mode is dropped for odd orders so that real
// input stays real.
template <class T>
std::vector<T> derivative(const std::vector<T>& u, int order = 1) {
  const int n = static_cast<int>(u.size());
  ComplexVec spec = spectrum(u);
  for (int idx = 0; idx < n; ++idx) {
    const int k = frequency(idx, n);
    if (order % 2 == 1 && k == n / 2) {
      spec[idx] = 0.0;
      continue;
    }
    spec[idx] *= std::pow(Complex(0.0, k), order);
  }
  return from_spectrum<T>(spec);
}

inline double japanese(double xi) { return std::sqrt(1.0 + xi * xi); }

namespace detail {

// Cumulative integral of the bump exp(-1/(1-s^2)) on [-1, 1], normalized to
// end at 1, tabulated with cubic Hermite interpolation (the slope is the
// bump itself, known in closed form).
class BumpIntegral {
 public:
  static const BumpIntegral& instance() {
    static const BumpIntegral table;
    return table;
  }

  static double bump(double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
  }

  double operator()(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double pos = (t + 1.0) / h_;
    int i = std::min(static_cast<int>(pos), kIntervals - 1);
    const double s = pos - i;
    const double y0 = values_[i], y1 = values_[i + 1];
    const double d0 = bump(node(i)) * h_ / total_, d1 = bump(node(i + 1)) * h_ / total_;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * d1;
  }

 private:
  static constexpr int kIntervals = 4096;

  BumpIntegral() : values_(kIntervals + 1, 0.0) {
    static constexpr std::array<double, 8> kNodes = {
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
        0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> kWeights = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    h_ = 2.0 / kIntervals;
    double acc = 0.0;
    for (int i = 0; i < kIntervals; ++i) {
      const double a = node(i), mid = a + 0.5 * h_;
      double part = 0.0;
      for (int q = 0; q < 8; ++q) part += kWeights[q] * bump(mid + 0.5 * h_ * kNodes[q]);
      acc += 0.5 * h_ * part;
      values_[i + 1] = acc;
    }
    total_ = acc;
    for (double& v : values_) v /= total_;
  }

  double node(int i) const { return -1.0 + i * h_; }

  std::vector<double> values_;
  double h_ = 0.0;
  double total_ = 1.0;
};

}  // namespace detail

// Littlewood-Paley ladder: phi = 1 on |xi| <= 1, 0 on |xi| >= 2.
namespace lp {

inline double cutoff(double xi) {
  const double a = std::abs(xi);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  return 1.0 - detail::BumpIntegral::instance()(2.0 * a - 3.0);
}

// psi_kappa(xi) = phi(xi/kappa) - phi(2 xi/kappa); kappa = 0 denotes S_0 = phi(2 xi).
inline double band(double xi, double kappa) {
  if (kappa == 0.0) return cutoff(2.0 * xi);
  return cutoff(xi / kappa) - cutoff(2.0 * xi / kappa);
}

// Equals one on the support of band(., kappa).
inline double widened_band(double xi, double kappa) {
  if (kappa == 0.0) return cutoff(xi);
  return cutoff(xi / (2.0 * kappa)) - cutoff(4.0 * xi / kappa);
}

inline double low(double xi, double kappa) {
  if (kappa <= 0.0) return cutoff(2.0 * xi);
  return cutoff(xi / kappa);
}

// 0, 1, 2, 4, ..., n/2. The bands over these levels sum to one on the grid.
inline std::vector<double> levels(int n) {
  std::vector<double> out{0.0};
  for (int k = 1; k <= n / 2; k *= 2) out.push_back(k);
  return out;
}

inline void check_level(double kappa, int n) {
  if (kappa < 0.0 || kappa > n / 2)
    throw std::domain_error("LP level " + std::to_string(kappa) + " above Nyquist");
}

template <class T>
std::vector<T> project(const std::vector<T>& u, double kappa) {
  check_level(kappa, static_cast<int>(u.size()));
  return fourier_multiplier(u, [kappa](double xi) { return band(xi, kappa); });
}

template <class T>
std::vector<T> project_low(const std::vector<T>& u, double kappa) {
  return fourier_multiplier(u, [kappa](double xi) { return low(xi, kappa); });
}

template <class T>
std::vector<T> project_widened(const std::vector<T>& u, double kappa) {
  return fourier_multiplier(u, [kappa](double xi) { return widened_band(xi, kappa); });
}

}  // namespace lp

template <class T>
std::vector<T> dealias(const std::vector<T>& u, double fraction = 2.0 / 3.0) {
  const double kmax = fraction * static_cast<double>(u.size()) / 2.0;
  return fourier_multiplier(u, [kmax](double xi) { return std::abs(xi) <= kmax ? 1.0 : 0.0; });
}

// ---- norms: un-normalized integrals over [0, 2 pi) ----

template <class T>
double l2_norm(const std::vector<T>& u) {
  double acc = 0.0;
  for (const auto& v : u) acc += std::norm(v);
  return std::sqrt(acc * kTwoPi / static_cast<double>(u.size()));
}

template <class T>
double linf_norm(const std::vector<T>& u) {
  double m = 0.0;
  for (const auto& v : u) m = std::max(m, std::abs(v));
  return m;
}

template <class T>
Complex inner_product(const std::vector<T>& u, const std::vector<T>& v) {
  Complex acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += Complex(u[j]) * std::conj(Complex(v[j]));
  return acc * (kTwoPi / static_cast<double>(u.size()));
}

template <class T>
double mean(const std::vector<T>& u) {
  Complex acc = 0.0;
  for (const auto& v : u) acc += v;
  return acc.real() / static_cast<double>(u.size());
}

template <class T>
double sobolev_norm(const std::vector<T>& u, double sigma) {
  const int n = static_cast<int>(u.size());
  ComplexVec spec = spectrum(u);
  double acc = 0.0;
  for (int idx = 0; idx < n; ++idx)
    acc += std::pow(japanese(frequency(idx, n)), 2.0 * sigma) * std::norm(spec[idx]);
  // Plancherel for the un-normalized integral: int |u|^2 = (2 pi / n^2) sum |u_k|^2.
  return std::sqrt(acc * kTwoPi) / n;
}

// sup over blocks of kappa^s |S_kappa u|_inf, with S_0 weighted by one.
template <class T>
double zygmund_norm(const std::vector<T>& u, double s) {
  const int n = static_cast<int>(u.size());
  const ComplexVec spec = spectrum(u);
  double best = 0.0;
  for (double kappa : lp::levels(n)) {
    ComplexVec block = spec;
    multiply_spectrum(block, [kappa](double xi) { return lp::band(xi, kappa); });
    const double weight = kappa == 0.0 ? 1.0 : std::pow(kappa, s);
    best = std::max(best, weight * linf_norm(fft::inverse(block)));
  }
  return best;
}

// W^{r,inf}: sum of sup norms of derivatives for integer r, Zygmund otherwise.
template <class T>
double wkinf_norm(const std::vector<T>& u, double r) {
  if (std::abs(r - std::round(r)) < 1e-14 && r >= 0.0) {
    double acc = linf_norm(u);
    for (int j = 1; j <= static_cast<int>(std::round(r)); ++j) acc += linf_norm(derivative(u, j));
    return acc;
  }
  return zygmund_norm(u, r);
}

// Trigonometric interpolation onto a grid `factor` times finer.
template <class T>
std::vector<T> oversample(const std::vector<T>& u, int factor) {
  const int n = static_cast<int>(u.size());
  const int m = n * factor;
  ComplexVec spec = spectrum(u);
  ComplexVec big(m, 0.0);
  for (int idx = 0; idx < n; ++idx) {
    const int k = frequency(idx, n);
    if (k == n / 2) {
      // Split the Nyquist mode symmetrically so the interpolant stays real.
      big[index_of(k, m)] += 0.5 * spec[idx];
      big[index_of(-k, m)] += 0.5 * spec[idx];
    } else {
      big[index_of(k, m)] = spec[idx];
    }
  }
  for (auto& c : big) c *= static_cast<double>(factor);
  return from_spectrum<T>(big);
}

template <class T>
double linf_oversampled(const std::vector<T>& u, int factor = 8) {
  return linf_norm(oversample(u, factor));
}

// Random field with spectrum on 1 <= |k| <= kmax and amplitude |k|^(-decay).
inline RealVec random_real_field(std::mt19937_64& rng, int n, int kmax, double decay = 0.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVec spec(n, 0.0);
  for (int k = 1; k <= std::min(kmax, n / 2 - 1); ++k) {
    const double amp = std::pow(static_cast<double>(k), -decay);
    const Complex c(normal(rng) * amp, normal(rng) * amp);
    spec[index_of(k, n)] = c * static_cast<double>(n);
    spec[index_of(-k, n)] = std::conj(c) * static_cast<double>(n);
  }
  return from_spectrum<double>(spec);
}

inline ComplexVec random_complex_field(std::mt19937_64& rng, int n, int kmin, int kmax) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVec spec(n, 0.0);
  for (int k = kmin; k <= kmax; ++k) {
    if (std::abs(k) >= n / 2) continue;
    spec[index_of(k, n)] = Complex(normal(rng), normal(rng)) * static_cast<double>(n);
  }
  return fft::inverse(spec);
}

inline RealVec multiply(const RealVec& a, const RealVec& b) {
  RealVec out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

}  // namespace wwlab::spectral
