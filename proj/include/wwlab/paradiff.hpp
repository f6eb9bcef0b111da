#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wwlab/spectral.hpp"

namespace wwlab::paradiff {

using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

namespace detail {

// Products of trigonometric polynomials evaluated on a grid twice as fine, so
// that the pointwise product is exact before truncating back to n modes.
class PaddedProduct {
 public:
  explicit PaddedProduct(int n) : n_(n), m_(2 * n), acc_(2 * n, 0.0) {}

  ComplexVec pad(const ComplexVec& spec) const {
    ComplexVec big(m_, 0.0);
    for (int idx = 0; idx < n_; ++idx) {
      const int k = spectral::frequency(idx, n_);
      if (k == n_ / 2) {
        big[spectral::index_of(k, m_)] += 0.5 * spec[idx];
        big[spectral::index_of(-k, m_)] += 0.5 * spec[idx];
      } else {
        big[spectral::index_of(k, m_)] = spec[idx];
      }
    }
    ComplexVec phys = fft::inverse(big);
    for (auto& v : phys) v *= 2.0;
    return phys;
  }

  void add(const ComplexVec& spec_a, const ComplexVec& spec_b) {
    const ComplexVec a = pad(spec_a), b = pad(spec_b);
    for (int j = 0; j < m_; ++j) acc_[j] += a[j] * b[j];
  }

  void add_physical(const ComplexVec& a_phys, const ComplexVec& spec_b) {
    const ComplexVec b = pad(spec_b);
    for (int j = 0; j < m_; ++j) acc_[j] += a_phys[j] * b[j];
  }

  ComplexVec spectrum() const {
    ComplexVec big = fft::forward(acc_);
    ComplexVec out(n_, 0.0);
    for (int idx = 0; idx < m_; ++idx) {
      const int k = spectral::frequency(idx, m_);
      if (std::abs(k) < n_ / 2) out[spectral::index_of(k, n_)] += 0.5 * big[idx];
      else if (std::abs(k) == n_ / 2) out[n_ / 2] += 0.5 * big[idx];
    }
    return out;
  }

 private:
  int n_, m_;
  ComplexVec acc_;
};

inline ComplexVec band_spectrum(const ComplexVec& spec, double kappa) {
  ComplexVec out = spec;
  spectral::multiply_spectrum(out, [kappa](double xi) { return spectral::lp::band(xi, kappa); });
  return out;
}

inline ComplexVec low_spectrum(const ComplexVec& spec, double kappa) {
  ComplexVec out = spec;
  spectral::multiply_spectrum(out, [kappa](double xi) { return spectral::lp::low(xi, kappa); });
  return out;
}

template <class T>
void check_same_grid(const std::vector<T>& a, const std::vector<T>& u) {
  if (a.size() != u.size())
    throw std::invalid_argument("grid mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(u.size()));
}

}  // namespace detail

// Dealiased product a*u (exact for trigonometric polynomials, truncated to the grid).
template <class T>
std::vector<T> product(const std::vector<T>& a, const std::vector<T>& u) {
  detail::check_same_grid(a, u);
  detail::PaddedProduct prod(static_cast<int>(a.size()));
  prod.add(spectral::spectrum(a), spectral::spectrum(u));
  return spectral::from_spectrum<T>(prod.spectrum());
}

// T_a u = sum_{kappa >= 8} (S_{<= kappa/8} a)(S_kappa u).
template <class T>
std::vector<T> paraproduct(const std::vector<T>& a, const std::vector<T>& u) {
  detail::check_same_grid(a, u);
  const int n = static_cast<int>(a.size());
  const ComplexVec sa = spectral::spectrum(a), su = spectral::spectrum(u);
  detail::PaddedProduct prod(n);
  for (double kappa : spectral::lp::levels(n)) {
    if (kappa < 8.0) continue;
    prod.add(detail::low_spectrum(sa, kappa / 8.0), detail::band_spectrum(su, kappa));
  }
  return spectral::from_spectrum<T>(prod.spectrum());
}

// R(a, u), summed directly over the balanced block pairs. Level index 0 is
// S_0 and index i >= 1 is kappa = 2^(i-1); a pair (i, l) belongs to T_a u when
// i >= 4 and l <= i - 3, and symmetrically to T_u a.
template <class T>
std::vector<T> remainder(const std::vector<T>& a, const std::vector<T>& u) {
  detail::check_same_grid(a, u);
  const int n = static_cast<int>(a.size());
  const auto levels = spectral::lp::levels(n);
  const ComplexVec sa = spectral::spectrum(a), su = spectral::spectrum(u);
  std::vector<ComplexVec> ba, bu;
  for (double kappa : levels) {
    ba.push_back(detail::band_spectrum(sa, kappa));
    bu.push_back(detail::band_spectrum(su, kappa));
  }
  auto in_paraproduct = [](int hi, int lo) { return hi >= 4 && lo <= hi - 3; };
  detail::PaddedProduct prod(n);
  const int count = static_cast<int>(levels.size());
  for (int i = 0; i < count; ++i) {
    for (int l = 0; l < count; ++l) {
      if (in_paraproduct(i, l) || in_paraproduct(l, i)) continue;
      prod.add(ba[l], bu[i]);
    }
  }
  return spectral::from_spectrum<T>(prod.spectrum());
}

template <class T>
struct BonyDecomposition {
  std::vector<T> product, low_high, high_low, balanced;
};

template <class T>
BonyDecomposition<T> bony_decompose(const std::vector<T>& a, const std::vector<T>& u) {
  return {product(a, u), paraproduct(a, u), paraproduct(u, a), remainder(a, u)};
}

// ---- paradifferential quantization ----

struct AdmissibleCutoff {
  double eps1 = 0.1;
  double eps2 = 0.125;

  // chi(theta, eta): 1 for |theta| <= eps1 |eta|, 0 for |theta| >= eps2 |eta|.
  double chi(double theta, double eta) const {
    const double a = std::abs(eta);
    if (a == 0.0) return 0.0;
    const double r = std::abs(theta) / a;
    if (r <= eps1) return 1.0;
    if (r >= eps2) return 0.0;
    const double t = 2.0 * (r - eps1) / (eps2 - eps1) - 1.0;
    return 1.0 - spectral::detail::BumpIntegral::instance()(t);
  }

  // psi(eta): 0 for |eta| <= 1, 1 for |eta| >= 2.
  double psi(double eta) const { return 1.0 - spectral::lp::cutoff(eta); }
};

// A symbol a(x, xi) sampled on the x-grid for any requested xi.
struct SymbolGrid {
  int n = 0;
  double order = 0.0;
  double regularity = 0.0;
  std::function<void(double xi, ComplexVec& values)> sample;
  std::function<Complex(double xi)> multiplier;  // set when the symbol is x-independent

  bool x_independent() const { return static_cast<bool>(multiplier); }

  ComplexVec at(double xi) const {
    ComplexVec values(n);
    sample(xi, values);
    return values;
  }

  static SymbolGrid from_multiplier(int n, std::function<Complex(double)> m, double order) {
    SymbolGrid s;
    s.n = n;
    s.order = order;
    s.multiplier = m;
    s.sample = [m](double xi, ComplexVec& values) { std::fill(values.begin(), values.end(), m(xi)); };
    return s;
  }

  static SymbolGrid from_function(int n, std::function<Complex(double x, double xi)> a, double order,
                                  double regularity) {
    SymbolGrid s;
    s.n = n;
    s.order = order;
    s.regularity = regularity;
    s.sample = [a, n](double xi, ComplexVec& values) {
      for (int j = 0; j < n; ++j) values[j] = a(spectral::kTwoPi * j / n, xi);
    };
    return s;
  }

  // a(x, xi) = f(x) m(xi).
  static SymbolGrid separable(const RealVec& f, std::function<Complex(double)> m, double order,
                              double regularity) {
    SymbolGrid s;
    s.n = static_cast<int>(f.size());
    s.order = order;
    s.regularity = regularity;
    s.sample = [f, m](double xi, ComplexVec& values) {
      const Complex mx = m(xi);
      for (std::size_t j = 0; j < f.size(); ++j) values[j] = f[j] * mx;
    };
    return s;
  }
};

// Spectrum of T_a u at xi: (1/n) sum_eta chi(xi-eta, eta) a^(xi-eta, eta) psi(eta) u^(eta),
// with the x-transform taken per eta. Output modes beyond the grid are dropped.
template <class T>
std::vector<T> paradiff_op(const SymbolGrid& a, const std::vector<T>& u,
                           const AdmissibleCutoff& cut = {}) {
  const int n = static_cast<int>(u.size());
  if (a.n != n) throw std::invalid_argument("symbol grid does not match field grid");
  const ComplexVec su = spectral::spectrum(u);
  ComplexVec out(n, 0.0);
  ComplexVec values(n);
  for (int idx = 0; idx < n; ++idx) {
    if (su[idx] == 0.0) continue;
    const int eta = spectral::frequency(idx, n);
    const double weight = cut.psi(eta);
    if (weight == 0.0) continue;
    if (a.x_independent()) {
      const Complex m = a.multiplier(eta);
      if (!std::isfinite(m.real()) || !std::isfinite(m.imag()))
        throw std::domain_error("symbol not finite at xi = " + std::to_string(eta));
      out[idx] += weight * m * su[idx];
      continue;
    }
    a.sample(eta, values);
    for (const Complex& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::domain_error("symbol not finite at xi = " + std::to_string(eta));
    const ComplexVec ahat = fft::forward(values);
    const int reach = static_cast<int>(std::ceil(cut.eps2 * std::abs(eta)));
    for (int zeta = -reach; zeta <= reach; ++zeta) {
      const double c = cut.chi(zeta, eta);
      if (c == 0.0) continue;
      const int xi = eta + zeta;
      if (xi > n / 2 || xi <= -n / 2) continue;
      out[spectral::index_of(xi, n)] += c * ahat[spectral::index_of(zeta, n)] * weight * su[idx] / double(n);
    }
  }
  return spectral::from_spectrum<T>(out);
}

// Fourth-order centered differences in xi for derivatives of order 1..3.
inline ComplexVec symbol_xi_derivative(const SymbolGrid& a, double xi, int order, double h) {
  const int n = a.n;
  auto comb = [&](std::initializer_list<std::pair<double, double>> terms, double scale) {
    ComplexVec acc(n, 0.0);
    for (const auto& [offset, coeff] : terms) {
      const ComplexVec v = a.at(xi + offset * h);
      for (int j = 0; j < n; ++j) acc[j] += coeff * v[j];
    }
    for (auto& v : acc) v /= scale;
    return acc;
  };
  switch (order) {
    case 0: return a.at(xi);
    case 1: return comb({{-2, 1}, {-1, -8}, {1, 8}, {2, -1}}, 12 * h);
    case 2: return comb({{-2, -1}, {-1, 16}, {0, -30}, {1, 16}, {2, -1}}, 12 * h * h);
    case 3: return comb({{-3, 1}, {-2, -8}, {-1, 13}, {1, -13}, {2, 8}, {3, -1}}, 8 * h * h * h);
    default: throw std::invalid_argument("symbol_seminorm supports derivative orders up to 3");
  }
}

// Geometric sampling of |xi| in [1/2, n/2], both signs.
inline std::vector<double> default_xi_list(int n, int per_octave = 8) {
  std::vector<double> out;
  for (double t = -1.0; t <= std::log2(n / 2.0) + 1e-12; t += 1.0 / per_octave) {
    out.push_back(std::pow(2.0, t));
    out.push_back(-std::pow(2.0, t));
  }
  return out;
}

// M_rho^m(a) = sup_{alpha <= max_order} sup_xi (1+|xi|)^(alpha-m) |d_xi^alpha a(., xi)|_{W^{rho,inf}}.
inline double symbol_seminorm(const SymbolGrid& a, double rho, double m, int max_order,
                              const std::vector<double>& xi_list) {
  if (rho < 0.0) throw std::invalid_argument("negative regularity symbols are not supported");
  double best = 0.0;
  for (double xi : xi_list) {
    const double h = std::abs(xi) / 32.0;
    for (int alpha = 0; alpha <= max_order; ++alpha) {
      const ComplexVec d = symbol_xi_derivative(a, xi, alpha, h);
      RealVec re(d.size()), im(d.size());
      for (std::size_t j = 0; j < d.size(); ++j) {
        re[j] = d[j].real();
        im[j] = d[j].imag();
      }
      const double norm = spectral::wkinf_norm(re, rho) + spectral::wkinf_norm(im, rho);
      best = std::max(best, std::pow(1.0 + std::abs(xi), alpha - m) * norm);
    }
  }
  return best;
}

// ---- local smoothing weights ----

// w_{x0,kappa}(x) = w(kappa^{3/4}(x - x0)) with w = C g^2, where g has Fourier
// transform phi(4 omega); the square keeps w >= 0 with spectrum in |omega| <= 1.
// C makes min w = 1 on |x - x0| <= kappa^{-3/4}.
inline RealVec ls_weight(int n, double x0, double kappa) {
  const double scale = std::pow(kappa, 0.75);
  ComplexVec spec(n, 0.0);
  for (int idx = 0; idx < n; ++idx) {
    const int k = spectral::frequency(idx, n);
    if (k == n / 2) continue;
    spec[idx] = spectral::lp::cutoff(4.0 * k / scale) * std::exp(Complex(0.0, -k * x0));
  }
  RealVec g = spectral::real_part(fft::inverse(spec));
  RealVec w(n);
  for (int j = 0; j < n; ++j) w[j] = g[j] * g[j];
  // The profile is even and decreasing on the unit interval, so the minimum
  // over the window sits at its edge.
  auto profile_at = [&](double offset) {
    Complex acc = 0.0;
    for (int idx = 0; idx < n; ++idx) {
      const int k = spectral::frequency(idx, n);
      if (spec[idx] == 0.0) continue;
      acc += spectral::lp::cutoff(4.0 * k / scale) * std::exp(Complex(0.0, k * offset));
    }
    const double v = acc.real() / n;
    return v * v;
  };
  const double edge = profile_at(1.0 / scale);
  if (!(edge > 0.0)) throw std::runtime_error("local weight degenerate");
  for (double& v : w) v /= edge;
  return w;
}

// Compact bumps chi (== 1 on [-1/2, 1/2], support [-1, 1]) and the widened
// chi~ (== 1 on [-1, 1], support [-2, 2]), scaled by kappa^{-3/4}.
inline RealVec compact_weight(int n, double x0, double kappa, bool widened = false) {
  const double scale = std::pow(kappa, 0.75);
  RealVec out(n);
  for (int j = 0; j < n; ++j) {
    double d = std::remainder(spectral::kTwoPi * j / n - x0, spectral::kTwoPi);
    const double s = scale * d;
    out[j] = widened ? spectral::lp::cutoff(s) : spectral::lp::cutoff(2.0 * s);
  }
  return out;
}

// Symbol of S_{xi0,lambda,mu}: p(xi - xi0) + p(-xi + xi0) with
// p(z) = 1_{z+lambda >= 0} psi_lambda(z + lambda)(1 - chi(z/(c mu))), chi(s) = phi(2s).
inline double gap_symbol(double xi, double xi0, double lambda, double mu, double c) {
  auto p = [&](double z) {
    if (z + lambda < 0.0) return 0.0;
    return spectral::lp::band(z + lambda, lambda) * (1.0 - spectral::lp::cutoff(2.0 * z / (c * mu)));
  };
  return p(xi - xi0) + p(-xi + xi0);
}

template <class T>
std::vector<T> gap_projection(const std::vector<T>& u, double xi0, double lambda, double mu, double c) {
  return spectral::fourier_multiplier(u, [&](double xi) { return gap_symbol(xi, xi0, lambda, mu, c); });
}

template <class T>
double weighted_sobolev(const RealVec& w, const std::vector<T>& f, double sigma) {
  std::vector<T> prod(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) prod[j] = w[j] * f[j];
  return spectral::sobolev_norm(prod, sigma);
}

// |f|_{LS^sigma_{x0,lambda}} = sum_{kappa <= c lambda} |w_{x0,kappa} S_kappa f|_{H^sigma}.
template <class T>
double ls_seminorm(const std::vector<T>& f, double x0, double lambda, double sigma, double c) {
  const int n = static_cast<int>(f.size());
  double acc = 0.0;
  for (double kappa : spectral::lp::levels(n)) {
    if (kappa == 0.0 || kappa > c * lambda) continue;
    acc += weighted_sobolev(ls_weight(n, x0, kappa), spectral::lp::project(f, kappa), sigma);
  }
  return acc;
}

// Three-row seminorm collecting low, high and balanced frequencies.
template <class T>
double ls_seminorm_gap(const std::vector<T>& f, double x0, double xi0, double lambda, double mu,
                       double sigma, double c) {
  if (!(mu > std::pow(lambda, 0.75) && mu <= c * lambda))
    throw std::domain_error("gap width mu must lie in (lambda^{3/4}, c lambda]");
  const int n = static_cast<int>(f.size());
  double low_row = 0.0, high_row = 0.0;
  std::vector<T> above = spectral::fourier_multiplier(
      f, [&](double xi) { return 1.0 - spectral::lp::low(xi, c * lambda / 2.0); });
  for (double kappa : spectral::lp::levels(n)) {
    if (kappa == 0.0) continue;
    const std::vector<T> block = spectral::lp::project(f, kappa);
    if (kappa >= c * mu && kappa <= c * lambda) {
      low_row += std::pow(kappa, 0.75) / mu * spectral::sobolev_norm(block, sigma) +
                 weighted_sobolev(ls_weight(n, x0, kappa), block, sigma);
    }
    if (kappa >= lambda / c) high_row += weighted_sobolev(ls_weight(n, x0, lambda), block, sigma);
  }
  high_row += std::pow(lambda, 0.75) / mu * spectral::sobolev_norm(above, sigma);
  const double balanced =
      weighted_sobolev(ls_weight(n, x0, lambda), gap_projection(f, xi0, lambda, mu, c), sigma);
  return low_row + high_row + balanced;
}

}  // namespace wwlab::paradiff
