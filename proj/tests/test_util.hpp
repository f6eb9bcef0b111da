#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "wwlab/spectral.hpp"

namespace wwlab::testing {

using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

inline ComplexVec plane_wave(int n, int k, Complex amplitude = 1.0) {
  ComplexVec u(n);
  for (int j = 0; j < n; ++j) u[j] = amplitude * std::exp(Complex(0.0, k * spectral::kTwoPi * j / n));
  return u;
}

inline RealVec cosine(int n, double k, double amplitude = 1.0, double phase = 0.0) {
  RealVec u(n);
  for (int j = 0; j < n; ++j) u[j] = amplitude * std::cos(k * spectral::kTwoPi * j / n + phase);
  return u;
}

template <class T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

template <class T>
std::vector<T> difference(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

// |a - b|_2 / |b|_2.
template <class T>
double relative_l2(const std::vector<T>& a, const std::vector<T>& b) {
  return spectral::l2_norm(difference(a, b)) / spectral::l2_norm(b);
}

}  // namespace wwlab::testing
