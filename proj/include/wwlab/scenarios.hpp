#pragma once

#include <cmath>
#include <vector>

#include "wwlab/hamiltonian.hpp"
#include "wwlab/zakharov.hpp"

// Reference scenarios shared by the command line tool and the acceptance run.
namespace wwlab::scenarios {

using zakharov::WaveMode;
using zakharov::WaveParams;
using zakharov::WaveState;

struct WaveScenario {
  int n = 1024;
  WaveParams params;
  std::vector<WaveMode> modes;
  double t_end = 0.5;
  double dt = 1e-3;
  int stride = 1;

  WaveState initial() const { return zakharov::linear_waves(n, modes, params.g, params.h); }
};

// Two small linear waves; identity residuals and energy drift are measured on it.
inline WaveScenario identity_scenario() {
  WaveScenario s;
  s.n = 1024;
  s.params.nz = 32;
  s.modes = {{4, 1e-3, 0.0}, {7, 5e-4, 0.3}};
  return s;
}

// A sum_{k <= count} k^{-decay} cos(k x) with aligned phases: eta_x has a
// cusp-like profile so the truncated coefficients vary with lambda.
inline std::vector<WaveMode> rough_modes(double amplitude, int count, double decay = 2.5) {
  std::vector<WaveMode> modes;
  for (int k = 1; k <= count; ++k) modes.push_back({k, amplitude * std::pow(k, -decay), 0.0});
  return modes;
}

// Evolved coefficients for the flow, packet and orthogonality measurements.
inline WaveScenario flow_scenario() {
  WaveScenario s;
  s.n = 2048;
  s.params.nz = 32;
  s.modes = rough_modes(0.02, 64);
  s.t_end = 0.25;
  s.dt = 2e-3;
  s.stride = 5;
  return s;
}

// Two steps on a fine grid: enough for the centered time difference in the
// integration identity at lambda up to n/8.
inline WaveScenario f1_scenario() {
  WaveScenario s;
  s.n = 4096;
  s.params.nz = 32;
  s.modes = rough_modes(0.01, 128);
  s.t_end = 2e-3;
  s.dt = 1e-3;
  s.stride = 1;
  return s;
}

inline zakharov::Trajectory run(const zakharov::ZakharovSystem& sys, const WaveScenario& s) {
  return zakharov::evolve(sys, s.initial(), s.t_end, s.dt, s.stride);
}

// V and a of one state, truncated at c1 lambda and frozen in time.
inline hamiltonian::TruncatedCoeffs frozen_coefficients(const zakharov::TraceSet& traces, double t, double lambda) {
  hamiltonian::FrequencyConstants k;
  k.lambda = lambda;
  return hamiltonian::TruncatedCoeffs::from_fields({t}, {traces.V}, {traces.a}, k);
}

}  // namespace wwlab::scenarios
