#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "wwlab/spectral.hpp"

namespace wwlab::elliptic {

using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

// Rows are z-levels (row 0 is the surface z = 0), columns are x-points.
using StripField = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Which curve the strip bottom z = -1 is mapped to.
//   kFlat:              y = -h, a fixed flat bed (rho = (1+z) e^{delta z <D>} eta + h z).
//   kSurfaceFollowing:  y = eta - h, the constant-depth strip under the surface.
enum class BottomGeometry { kFlat, kSurfaceFollowing };

inline std::string to_string(BottomGeometry g) {
  return g == BottomGeometry::kFlat ? "flat" : "surface_following";
}

// Chebyshev-Gauss-Lobatto levels on [-1, 0] with collocation derivative matrices.
struct StripGrid {
  int nx = 0;
  int nz = 0;
  RealVec z;
  Eigen::MatrixXd dz;
  Eigen::MatrixXd dzz;

  static StripGrid chebyshev(int nx, int nz) {
    if (nz < 4) throw std::invalid_argument("strip needs at least 4 vertical levels");
    if (!spectral::is_power_of_two(nx) || nx < 16) throw std::invalid_argument("nx must be a power of two >= 16");
    StripGrid g;
    g.nx = nx;
    g.nz = nz;
    const int order = nz - 1;
    RealVec s(nz);
    for (int i = 0; i < nz; ++i) s[i] = std::cos(spectral::kPi * i / order);
    g.z.resize(nz);
    for (int i = 0; i < nz; ++i) g.z[i] = 0.5 * (s[i] - 1.0);
    g.z[0] = 0.0;
    g.z[order] = -1.0;
    Eigen::MatrixXd d(nz, nz);
    auto weight = [order](int i) { return (i == 0 || i == order ? 2.0 : 1.0) * (i % 2 == 0 ? 1.0 : -1.0); };
    for (int i = 0; i < nz; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < nz; ++j) {
        if (i == j) continue;
        d(i, j) = weight(i) / weight(j) / (s[i] - s[j]);
        row_sum += d(i, j);
      }
      d(i, i) = -row_sum;
    }
    // d/dz = 2 d/ds under z = (s - 1)/2.
    g.dz = 2.0 * d;
    g.dzz = g.dz * g.dz;
    return g;
  }
};

namespace detail {

// Applies a per-row spectral multiplier to pairs of real rows packed into one
// complex transform. Valid for multipliers m with m(-k) = conj(m(k)).
template <class M>
void row_multiplier(const StripField& in, StripField& out, M&& m) {
  const int nz = static_cast<int>(in.rows()), nx = static_cast<int>(in.cols());
  out.resize(nz, nx);
  ComplexVec buf(nx), spec(nx);
  for (int i = 0; i < nz; i += 2) {
    const bool pair = i + 1 < nz;
    for (int j = 0; j < nx; ++j) buf[j] = Complex(in(i, j), pair ? in(i + 1, j) : 0.0);
    fft::forward(buf.data(), spec.data(), nx);
    for (int idx = 0; idx < nx; ++idx) spec[idx] *= Complex(m(spectral::frequency(idx, nx)));
    fft::inverse(spec.data(), buf.data(), nx);
    for (int j = 0; j < nx; ++j) {
      out(i, j) = buf[j].real();
      if (pair) out(i + 1, j) = buf[j].imag();
    }
  }
}

inline void x_derivatives(const StripField& f, StripField* fx, StripField* fxx) {
  const int nx = static_cast<int>(f.cols());
  if (fx) row_multiplier(f, *fx, [nx](int k) { return k == nx / 2 ? Complex(0.0) : Complex(0.0, k); });
  if (fxx) row_multiplier(f, *fxx, [](int k) { return Complex(-double(k) * k); });
}

// Spectra of the rows of a real strip field (two rows per complex transform).
inline std::vector<ComplexVec> row_spectra(const StripField& f) {
  const int nz = static_cast<int>(f.rows()), nx = static_cast<int>(f.cols());
  std::vector<ComplexVec> out(nz, ComplexVec(nx));
  ComplexVec buf(nx), spec(nx);
  for (int i = 0; i < nz; i += 2) {
    const bool pair = i + 1 < nz;
    for (int j = 0; j < nx; ++j) buf[j] = Complex(f(i, j), pair ? f(i + 1, j) : 0.0);
    fft::forward(buf.data(), spec.data(), nx);
    for (int idx = 0; idx < nx; ++idx) {
      const Complex zk = spec[idx], zmk = std::conj(spec[(nx - idx) % nx]);
      out[i][idx] = 0.5 * (zk + zmk);
      if (pair) out[i + 1][idx] = Complex(0.0, -0.5) * (zk - zmk);
    }
  }
  return out;
}

// Inverse of row_spectra for Hermitian row spectra.
inline StripField rows_from_spectra(const std::vector<ComplexVec>& spec) {
  const int nz = static_cast<int>(spec.size()), nx = static_cast<int>(spec[0].size());
  StripField out(nz, nx);
  ComplexVec buf(nx), phys(nx);
  for (int i = 0; i < nz; i += 2) {
    const bool pair = i + 1 < nz;
    for (int idx = 0; idx < nx; ++idx) buf[idx] = spec[i][idx] + (pair ? Complex(0.0, 1.0) * spec[i + 1][idx] : 0.0);
    fft::inverse(buf.data(), phys.data(), nx);
    for (int j = 0; j < nx; ++j) {
      out(i, j) = phys[j].real();
      if (pair) out(i + 1, j) = phys[j].imag();
    }
  }
  return out;
}

}  // namespace detail

struct FlatteningMap {
  BottomGeometry geometry = BottomGeometry::kFlat;
  double h = 1.0;
  double delta = 0.1;
  StripField rho, rho_x, rho_z, rho_xx, rho_xz, rho_zz;
  double min_rho_z = 0.0;
};

// rho and its first and second derivatives, all in closed form through the
// multipliers e^{delta z <k>} and e^{-(1+z) delta <k>}.
inline FlatteningMap build_flattening(const StripGrid& grid, const RealVec& eta, double h, double delta,
                                      BottomGeometry geometry = BottomGeometry::kFlat) {
  if (static_cast<int>(eta.size()) != grid.nx) throw std::invalid_argument("eta does not match strip grid");
  if (!(h > 0.0)) throw std::invalid_argument("depth must be positive");
  const int nz = grid.nz, nx = grid.nx;
  const ComplexVec eh = spectral::spectrum(eta);
  std::vector<ComplexVec> r0(nz, ComplexVec(nx)), rz(nz, ComplexVec(nx)), rzz(nz, ComplexVec(nx));
  for (int i = 0; i < nz; ++i) {
    const double z = grid.z[i];
    for (int idx = 0; idx < nx; ++idx) {
      const int k = spectral::frequency(idx, nx);
      const double jk = spectral::japanese(k);
      const double e = std::exp(delta * z * jk);
      double a0 = (1 + z) * e;
      double az = e + (1 + z) * delta * jk * e;
      double azz = 2 * delta * jk * e + (1 + z) * delta * delta * jk * jk * e;
      if (geometry == BottomGeometry::kSurfaceFollowing) {
        const double f = std::exp(-(1 + z) * delta * jk);
        a0 -= z * f;
        az += -f + z * delta * jk * f;
        azz += 2 * delta * jk * f - z * delta * delta * jk * jk * f;
      }
      r0[i][idx] = a0 * eh[idx];
      rz[i][idx] = az * eh[idx];
      rzz[i][idx] = azz * eh[idx];
    }
    // The depth term h z (and -z * (-h) for the surface-following strip).
    r0[i][0] += h * z * nx;
    rz[i][0] += h * nx;
  }
  FlatteningMap map;
  map.geometry = geometry;
  map.h = h;
  map.delta = delta;
  map.rho = detail::rows_from_spectra(r0);
  map.rho_z = detail::rows_from_spectra(rz);
  map.rho_zz = detail::rows_from_spectra(rzz);
  detail::x_derivatives(map.rho, &map.rho_x, &map.rho_xx);
  detail::x_derivatives(map.rho_z, &map.rho_xz, nullptr);
  map.min_rho_z = map.rho_z.minCoeff();
  if (!(map.min_rho_z > 0.0))
    throw std::runtime_error("degenerate flattening: min d_z rho = " + std::to_string(map.min_rho_z));
  return map;
}

struct EllipticCoefficients {
  StripField alpha, beta, gamma;
};

inline EllipticCoefficients compute_coefficients(const FlatteningMap& m) {
  EllipticCoefficients c;
  const auto denom = (1.0 + m.rho_x.array().square()).eval();
  c.alpha = (m.rho_z.array().square() / denom).matrix();
  c.beta = (-2.0 * m.rho_z.array() * m.rho_x.array() / denom).matrix();
  c.gamma = ((m.rho_zz.array() + c.alpha.array() * m.rho_xx.array() + c.beta.array() * m.rho_xz.array()) /
             m.rho_z.array())
                .matrix();
  return c;
}

// Per-mode LU factors of the flat operator d_z^2 - h^2 k^2 with the surface
// Dirichlet row and the bottom Neumann row. Shared across solves.
class FlatPreconditioner {
 public:
  FlatPreconditioner(const StripGrid& grid, double h) : nx_(grid.nx), nz_(grid.nz) {
    for (int k = 0; k <= nx_ / 2; ++k) {
      Eigen::MatrixXd m = grid.dzz - h * h * double(k) * k * Eigen::MatrixXd::Identity(nz_, nz_);
      m.row(0).setZero();
      m(0, 0) = 1.0;
      m.row(nz_ - 1) = grid.dz.row(nz_ - 1);
      lu_.emplace_back(m);
    }
  }

  static std::shared_ptr<const FlatPreconditioner> shared(const StripGrid& grid, double h) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, double>, std::shared_ptr<const FlatPreconditioner>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(grid.nx, grid.nz, h);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto p = std::make_shared<const FlatPreconditioner>(grid, h);
    cache.emplace(key, p);
    return p;
  }

  StripField apply(const StripField& rhs) const {
    std::vector<ComplexVec> spec = detail::row_spectra(rhs);
    Eigen::MatrixXd col(nz_, 2);
    for (int k = 0; k <= nx_ / 2; ++k) {
      for (int i = 0; i < nz_; ++i) {
        col(i, 0) = spec[i][k].real();
        col(i, 1) = spec[i][k].imag();
      }
      const Eigen::MatrixXd sol = lu_[k].solve(col);
      for (int i = 0; i < nz_; ++i) {
        spec[i][k] = Complex(sol(i, 0), sol(i, 1));
        if (k != 0 && k != nx_ / 2) spec[i][nx_ - k] = std::conj(spec[i][k]);
      }
    }
    return detail::rows_from_spectra(spec);
  }

 private:
  int nx_, nz_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // final residual relative to the problem scale
  bool converged = true;
};

// Restarted GMRES with right preconditioning on flattened strip fields.
template <class ApplyA, class ApplyP>
SolveReport gmres(ApplyA&& apply_a, ApplyP&& apply_p, const StripField& b, StripField& x, double atol,
                  int restart = 40, int max_iter = 400) {
  using Vec = Eigen::VectorXd;
  const auto rows = b.rows(), cols = b.cols();
  auto flat = [](const StripField& f) { return Eigen::Map<const Vec>(f.data(), f.size()); };
  auto shape = [rows, cols](const Vec& v) {
    return StripField(Eigen::Map<const StripField>(v.data(), rows, cols));
  };
  SolveReport report;
  x.setZero(rows, cols);
  Vec r = flat(b);
  double beta = r.norm();
  report.residual = beta;
  int total = 0;
  while (beta > atol && total < max_iter) {
    std::vector<Vec> v{r / beta};
    std::vector<Vec> z;
    Eigen::MatrixXd hmat = Eigen::MatrixXd::Zero(restart + 1, restart);
    Vec cs = Vec::Zero(restart), sn = Vec::Zero(restart), g = Vec::Zero(restart + 1);
    g(0) = beta;
    int j = 0;
    for (; j < restart && total < max_iter; ++j, ++total) {
      z.push_back(flat(apply_p(shape(v[j]))));
      Vec w = flat(apply_a(shape(z[j])));
      for (int i = 0; i <= j; ++i) {
        hmat(i, j) = w.dot(v[i]);
        w -= hmat(i, j) * v[i];
      }
      const double wnorm = w.norm();
      hmat(j + 1, j) = wnorm;
      for (int i = 0; i < j; ++i) {
        const double tmp = cs(i) * hmat(i, j) + sn(i) * hmat(i + 1, j);
        hmat(i + 1, j) = -sn(i) * hmat(i, j) + cs(i) * hmat(i + 1, j);
        hmat(i, j) = tmp;
      }
      const double denom = std::hypot(hmat(j, j), hmat(j + 1, j));
      cs(j) = hmat(j, j) / denom;
      sn(j) = hmat(j + 1, j) / denom;
      hmat(j, j) = denom;
      hmat(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      if (std::abs(g(j + 1)) <= atol || wnorm == 0.0) {
        ++j;
        ++total;
        break;
      }
      v.push_back(w / wnorm);
    }
    Vec y = hmat.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    Vec dx = Vec::Zero(b.size());
    for (int i = 0; i < j; ++i) dx += y(i) * z[i];
    Eigen::Map<Vec>(x.data(), x.size()) += dx;
    r = flat(b) - flat(apply_a(x));
    beta = r.norm();
    report.residual = beta;
  }
  report.iterations = total;
  report.converged = beta <= atol;
  return report;
}

// Solution of the flattened problem together with its derivatives.
struct StripSolution {
  StripField theta, theta_x, theta_z, theta_xx, theta_xz, theta_zz;
  SolveReport report;
};

// Solves (d_z^2 + alpha d_x^2 + beta d_x d_z - gamma d_z) theta = source,
// theta(z=0) = top, d_z theta(z=-1) = bottom_flux.
//
// theta is split as E top + w, where E is the exact flat harmonic extension
// cosh(h|k|(z+1))/cosh(h|k|) evaluated in closed form; only the correction w
// is discretized. On a flat surface w vanishes identically.
class StripSolver {
 public:
  StripSolver(StripGrid grid, FlatteningMap map, double tol = 1e-10)
      : grid_(std::move(grid)), map_(std::move(map)), coeff_(compute_coefficients(map_)), tol_(tol) {
    precond_ = FlatPreconditioner::shared(grid_, map_.h);
  }

  const StripGrid& grid() const { return grid_; }
  const FlatteningMap& map() const { return map_; }
  const EllipticCoefficients& coefficients() const { return coeff_; }

  StripField apply_operator(const StripField& w, const StripField& w_z, const StripField& w_zz) const {
    StripField w_x, w_xx, w_xz;
    detail::x_derivatives(w, nullptr, &w_xx);
    detail::x_derivatives(w_z, &w_xz, nullptr);
    return (w_zz.array() + coeff_.alpha.array() * w_xx.array() + coeff_.beta.array() * w_xz.array() -
            coeff_.gamma.array() * w_z.array())
        .matrix();
  }

  StripSolution solve(const RealVec& top, const StripField* source = nullptr,
                      const RealVec* bottom_flux = nullptr) const {
    const int nz = grid_.nz, nx = grid_.nx;
    if (static_cast<int>(top.size()) != nx) throw std::invalid_argument("surface data does not match grid");
    StripSolution sol;
    lift(top, sol);
    StripField rhs = -apply_operator(sol.theta, sol.theta_z, sol.theta_zz);
    if (source) rhs += *source;
    rhs.row(0).setZero();
    for (int j = 0; j < nx; ++j)
      rhs(nz - 1, j) = (bottom_flux ? (*bottom_flux)[j] : 0.0) - sol.theta_z(nz - 1, j);

    double scale = sol.theta_zz.norm() + sol.theta_z.norm() + sol.theta.norm();
    if (source) scale += source->norm();
    if (bottom_flux) scale += std::sqrt(static_cast<double>(nz)) * Eigen::Map<const Eigen::VectorXd>(bottom_flux->data(), nx).norm();
    if (scale == 0.0) scale = 1.0;

    auto apply_a = [&](const StripField& w) {
      StripField wz = grid_.dz * w;
      StripField wzz = grid_.dzz * w;
      StripField out = apply_operator(w, wz, wzz);
      out.row(0) = w.row(0);
      out.row(nz - 1) = wz.row(nz - 1);
      return out;
    };
    auto apply_p = [&](const StripField& r) { return precond_->apply(r); };
    StripField w;
    sol.report = gmres(apply_a, apply_p, rhs, w, tol_ * scale);
    sol.report.residual /= scale;
    if (!sol.report.converged)
      throw std::runtime_error("strip solve did not converge: residual " + std::to_string(sol.report.residual));
    const StripField wz = grid_.dz * w, wzz = grid_.dzz * w;
    sol.theta += w;
    sol.theta_z += wz;
    sol.theta_zz += wzz;
    detail::x_derivatives(sol.theta, &sol.theta_x, &sol.theta_xx);
    detail::x_derivatives(sol.theta_z, &sol.theta_xz, nullptr);
    return sol;
  }

 private:
  void lift(const RealVec& top, StripSolution& sol) const {
    const int nz = grid_.nz, nx = grid_.nx;
    const double h = map_.h;
    const ComplexVec fh = spectral::spectrum(top);
    std::vector<ComplexVec> e0(nz, ComplexVec(nx)), ez(nz, ComplexVec(nx)), ezz(nz, ComplexVec(nx));
    for (int i = 0; i < nz; ++i) {
      const double z = grid_.z[i];
      for (int idx = 0; idx < nx; ++idx) {
        const double q = h * std::abs(spectral::frequency(idx, nx));
        // cosh(q(z+1))/cosh(q) and its z-derivative without overflow.
        const double decay = std::exp(q * z);
        const double far = std::exp(-2.0 * q * (z + 1.0)), norm = 1.0 + std::exp(-2.0 * q);
        const double value = decay * (1.0 + far) / norm;
        const double slope = q * decay * (1.0 - far) / norm;
        e0[i][idx] = value * fh[idx];
        ez[i][idx] = slope * fh[idx];
        ezz[i][idx] = q * q * value * fh[idx];
      }
    }
    sol.theta = detail::rows_from_spectra(e0);
    sol.theta_z = detail::rows_from_spectra(ez);
    sol.theta_zz = detail::rows_from_spectra(ezz);
  }

  StripGrid grid_;
  FlatteningMap map_;
  EllipticCoefficients coeff_;
  double tol_;
  std::shared_ptr<const FlatPreconditioner> precond_;
};

// G(eta) f = ((1 + rho_x^2)/rho_z d_z theta - rho_x d_x theta) at z = 0.
inline RealVec dtn_from_solution(const FlatteningMap& map, const StripSolution& sol) {
  const int nx = static_cast<int>(sol.theta.cols());
  RealVec out(nx);
  for (int j = 0; j < nx; ++j) {
    const double rx = map.rho_x(0, j), rz = map.rho_z(0, j);
    out[j] = (1.0 + rx * rx) / rz * sol.theta_z(0, j) - rx * sol.theta_x(0, j);
  }
  return out;
}

inline RealVec dtn(const StripSolver& solver, const RealVec& f, SolveReport* report = nullptr) {
  const StripSolution sol = solver.solve(f);
  if (report) *report = sol.report;
  return dtn_from_solution(solver.map(), sol);
}

// Cartesian derivatives of the physical potential phi, from theta and rho:
// d_x = d_x - (rho_x/rho_z) d_z and d_y = d_z / rho_z.
struct PhysicalDerivatives {
  StripField phi_x, phi_y, phi_xx, phi_xy;
};

inline PhysicalDerivatives physical_derivatives(const FlatteningMap& m, const StripSolution& s) {
  PhysicalDerivatives d;
  const auto rz = m.rho_z.array(), rx = m.rho_x.array();
  const auto ratio = (rx / rz).eval();
  const auto ratio_x = ((m.rho_xx.array() * rz - rx * m.rho_xz.array()) / rz.square()).eval();
  const auto ratio_z = ((m.rho_xz.array() * rz - rx * m.rho_zz.array()) / rz.square()).eval();
  d.phi_x = (s.theta_x.array() - ratio * s.theta_z.array()).matrix();
  d.phi_y = (s.theta_z.array() / rz).matrix();
  const auto dx_phix = (s.theta_xx.array() - ratio_x * s.theta_z.array() - ratio * s.theta_xz.array()).eval();
  const auto dz_phix = (s.theta_xz.array() - ratio_z * s.theta_z.array() - ratio * s.theta_zz.array()).eval();
  d.phi_xx = (dx_phix - ratio * dz_phix).matrix();
  d.phi_xy = (dz_phix / rz).matrix();
  return d;
}

struct PressureResult {
  StripField pressure;  // P~ on the strip
  RealVec taylor;       // a = -(1/rho_z) d_z P~ at z = 0
  SolveReport report;
};

// Delta P = -|grad^2 phi|^2 with P = 0 on the surface and d_y P = -g on the
// bottom (d_z P~ = -g rho_z there).
inline PressureResult pressure(const StripSolver& solver, const StripSolution& potential, double g) {
  const FlatteningMap& m = solver.map();
  const PhysicalDerivatives d = physical_derivatives(m, potential);
  // In two dimensions phi_yy = -phi_xx, so |grad^2 phi|^2 = 2(phi_xx^2 + phi_xy^2).
  const StripField forcing =
      (-2.0 * (d.phi_xx.array().square() + d.phi_xy.array().square()) * solver.coefficients().alpha.array())
          .matrix();
  const int nz = solver.grid().nz, nx = solver.grid().nx;
  RealVec bottom(nx), zero(nx, 0.0);
  for (int j = 0; j < nx; ++j) bottom[j] = -g * m.rho_z(nz - 1, j);
  StripSolution p = solver.solve(zero, &forcing, &bottom);
  PressureResult out;
  out.pressure = p.theta;
  out.report = p.report;
  out.taylor.resize(nx);
  for (int j = 0; j < nx; ++j) out.taylor[j] = -p.theta_z(0, j) / m.rho_z(0, j);
  return out;
}

}  // namespace wwlab::elliptic
