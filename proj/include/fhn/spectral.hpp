// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Linearization at a standing wave as the pencil
//   zeta diag(1, tau) (phi, psi) = (d phi'' + f'(u) phi - psi, psi'' + phi - gamma psi)
// on interior nodes with Dirichlet truncation, and its rightmost spectrum.

#pragma once

#include "fhn/field.hpp"
#include "fhn/linalg.hpp"
#include "fhn/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhn {

struct SpectralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using cplx = std::complex<double>;

// Unknowns interleaved, 2j -> phi at interior node j + 1, 2j + 1 -> psi.
struct Pencil {
  Grid grid;
  double d = 0.0, tau = 1.0, gamma = 0.0;
  std::vector<double> fprime;  // f'(u) at interior nodes
  std::size_t interior() const { return fprime.size(); }
  std::size_t dim() const { return 2 * fprime.size(); }
  double mass(std::size_t k) const { return k % 2 == 0 ? 1.0 : tau; }
};

inline Pencil assemble_lambda(const ModelParams& m, const Field& u) {
  if (u.size() < 5) throw std::invalid_argument("assemble_lambda: grid too small");
  Pencil p;
  p.grid = u.grid;
  p.d = m.d;
  p.tau = m.tau;
  p.gamma = m.gamma;
  p.fprime.resize(u.size() - 2);
  for (std::size_t j = 0; j < p.fprime.size(); ++j) p.fprime[j] = m.df(u.values[j + 1]);
  return p;
}

// A x on the interleaved vector.
inline std::vector<double> apply_pencil(const Pencil& p, std::span<const double> x) {
  const std::size_t m = p.interior();
  const double ih2 = 1.0 / (p.grid.h() * p.grid.h());
  std::vector<double> y(2 * m);
  auto phi = [&](long j) { return j < 0 || j >= static_cast<long>(m) ? 0.0 : x[2 * j]; };
  auto psi = [&](long j) { return j < 0 || j >= static_cast<long>(m) ? 0.0 : x[2 * j + 1]; };
  for (long j = 0; j < static_cast<long>(m); ++j) {
    y[2 * j] = p.d * (phi(j - 1) - 2.0 * phi(j) + phi(j + 1)) * ih2 + p.fprime[j] * phi(j) - psi(j);
    y[2 * j + 1] = (psi(j - 1) - 2.0 * psi(j) + psi(j + 1)) * ih2 + phi(j) - p.gamma * psi(j);
  }
  return y;
}

// A - sigma B as a band matrix (two sub- and super-diagonals).
inline BandMatrix shifted_band(const Pencil& p, double sigma) {
  const std::size_t m = p.interior(), n = 2 * m;
  const double ih2 = 1.0 / (p.grid.h() * p.grid.h());
  BandMatrix a(n, 2, 2);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = 2 * j, s = r + 1;
    a.at(r, r) = -2.0 * p.d * ih2 + p.fprime[j] - sigma;
    a.at(r, s) = -1.0;
    a.at(s, r) = 1.0;
    a.at(s, s) = -2.0 * ih2 - p.gamma - sigma * p.tau;
    if (j > 0) {
      a.at(r, r - 2) = p.d * ih2;
      a.at(s, s - 2) = ih2;
    }
    if (j + 1 < m) {
      a.at(r, r + 2) = p.d * ih2;
      a.at(s, s + 2) = ih2;
    }
  }
  return a;
}

// B^{-1} A dense; the second block row carries the 1/tau.
inline Eigen::MatrixXd standard_matrix(const Pencil& p) {
  const std::size_t n = p.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const auto col = apply_pencil(p, e);
    for (std::size_t r = 0; r < n; ++r) M(static_cast<long>(r), static_cast<long>(c)) = col[r] / p.mass(r);
    e[c] = 0.0;
  }
  return M;
}

// ---------------------------------------------------------- symbol

// Spectral abscissa of the constant-state symbol at u_e over the grid's
// resolvable wave numbers (discrete Laplacian symbol).
inline double symbol_abscissa(const ModelParams& m, double u_e, double h, int samples = 2001) {
  double best = -std::numeric_limits<double>::infinity();
  const double pi = std::numbers::pi;
  for (int k = 0; k < samples; ++k) {
    const double xi = pi / h * k / (samples - 1);
    const double s = std::sin(0.5 * xi * h);
    const double lap = 4.0 * s * s / (h * h);
    Eigen::Matrix2d M;
    M << -m.d * lap + m.df(u_e), -1.0, 1.0 / m.tau, (-lap - m.gamma) / m.tau;
    const auto ev = M.eigenvalues();
    best = std::max({best, ev(0).real(), ev(1).real()});
  }
  return best;
}

inline std::vector<cplx> symbol_eigenvalues(const ModelParams& m, double u_e, double xi) {
  Eigen::Matrix2d M;
  M << -m.d * xi * xi + m.df(u_e), -1.0, 1.0 / m.tau, (-xi * xi - m.gamma) / m.tau;
  const auto ev = M.eigenvalues();
  return {ev(0), ev(1)};
}

// ---------------------------------------------------------- eigensolvers

struct Eigenpair {
  cplx value;
  Eigen::VectorXcd vector;  // interleaved, unit Euclidean norm
  double residual = 0.0;    // |A x - zeta B x| / |x|
};

struct SpectrumOptions {
  int count = 8;
  std::size_t dense_limit = 2001;  // grid nodes at or below which the dense solver runs
  double shift = 0.05;             // shift-invert target, right of the expected spectrum
  int guard = 16;                  // extra block vectors
  int max_iterations = 500;
  double tolerance = 1e-10;        // relative Ritz residual
  double zero_tol = 1e-6;          // |zeta| below which eigenvalues form the translation cluster
  double stability_threshold = 1e-6;
  std::uint64_t seed = 11;
};

inline double pencil_residual(const Pencil& p, const Eigen::VectorXcd& x, cplx z) {
  const std::size_t n = p.dim();
  std::vector<double> re(n), im(n);
  for (std::size_t k = 0; k < n; ++k) {
    re[k] = x(static_cast<long>(k)).real();
    im[k] = x(static_cast<long>(k)).imag();
  }
  const auto ar = apply_pencil(p, re), ai = apply_pencil(p, im);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx ax(ar[k], ai[k]);
    s += std::norm(ax - z * p.mass(k) * x(static_cast<long>(k)));
  }
  return std::sqrt(s) / std::max(x.norm(), 1e-300);
}

namespace detail {

inline void sort_rightmost(std::vector<Eigenpair>& v) {
  std::stable_sort(v.begin(), v.end(), [](const Eigenpair& a, const Eigenpair& b) {
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    return a.value.imag() > b.value.imag();
  });
}

inline std::vector<Eigenpair> dense_eigs(const Pencil& p) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(standard_matrix(p));
  if (es.info() != Eigen::Success) throw SpectralError("dense eigensolver failed");
  std::vector<Eigenpair> out;
  for (long k = 0; k < es.eigenvalues().size(); ++k) {
    Eigenpair e;
    e.value = es.eigenvalues()(k);
    e.vector = es.eigenvectors().col(k).normalized();
    out.push_back(std::move(e));
  }
  return out;
}

// Block shift-invert iteration with Rayleigh-Ritz on (A - sigma B)^{-1} B.
inline std::vector<Eigenpair> shift_invert_eigs(const Pencil& p, const SpectrumOptions& o,
                                                int* iterations) {
  const std::size_t n = p.dim();
  const long b = std::min<long>(static_cast<long>(n), o.count + o.guard);
  BandMatrix lu = shifted_band(p, o.shift);
  lu.factor();
  auto op = [&](const Eigen::VectorXd& x) {
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[k] = p.mass(k) * x(static_cast<long>(k));
    lu.solve(r);
    return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<long>(n)).eval();
  };
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd Q(static_cast<long>(n), b);
  for (long c = 0; c < b; ++c)
    for (long r = 0; r < static_cast<long>(n); ++r) Q(r, c) = nd(rng);
  Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() * Eigen::MatrixXd::Identity(static_cast<long>(n), b);
  Eigen::MatrixXd Y(static_cast<long>(n), b);
  for (int it = 1; it <= o.max_iterations; ++it) {
    for (long c = 0; c < b; ++c) Y.col(c) = op(Q.col(c));
    const Eigen::MatrixXd H = Q.transpose() * Y;
    const Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw SpectralError("Rayleigh-Ritz eigensolver failed");
    std::vector<long> order(static_cast<std::size_t>(b));
    for (long k = 0; k < b; ++k) order[static_cast<std::size_t>(k)] = k;
    const auto th = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](long a, long c) { return std::abs(th(a)) > std::abs(th(c)); });
    bool done = true;
    std::vector<Eigenpair> out;
    const Eigen::MatrixXcd Qc = Q.cast<cplx>(), Yc = Y.cast<cplx>();
    for (int k = 0; k < o.count && k < b; ++k) {
      const long i = order[static_cast<std::size_t>(k)];
      const Eigen::VectorXcd y = es.eigenvectors().col(i);
      const Eigen::VectorXcd x = Qc * y;
      const double res = (Yc * y - th(i) * x).norm() / std::max(std::abs(th(i)) * x.norm(), 1e-300);
      if (!(res <= o.tolerance)) done = false;
      Eigenpair e;
      e.value = o.shift + 1.0 / th(i);
      e.vector = x.normalized();
      out.push_back(std::move(e));
    }
    if (done) {
      if (iterations) *iterations = it;
      return out;
    }
    Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() * Eigen::MatrixXd::Identity(static_cast<long>(n), b);
  }
  throw SpectralError("shift-invert iteration did not converge");
}

}  // namespace detail

// Left eigenvector y with A^T y = zeta B y for a real eigenvalue, by inverse
// iteration on the transposed band matrix just off zeta.
inline std::vector<double> left_eigenvector(const Pencil& p, double zeta, int iterations = 8) {
  const std::size_t n = p.dim();
  const double s = zeta + 1e-9 * std::max(1.0, std::abs(zeta));
  const BandMatrix a = shifted_band(p, s);
  BandMatrix t(n, 2, 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i > 2 ? i - 2 : 0); j <= std::min(n - 1, i + 2); ++j) t.at(j, i) = a.get(i, j);
  std::vector<double> y(n, 1.0);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t k = 0; k < n; ++k) y[k] *= p.mass(k);
    t.solve(y);
    double nn = 0.0;
    for (double x : y) nn += x * x;
    nn = std::sqrt(nn);
    for (double& x : y) x /= nn;
  }
  return y;
}

// ---------------------------------------------------------- report

struct ModePair {
  std::vector<double> phi, psi;  // full grid, zero at the ends
};

struct SpectrumReport {
  std::vector<cplx> rightmost_eigenvalues;
  std::vector<double> residuals;
  double zero_mode_error = std::numeric_limits<double>::infinity();
  double zero_mode_correlation = 0.0;
  int zero_cluster = 0;                 // eigenvalues with |zeta| <= zero_tol
  double spectral_gap = std::numeric_limits<double>::infinity();  // |next| beyond the cluster
  double essential_spectrum_bound = 0.0;
  std::optional<double> zeta_max;       // largest real unstable eigenvalue
  std::optional<ModePair> unstable_mode;
  std::optional<ModePair> unstable_adjoint;  // left eigenvector, same normalization
  bool stable = false;                  // all eigenvalues off the cluster have Re <= threshold
  std::vector<unsigned char> isolated;  // Re zeta > essential bound
  std::string method;
  int iterations = 0;
};

// Fourth-order centered derivative, second order next to the ends.
inline std::vector<double> smooth_derivative(std::span<const double> u, double h) {
  const std::size_t n = u.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i >= 2 && i + 2 < n)
      d[i] = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
    else
      d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  }
  return d;
}

inline std::vector<double> translation_vector(const Field& u, const Field& v) {
  const auto du = smooth_derivative(u.values, u.grid.h()), dv = smooth_derivative(v.values, v.grid.h());
  std::vector<double> x(2 * (u.size() - 2));
  for (std::size_t j = 0; j + 2 < u.size(); ++j) {
    x[2 * j] = du[j + 1];
    x[2 * j + 1] = dv[j + 1];
  }
  return x;
}

// Sup of A (u', v') relative to nothing; the translation zero mode check.
inline double translation_residual(const Pencil& p, const Field& u, const Field& v) {
  const auto r = apply_pencil(p, translation_vector(u, v));
  return sup_norm(r);
}

// Cosine of the angle between x and the span of the given vectors (real and
// imaginary parts taken as a real basis).
inline double span_correlation(const std::vector<Eigen::VectorXcd>& vecs, const std::vector<double>& x) {
  const long n = static_cast<long>(x.size());
  std::vector<Eigen::VectorXd> basis;
  for (const auto& v : vecs)
    for (const Eigen::VectorXd& part : {Eigen::VectorXd(v.real()), Eigen::VectorXd(v.imag())}) {
      Eigen::VectorXd q = part;
      for (const auto& e : basis) q -= e.dot(q) * e;
      for (const auto& e : basis) q -= e.dot(q) * e;
      const double nq = q.norm();
      if (nq > 1e-8 * std::max(part.norm(), 1e-300) && nq > 1e-12) basis.push_back(q / nq);
    }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  double s = 0.0;
  for (const auto& e : basis) s += std::pow(e.dot(xv), 2);
  return std::sqrt(s) / std::max(xv.norm(), 1e-300);
}

inline SpectrumReport rightmost_spectrum(const ModelParams& m, const Field& u, const Field& v,
                                         const SpectrumOptions& opt = {}) {
  require_same_grid(u.grid, v.grid);
  const Pencil p = assemble_lambda(m, u);
  SpectrumReport rep;
  std::vector<Eigenpair> eig;
  if (u.size() <= opt.dense_limit) {
    eig = detail::dense_eigs(p);
    rep.method = "dense";
  } else {
    eig = detail::shift_invert_eigs(p, opt, &rep.iterations);
    rep.method = "shift-invert";
  }
  for (auto& e : eig) e.residual = pencil_residual(p, e.vector, e.value);
  detail::sort_rightmost(eig);
  if (eig.size() > static_cast<std::size_t>(opt.count)) eig.resize(static_cast<std::size_t>(opt.count));
  // Conjugate symmetry is enforced by snapping tiny imaginary parts.
  for (auto& e : eig)
    if (std::abs(e.value.imag()) <= 1e-12 * std::max(1.0, std::abs(e.value))) e.value = e.value.real();

  rep.essential_spectrum_bound = std::max(symbol_abscissa(m, m.u_eq(u.left), u.grid.h()),
                                          symbol_abscissa(m, m.u_eq(u.right), u.grid.h()));
  std::vector<Eigen::VectorXcd> cluster;
  std::size_t nearest = 0;
  for (std::size_t k = 0; k < eig.size(); ++k) {
    rep.rightmost_eigenvalues.push_back(eig[k].value);
    rep.residuals.push_back(eig[k].residual);
    rep.isolated.push_back(eig[k].value.real() > rep.essential_spectrum_bound);
    if (std::abs(eig[k].value) < std::abs(eig[nearest].value)) nearest = k;
    if (std::abs(eig[k].value) <= opt.zero_tol) cluster.push_back(eig[k].vector);
  }
  if (eig.empty()) throw SpectralError("no eigenvalues computed");
  rep.zero_mode_error = std::abs(eig[nearest].value);
  rep.zero_cluster = static_cast<int>(cluster.size());
  if (cluster.empty()) cluster.push_back(eig[nearest].vector);
  rep.zero_mode_correlation = span_correlation(cluster, translation_vector(u, v));
  rep.stable = true;
  for (std::size_t k = 0; k < eig.size(); ++k) {
    const bool in_cluster = std::abs(eig[k].value) <= opt.zero_tol || k == nearest;
    if (in_cluster) continue;
    rep.spectral_gap = std::min(rep.spectral_gap, std::abs(eig[k].value));
    if (eig[k].value.real() > opt.stability_threshold) rep.stable = false;
    if (eig[k].value.imag() == 0.0 && eig[k].value.real() > opt.stability_threshold &&
        (!rep.zeta_max || eig[k].value.real() > *rep.zeta_max)) {
      rep.zeta_max = eig[k].value.real();
      ModePair mode;
      mode.phi.assign(u.size(), 0.0);
      mode.psi.assign(u.size(), 0.0);
      const auto& x = eig[k].vector;
      // Real eigenvector up to a complex phase: rotate onto the real axis.
      long big = 0;
      for (long i = 0; i < x.size(); ++i)
        if (std::abs(x(i)) > std::abs(x(big))) big = i;
      const cplx ph = std::abs(x(big)) / x(big);
      for (std::size_t j = 0; j + 2 < u.size(); ++j) {
        mode.phi[j + 1] = (ph * x(static_cast<long>(2 * j))).real();
        mode.psi[j + 1] = (ph * x(static_cast<long>(2 * j + 1))).real();
      }
      rep.unstable_mode = std::move(mode);
      const auto y = left_eigenvector(p, eig[k].value.real());
      ModePair adj;
      adj.phi.assign(u.size(), 0.0);
      adj.psi.assign(u.size(), 0.0);
      for (std::size_t j = 0; j + 2 < u.size(); ++j) {
        adj.phi[j + 1] = y[2 * j];
        adj.psi[j + 1] = y[2 * j + 1];
      }
      rep.unstable_adjoint = std::move(adj);
    }
  }
  return rep;
}

}  // namespace fhn
