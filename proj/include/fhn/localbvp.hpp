// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Short boundary value problems near an equilibrium, their conserved
// energy as a function of the window length, and the phase constants of
// the resulting oscillation law.

#pragma once

#include "fhn/action.hpp"
#include "fhn/field.hpp"
#include "fhn/fronts.hpp"
#include "fhn/model.hpp"
#include "fhn/newton.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fhn {

struct NoSmallSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WindowOptions {
  double h = 0.002;          // target spacing; the grid is fitted to [0, T]
  double rbar = 0.05;        // admissible endpoint radius in the P frame
  std::size_t cells = 0;     // fixed number of cells, overrides h when nonzero
  NewtonOptions newton{1e-9, 1e-14, 12, 8};
};

struct WindowBVP {
  Tail equilibrium = Tail::plus;
  double T = 0.0;
  Vec2 eta{0.0, 0.0}, zeta{0.0, 0.0};  // absolute (u, v) at x = 0 and x = T
  Field u, v;
  double energy = 0.0;          // at the midpoint
  double energy_quarter = 0.0;  // at x = T/4, for the constancy check
  double max_radius = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Complex eigenvalue s of the linear flow in the P frame, zeta'' = s zeta
// with zeta = Y1 + i Y2.
inline std::complex<double> frame_eigenvalue(const ModelParams& m) {
  const Mat2 M = m.spatial.P * m.A() * m.spatial.P_inv;
  return {M(0, 0), M(1, 0)};
}

inline std::complex<double> to_complex(const ModelParams& m, Tail t, const Vec2& uv) {
  const Vec2 y = m.spatial.P * Vec2(uv(0) - m.u_eq(t), uv(1) - m.v_eq(t));
  return {y(0), y(1)};
}

inline std::size_t window_cells(double T, const WindowOptions& opt) {
  if (opt.cells > 0) return opt.cells;
  auto c = static_cast<std::size_t>(std::ceil(T / opt.h - 1e-9));
  if (c % 2 == 1) ++c;
  return std::max<std::size_t>(c, 4);
}

}  // namespace detail

// Signed spatial rotation rate Im sqrt(s); the oscillation law carries -T times this.
inline double frame_rotation(const ModelParams& m) {
  return std::sqrt(detail::frame_eigenvalue(m)).imag();
}

// Exact solution of the linearization zeta'' = s zeta on [0, T] with the two
// end values, as a deviation (y, w) at local position x.
inline Vec2 linear_window_value(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                                double T, double x) {
  using C = std::complex<double>;
  const C q = std::sqrt(detail::frame_eigenvalue(m));
  const C a = detail::to_complex(m, t, eta), b = detail::to_complex(m, t, zeta);
  // c1 e^{q x} + c2 e^{-q x}, written with decaying exponentials only.
  const C eT = std::exp(-q * T), den = 1.0 - eT * eT;
  const C ex = std::exp(-q * x), eTx = std::exp(-q * (T - x));
  const C z = (a * (ex - eT * eTx) + b * (eTx - eT * ex)) / den;
  return m.spatial.P_inv * Vec2(z.real(), z.imag());
}

inline std::pair<std::vector<double>, std::vector<double>> linear_window_seed(
    const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta, const Grid& g) {
  const double T = g.x_max() - g.x_min();
  std::vector<double> y(g.size()), w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 d = linear_window_value(m, t, eta, zeta, T, g.x(i) - g.x_min());
    y[i] = d(0);
    w[i] = d(1);
  }
  return {y, w};
}

// Quadratic part of the deviation energy.
inline double quadratic_energy(const ModelParams& m, double dy, double dw, double y, double w) {
  return 0.5 * m.d * dy * dy - 0.5 * dw * dw - y * w + 0.5 * m.gamma * w * w -
         0.5 * m.beta * y * y;
}

// Energy of the exact linear window solution, evaluated at the midpoint.
inline double linear_window_energy(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                                   double T) {
  using C = std::complex<double>;
  const C q = std::sqrt(detail::frame_eigenvalue(m));
  const C a = detail::to_complex(m, t, eta), b = detail::to_complex(m, t, zeta);
  const C eT = std::exp(-q * T), den = 1.0 - eT * eT, eh = std::exp(-q * (0.5 * T));
  const C z = (a - b * eT) * eh / den + (b - a * eT) * eh / den;
  const C dz = -q * (a - b * eT) * eh / den + q * (b - a * eT) * eh / den;
  const Vec2 Y = m.spatial.P_inv * Vec2(z.real(), z.imag());
  const Vec2 dY = m.spatial.P_inv * Vec2(dz.real(), dz.imag());
  return quadratic_energy(m, dY(0), dY(1), Y(0), Y(1));
}

inline double deviation_energy_at(const ModelParams& m, Tail t, const std::vector<double>& y,
                                  const std::vector<double>& w, double h, std::size_t i) {
  const double dy = (y[i + 1] - y[i - 1]) / (2.0 * h), dw = (w[i + 1] - w[i - 1]) / (2.0 * h);
  return deviation_energy(m, t, dy, dw, y[i], w[i]);
}

inline Grid window_grid(double T, const WindowOptions& opt) {
  if (!(T >= 1.0)) throw std::invalid_argument("window length must be at least 1");
  return Grid(0.0, T, detail::window_cells(T, opt) + 1);
}

// Newton from a caller-supplied seed (deviations on window_grid(T, opt)).
inline WindowBVP solve_window_from(const ModelParams& m, Tail t, const Vec2& eta,
                                   const Vec2& zeta, double T, std::vector<double> y0,
                                   std::vector<double> w0, const WindowOptions& opt = {}) {
  if (!m.spatial.saddle_focus) throw std::invalid_argument("window solve needs a saddle-focus");
  const double ra = std::abs(detail::to_complex(m, t, eta));
  const double rb = std::abs(detail::to_complex(m, t, zeta));
  if (ra > opt.rbar || rb > opt.rbar)
    throw std::invalid_argument("window endpoints outside the admissible radius");
  const Grid g = window_grid(T, opt);
  const std::size_t cells = g.size() - 1;
  if (y0.size() != g.size() || w0.size() != g.size())
    throw std::invalid_argument("window seed does not match the grid");
  // End values exactly as given.
  y0.front() = eta(0) - m.u_eq(t);
  w0.front() = eta(1) - m.v_eq(t);
  y0.back() = zeta(0) - m.u_eq(t);
  w0.back() = zeta(1) - m.v_eq(t);
  BvpSystem sys{m, g, t, y0, w0, {}, {}};
  const auto r = solve_bvp(sys, opt.newton);
  WindowBVP out;
  out.equilibrium = t;
  out.T = T;
  out.eta = eta;
  out.zeta = zeta;
  out.iterations = r.iterations;
  out.converged = r.converged;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec2 d = m.spatial.P * Vec2(r.y[i], r.w[i]);
    out.max_radius = std::max(out.max_radius, d.norm());
  }
  if (!r.converged || !(out.max_radius <= 2.0 * opt.rbar))
    throw NoSmallSolution("window Newton left the neighborhood of the equilibrium");
  out.energy = deviation_energy_at(m, t, r.y, r.w, g.h(), cells / 2);
  out.energy_quarter = deviation_energy_at(m, t, r.y, r.w, g.h(), std::max<std::size_t>(cells / 4, 1));
  out.u = Field(g, add_constant(r.y, m.u_eq(t)), t, t);
  out.v = Field(g, add_constant(r.w, m.v_eq(t)), t, t);
  return out;
}

inline WindowBVP solve_window(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                              double T, const WindowOptions& opt = {}) {
  const Grid g = window_grid(T, opt);
  auto [y0, w0] = linear_window_seed(m, t, eta, zeta, g);
  return solve_window_from(m, t, eta, zeta, T, std::move(y0), std::move(w0), opt);
}

// ---------------------------------------------------------- sign map

struct EnergySample {
  double T, E;
};
struct EnergyZero {
  double T;
  int direction;  // +1 when E goes from negative to positive
};
struct EnergySignMap {
  std::vector<EnergySample> samples;
  std::vector<EnergyZero> zeros;
};

// E at T with the number of cells held fixed, so E is smooth in T.
inline double window_energy(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                            double T, WindowOptions opt, std::size_t cells) {
  opt.cells = cells;
  return solve_window(m, t, eta, zeta, T, opt).energy;
}

// Samples E on [T_lo, T_hi] and bisects every sign change to tol in T.
inline EnergySignMap energy_sign_map(const ModelParams& m, Tail t, const Vec2& eta,
                                     const Vec2& zeta, double T_lo, double T_hi, int samples,
                                     const WindowOptions& opt = {}, double tol = 1e-10) {
  if (samples < 2 || !(T_hi > T_lo)) throw std::invalid_argument("energy_sign_map: bad sampling");
  EnergySignMap map;
  for (int k = 0; k < samples; ++k) {
    const double T = T_lo + (T_hi - T_lo) * k / (samples - 1);
    map.samples.push_back({T, solve_window(m, t, eta, zeta, T, opt).energy});
  }
  for (std::size_t k = 0; k + 1 < map.samples.size(); ++k) {
    const auto [a, fa] = map.samples[k];
    const auto [b, fb] = map.samples[k + 1];
    if (fa == 0.0) {
      map.zeros.push_back({a, fb > 0 ? 1 : -1});
      continue;
    }
    if ((fa < 0) == (fb < 0) || fb == 0.0) continue;
    // Hold the cell count fixed inside the bracket.
    const std::size_t cells = detail::window_cells(b, opt);
    double lo = a, hi = b;
    double flo = window_energy(m, t, eta, zeta, lo, opt, cells);
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      const double fm = window_energy(m, t, eta, zeta, mid, opt, cells);
      if ((fm < 0) == (flo < 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    map.zeros.push_back({0.5 * (lo + hi), fa < 0 ? 1 : -1});
  }
  return map;
}

// ---------------------------------------------------------- phase law

// Endpoint angles are taken in the fixed P frame.  Reversing x exchanges
// the endpoints and preserves E, so the law involves theta_eta + theta_zeta;
// this equals a difference of angles once theta_eta is read in the
// x-reflected frame.
inline double phase_argument(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                             double T, double phi) {
  const double te = std::arg(detail::to_complex(m, t, eta));
  const double tz = std::arg(detail::to_complex(m, t, zeta));
  return tz + te - T * frame_rotation(m) + phi;
}

inline double wrap_pi(double a) {  // into [-pi/2, pi/2)
  const double p = std::numbers::pi;
  return a - p * std::floor(a / p + 0.5);
}

struct PhaseFit {
  double phi = 0.0;     // phase constant mod 2 pi
  double spread = 0.0;  // max deviation of the per-zero estimates, mod pi
  std::size_t zeros = 0;
};

struct PhaseObservation {
  Vec2 eta, zeta;
  EnergyZero zero;
};

// Each zero pins the argument to +-pi/2; which one follows from the crossing
// direction and the sign of the rotation, so phi comes out mod 2 pi.
inline PhaseFit fit_phase(const ModelParams& m, Tail t, const std::vector<PhaseObservation>& obs) {
  if (obs.empty()) throw std::invalid_argument("fit_phase needs at least one zero");
  const double pi = std::numbers::pi;
  const double rot = frame_rotation(m);
  std::vector<double> est;
  double sx = 0, sy = 0;
  for (const auto& o : obs) {
    const int dir = rot > 0 ? -o.zero.direction : o.zero.direction;
    const double target = dir < 0 ? 0.5 * pi : -0.5 * pi;
    const double p = target - phase_argument(m, t, o.eta, o.zeta, o.zero.T, 0.0);
    est.push_back(p);
    sx += std::cos(p);
    sy += std::sin(p);
  }
  PhaseFit f;
  f.phi = std::atan2(sy, sx);
  f.zeros = est.size();
  for (double p : est) f.spread = std::max(f.spread, std::abs(wrap_pi(p - f.phi)));
  return f;
}

// Fraction of samples with |cos| > delta whose energy sign matches cos.
inline double sign_law_fraction(const ModelParams& m, Tail t, const Vec2& eta, const Vec2& zeta,
                                const std::vector<EnergySample>& s, double phi,
                                double delta = 0.5, std::size_t* used = nullptr) {
  std::size_t n = 0, ok = 0;
  for (const auto& e : s) {
    const double c = std::cos(phase_argument(m, t, eta, zeta, e.T, phi));
    if (std::abs(c) <= delta) continue;
    ++n;
    if ((c > 0) == (e.E > 0)) ++ok;
  }
  if (used) *used = n;
  return n == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(n);
}

// ---------------------------------------------------------- kappa

struct KappaEstimate {
  double kappa = 0.0;
  double T0 = 0.0;
  double z = 0.0;
  int n_tilde = 0;
  Tail equilibrium = Tail::plus;
  double radius = 0.0;
  bool widened = false;
};

struct KappaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest z > center on the grid where the right tail radius stays below r.
inline double tail_point_for_radius(const ModelParams& m, const FrontSolution& f, double r) {
  const Grid& g = f.u.grid;
  const std::size_t c = g.nearest(f.center);
  for (std::size_t i = c; i < g.size(); ++i) {
    bool inside = true;
    for (std::size_t j = i; j < std::min(g.size(), i + 50); ++j)
      if (polar_deviation(m, f.u.right, f.u.values[j], f.v.values[j]).radius > r) inside = false;
    if (inside) return g.x(i);
  }
  throw KappaError("front tail never enters the requested radius");
}

// With both endpoints at the front point x = z (right tail), finds the zero of
// E where it turns from positive to negative within one period around
// 2 pi n / omega - 2 z, and returns T0 + 2 z - 2 pi n / omega.
inline KappaEstimate estimate_kappa(const ModelParams& m, const FrontSolution& f, double z,
                                    int n_tilde, const WindowOptions& opt = {},
                                    int samples = 25) {
  if (n_tilde < 1) throw std::invalid_argument("n_tilde must be at least 1");
  const Tail t = f.u.right;
  const Vec2 p(sample(f.u, z), sample(f.v, z));
  KappaEstimate k;
  k.z = z;
  k.n_tilde = n_tilde;
  k.equilibrium = t;
  k.radius = std::abs(detail::to_complex(m, t, p));
  if (k.radius > 0.5 * opt.rbar) throw KappaError("front point outside rbar / 2");
  const double om = m.spatial.omega, pi = std::numbers::pi;
  const double c = 2.0 * pi * n_tilde / om - 2.0 * z;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double w = (attempt == 0 ? 1.0 : 2.0) * pi / om;
    const double lo = std::max(1.0, c - w), hi = c + w;
    const auto map = energy_sign_map(m, t, p, p, lo, hi, attempt == 0 ? samples : 2 * samples, opt);
    std::optional<double> best;
    for (const auto& zr : map.zeros)
      if (zr.direction < 0 && (zr.T - c) >= -w && (zr.T - c) < w)
        if (!best || std::abs(zr.T - c) < std::abs(*best - c)) best = zr.T;
    if (best && (attempt == 1 || (*best - c >= -pi / om && *best - c < pi / om))) {
      k.T0 = *best;
      k.kappa = *best - c;
      k.widened = attempt == 1;
      return k;
    }
  }
  throw KappaError("no decreasing zero of E near the predicted window length");
}

}  // namespace fhn
