// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// The basic heteroclinic front, its tail asymptotics, the half-line
// connector and a local uniqueness probe.

#pragma once

#include "fhn/action.hpp"
#include "fhn/field.hpp"
#include "fhn/model.hpp"
#include "fhn/newton.hpp"
#include "fhn/shift.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fhn {

struct FrontError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ descent

struct DescentOptions {
  int max_iterations = 400;
  double residual_tol = 1e-3;  // hand over to Newton below this
  int recenter_every = 50;
};

struct DescentResult {
  std::vector<double> u;
  int iterations = 0;
  double residual_sup = 0.0;
  double j_value = 0.0;
  bool stagnated = false;
};

// H1-preconditioned steepest descent on the discrete action with fixed end
// values of u and v.  recenter, if given, is applied every recenter_every
// accepted steps.
inline DescentResult descend(const ModelParams& m, const Grid& g, std::vector<double> u,
                             double v_left, double v_right, const DescentOptions& opt,
                             const std::function<void(std::vector<double>&)>& recenter = {}) {
  const double h = g.h();
  const auto bc = BoundaryCondition::dirichlet(v_left, v_right);
  const Tridiagonal smoother = linv_matrix(g.size(), h, 1.0, BoundaryKind::dirichlet_to_equilibrium);
  auto action = [&](const std::vector<double>& x) {
    const auto v = apply_Linv(x, h, m.gamma, bc);
    return action_uv(m, x, v, h);
  };
  DescentResult r;
  double J = action(u);
  double alpha = 1.0;
  std::vector<double> trial(u.size());
  for (int it = 0; it < opt.max_iterations; ++it) {
    const auto v = apply_Linv(u, h, m.gamma, bc);
    auto res = el_residual_uv(m, u, v, h);
    r.residual_sup = sup_norm(res);
    if (r.residual_sup <= opt.residual_tol) break;
    auto dir = res;
    dir.front() = 0.0;
    dir.back() = 0.0;
    smoother.solve(dir);
    const double slope = h * inner(res, dir, 1.0);
    bool accepted = false;
    while (alpha > 1e-12) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - alpha * dir[i];
      const double Jt = action(trial);
      if (Jt <= J - 1e-4 * alpha * slope) {
        u.swap(trial);
        J = Jt;
        accepted = true;
        alpha *= 1.5;
        break;
      }
      alpha *= 0.5;
    }
    r.iterations = it + 1;
    if (!accepted) {
      r.stagnated = true;
      break;
    }
    if (recenter && opt.recenter_every > 0 && r.iterations % opt.recenter_every == 0) {
      recenter(u);
      J = action(u);
    }
  }
  r.j_value = J;
  r.u = std::move(u);
  return r;
}

// Position where u crosses level c, nearest to x0 (linear interpolation).
inline std::optional<double> crossing_near(std::span<const double> u, const Grid& g, double c,
                                           double x0) {
  std::optional<double> best;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double a = u[i] - c, b = u[i + 1] - c;
    if (a == 0.0 || (a < 0.0) != (b < 0.0)) {
      const double t = a == 0.0 ? 0.0 : a / (a - b);
      const double x = g.x(i) + t * g.h();
      if (!best || std::abs(x - x0) < std::abs(*best - x0)) best = x;
    }
  }
  return best;
}

// ---------------------------------------------------------------- tail fit

struct TailFit {
  bool fitted = false;
  std::string message;
  Tail equilibrium = Tail::minus;
  bool unstable_side = false;  // left tail, leaving the equilibrium
  double lambda_hat = 0.0;
  double omega_hat = 0.0;
  double angular_rate = 0.0;   // signed d(theta)/dx
  double window_begin = 0.0, window_end = 0.0;
  std::size_t samples = 0;
  double inequality_fraction = 0.0;  // samples obeying the lambda/2 growth or decay bound
};

inline constexpr double kTailFloor = 1e-9;

// Fits log radius and winding angle in the rotating frame over the window
// where kTailFloor < radius < rho.  The window must span one period 2 pi / omega.
inline TailFit tail_fit(const ModelParams& m, const Field& u, const Field& v, bool left_side,
                        double rho = 0.05) {
  TailFit fit;
  fit.unstable_side = left_side;
  fit.equilibrium = left_side ? u.left : u.right;
  const Grid& g = u.grid;
  const std::size_t n = g.size();
  std::vector<double> rad(n), ang(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pd = polar_deviation(m, fit.equilibrium, u.values[i], v.values[i]);
    rad[i] = pd.radius;
    ang[i] = pd.angle;
  }
  // Walk outward from the center until the radius drops below rho, then
  // keep samples until it falls under the floor.
  const std::size_t mid = g.nearest(0.5 * (g.x_min() + g.x_max()));
  std::vector<std::size_t> idx;
  if (!left_side) {
    std::size_t i = mid;
    while (i < n && rad[i] >= rho) ++i;
    for (; i < n && rad[i] > kTailFloor && rad[i] < rho; ++i) idx.push_back(i);
  } else {
    std::size_t i = mid;
    while (i > 0 && rad[i] >= rho) --i;
    for (; i > 0 && rad[i] > kTailFloor && rad[i] < rho; --i) idx.push_back(i);
    std::reverse(idx.begin(), idx.end());
  }
  if (idx.size() < 3) {
    fit.message = "tail window empty";
    return fit;
  }
  fit.window_begin = g.x(idx.front());
  fit.window_end = g.x(idx.back());
  const double period = 2.0 * std::numbers::pi / m.spatial.omega;
  if (fit.window_end - fit.window_begin < period) {
    fit.message = "tail window shorter than one period";
    return fit;
  }
  // Unwrap angle.
  std::vector<double> th(idx.size()), lr(idx.size()), xs(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    xs[k] = g.x(idx[k]);
    lr[k] = std::log(rad[idx[k]]);
    th[k] = ang[idx[k]];
    if (k > 0) {
      while (th[k] - th[k - 1] > std::numbers::pi) th[k] -= 2.0 * std::numbers::pi;
      while (th[k] - th[k - 1] < -std::numbers::pi) th[k] += 2.0 * std::numbers::pi;
    }
  }
  auto slope = [&](const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k];
      my += y[k];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (y[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    return sxy / sxx;
  };
  const double sr = slope(lr);
  fit.angular_rate = slope(th);
  fit.lambda_hat = std::abs(sr);
  fit.omega_hat = std::abs(fit.angular_rate);
  fit.samples = idx.size();
  // One-sided bound on d|P(.)|/dx at every sample.
  const double half = 0.5 * m.spatial.lambda, h = g.h();
  std::size_t ok = 0;
  for (std::size_t i : idx) {
    const double dr = (rad[std::min(i + 1, n - 1)] - rad[i > 0 ? i - 1 : 0]) / (2.0 * h);
    if (left_side ? dr >= half * rad[i] : dr <= -half * rad[i]) ++ok;
  }
  fit.inequality_fraction = static_cast<double>(ok) / static_cast<double>(idx.size());
  fit.fitted = true;
  return fit;
}

// ------------------------------------------------------------------ fronts

struct FrontOptions {
  DescentOptions descent;
  NewtonOptions newton{1e-11, 1e-12, 30, 12};
  double seed_width = 0.0;  // 0 means 2 / lambda
  double tail_rho = 0.05;
};

struct FrontSolution {
  Field u, v;
  double j_value = 0.0;
  double j_positive = 0.0;
  double center = 0.0;
  double el_residual_sup = 0.0;
  double energy_sup = 0.0;
  TailFit left_fit, right_fit;
  bool polished = false;
  int descent_iterations = 0;
  int newton_iterations = 0;
  std::string status;
  // Reversal of the profile, swapping the orientation.
  FrontSolution reversed() const;
};

inline Field reflect(const Field& f) {
  std::vector<double> r(f.values.rbegin(), f.values.rend());
  const Grid& g = f.grid;
  return Field(Grid(-g.x_max(), -g.x_min(), g.size()), std::move(r), f.right, f.left);
}

inline FrontSolution FrontSolution::reversed() const {
  FrontSolution s = *this;
  s.u = reflect(u);
  s.v = reflect(v);
  s.center = -center;
  std::swap(s.left_fit, s.right_fit);
  return s;
}

inline void certify_front(const ModelParams& m, FrontSolution& s, double tail_rho) {
  const auto rep = action_report(m, s.u, s.v);
  s.j_value = rep.j_direct;
  s.j_positive = rep.j_positive;
  s.el_residual_sup = rep.el_residual_sup;
  s.energy_sup = rep.energy_sup;
  if (auto c = crossing_near(s.u.values, s.u.grid, 0.5 * m.u_plus, 0.0)) s.center = *c;
  s.left_fit = tail_fit(m, s.u, s.v, true, tail_rho);
  s.right_fit = tail_fit(m, s.u, s.v, false, tail_rho);
}

// Newton polish of a (u, v) guess with u(x_pin) = u_plus / 2.
inline BvpResult polish_pinned(const ModelParams& m, const Grid& g, const std::vector<double>& u,
                               const std::vector<double>& v, const std::vector<double>& pins,
                               const NewtonOptions& opt) {
  BvpSystem sys{m, g, Tail::minus, u, v, {}, {}};
  for (double x : pins) sys.pins.push_back({x, 0.5 * m.u_plus});
  return solve_bvp(sys, opt);
}

inline FrontSolution solve_front(const ModelParams& m, const Grid& g, Tail left, Tail right,
                                 const FrontOptions& opt = {},
                                 const std::vector<double>* seed = nullptr) {
  if (!m.spatial.saddle_focus) throw FrontError("parameters are not of saddle-focus type");
  if (!m.front_regime) throw FrontError("front construction needs d > 1/gamma^2");
  if (left == right) throw FrontError("a front needs distinct tail classes");
  const double half = 0.5 * (g.x_max() - g.x_min());
  if (half < 10.0 / m.spatial.lambda) throw FrontError("grid half-width below 10/lambda");

  const double ul = m.u_eq(left), ur = m.u_eq(right);
  std::vector<double> u(g.size());
  if (seed) {
    if (seed->size() != g.size()) throw FrontError("seed size does not match grid");
    u = *seed;
  } else {
    const double w = opt.seed_width > 0 ? opt.seed_width : 2.0 / m.spatial.lambda;
    for (std::size_t i = 0; i < g.size(); ++i)
      u[i] = ul + (ur - ul) * 0.5 * (1.0 + std::tanh(g.x(i) / w));
  }
  u.front() = ul;
  u.back() = ur;
  const double level = 0.5 * m.u_plus;
  auto recenter = [&](std::vector<double>& x) {
    const auto c = crossing_near(x, g, level, 0.0);
    if (!c || std::abs(*c) < 1e-14) return;
    const Field f(g, x, left, right);
    x = shifted_values(f, g, -*c);
    x.front() = ul;
    x.back() = ur;
  };
  const auto d = descend(m, g, u, m.v_eq(left), m.v_eq(right), opt.descent, recenter);
  FrontSolution s;
  s.descent_iterations = d.iterations;
  u = d.u;
  recenter(u);
  const auto v0 = apply_Linv(u, g.h(), m.gamma, BoundaryCondition::dirichlet(m.v_eq(left), m.v_eq(right)));
  const auto nr = polish_pinned(m, g, u, v0, {0.0}, opt.newton);
  s.newton_iterations = nr.iterations;
  if (nr.converged) {
    s.u = Field(g, nr.y, left, right);
    s.v = Field(g, nr.w, left, right);
    s.polished = true;
    s.status = "converged";
  } else {
    s.u = Field(g, u, left, right);
    s.v = Field(g, v0, left, right);
    s.status = d.stagnated ? "descent stagnated; Newton diverged" : "unpolished";
  }
  certify_front(m, s, opt.tail_rho);
  return s;
}

// ---------------------------------------------------- half-line connector

struct HalfLineResult {
  Field u, v;
  double b = 0.0;
  double lhs = 0.0;      // int d/2 u'^2 + 1/2 u v + F(u) over (-X, 0)
  double action = 0.0;   // int L(u, v) over (-X, 0)
  double rhs = 0.0;      // int 1/2 (d - 1/gamma^2) u'^2 + 1/4 u^2 (u - u_plus)^2
  double margin = 0.0;   // lhs - rhs
  bool converged = false;
  bool case_ii = false;  // the profile left the neighborhood of the minus state on the far left
  double residual_sup = 0.0;
};

inline HalfLineResult half_line_connector(const ModelParams& m, double b, double X = 30.0,
                                          double h = 0.01) {
  const Grid g0 = Grid::with_spacing(-X, 0.0, h);
  // Same spacing with the right end exactly at 0.
  const Grid G(-(g0.x_max() - g0.x_min()), 0.0, g0.size());
  const double vb = 2.0 * b / m.gamma;
  std::vector<double> u(G.size());
  const double lam = m.spatial.lambda;
  for (std::size_t i = 0; i < G.size(); ++i) u[i] = b * std::exp(lam * G.x(i));
  u.front() = 0.0;
  u.back() = b;
  HalfLineResult r;
  r.b = b;
  DescentOptions dop;
  dop.max_iterations = 200;
  const auto d = descend(m, G, u, 0.0, vb, dop);
  const auto v0 = apply_Linv(d.u, G.h(), m.gamma, BoundaryCondition::dirichlet(0.0, vb));
  BvpSystem sys{m, G, Tail::minus, d.u, v0, {}, {}};
  const auto nr = solve_bvp(sys, NewtonOptions{1e-10, 1e-12, 40, 20});
  r.converged = nr.converged;
  r.residual_sup = nr.residual_sup;
  r.u = Field(G, r.converged ? nr.y : d.u, Tail::minus, Tail::minus);
  r.v = Field(G, r.converged ? nr.w : v0, Tail::minus, Tail::minus);
  const auto& U = r.u.values;
  const auto& V = r.v.values;
  const std::size_t n = U.size();
  double cells_l = 0, cells_r = 0, cells_a = 0, nodes_l = 0, nodes_r = 0, nodes_a = 0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double du = (U[c + 1] - U[c]) / G.h(), dv = (V[c + 1] - V[c]) / G.h();
    cells_l += 0.5 * m.d * du * du;
    cells_r += 0.5 * (m.d - 1.0 / (m.gamma * m.gamma)) * du * du;
    cells_a += 0.5 * m.d * du * du - 0.5 * dv * dv;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double w = trapezoid_weight(i, n);
    const double q = U[i] * (U[i] - m.u_plus);
    nodes_l += w * (0.5 * U[i] * V[i] - m.F(U[i]));
    nodes_r += w * 0.25 * q * q;
    nodes_a += w * (U[i] * V[i] - 0.5 * m.gamma * V[i] * V[i] - m.F(U[i]));
  }
  r.lhs = G.h() * (cells_l + nodes_l);
  r.rhs = G.h() * (cells_r + nodes_r);
  r.action = G.h() * (cells_a + nodes_a);
  r.margin = r.lhs - r.rhs;
  // Left half should stay near (0, 0).
  for (std::size_t i = 0; i < n / 2; ++i)
    if (polar_deviation(m, Tail::minus, U[i], V[i]).radius > 0.1) r.case_ii = true;
  return r;
}

// --------------------------------------------------- local uniqueness probe

struct UniquenessTrial {
  double distance = 0.0;
  double shift = 0.0;
  bool converged = false;
};
struct UniquenessReport {
  std::vector<UniquenessTrial> trials;
  double max_distance = 0.0;
  bool all_translates = true;
};

inline UniquenessTrial probe_from(const ModelParams& m, const FrontSolution& f,
                                  const std::vector<double>& perturbation, double tol) {
  const Grid& g = f.u.grid;
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = f.u.values[i] + perturbation[i];
  const double level = 0.5 * m.u_plus;
  const double pin = crossing_near(u, g, level, f.center).value_or(f.center);
  const auto v0 = apply_Linv(u, g.h(), m.gamma,
                             BoundaryCondition::dirichlet(f.v.values.front(), f.v.values.back()));
  const auto nr = polish_pinned(m, g, u, v0, {pin}, NewtonOptions{1e-11, 1e-12, 30, 12});
  UniquenessTrial t;
  t.converged = nr.converged;
  const Field uu(g, nr.y, f.u.left, f.u.right), vv(g, nr.w, f.u.left, f.u.right);
  const auto sd = shift_distance(uu, vv, f.u, f.v, 1.0);
  t.distance = sd.distance;
  t.shift = sd.shift;
  (void)tol;
  return t;
}

inline UniquenessReport local_uniqueness_probe(const ModelParams& m, const FrontSolution& f,
                                               double radius, int trials, std::uint64_t seed = 1,
                                               double tol = 1e-6) {
  UniquenessReport rep;
  const Grid& g = f.u.grid;
  const auto du = derivative(f.u.values, g.h());
  const double dd = h1_inner(du, du, g.h());
  std::mt19937_64 rng(seed);
  for (int k = 0; k < trials; ++k) {
    std::vector<double> p(g.size(), 0.0);
    if (radius > 0.0) {
      p = mollified_noise(g, rng);
      const double c = h1_inner(p, du, g.h()) / dd;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= c * du[i];
      p.front() = 0.0;
      p.back() = 0.0;
      const double nrm = h1_norm(p, g.h());
      for (double& x : p) x *= radius / nrm;
    }
    const auto t = probe_from(m, f, p, tol);
    rep.trials.push_back(t);
    rep.max_distance = std::max(rep.max_distance, t.distance);
    if (!t.converged || t.distance > tol) rep.all_translates = false;
  }
  return rep;
}

}  // namespace fhn
