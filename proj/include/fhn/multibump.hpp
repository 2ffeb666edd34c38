// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-front standing waves glued from translated copies of the basic
// front and its reversal, a reduced functional over window traces and
// offsets, and the half-period two-bump of mountain-pass type.

#pragma once

#include "fhn/action.hpp"
#include "fhn/field.hpp"
#include "fhn/fronts.hpp"
#include "fhn/localbvp.hpp"
#include "fhn/model.hpp"
#include "fhn/newton.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhn {

struct MultiBumpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// N gaps between N + 1 windows.  Window k carries the basic front for even k
// and its reversal for odd k, so gap k sits next to the plus state for even k.
struct BumpSpec {
  int N = 0;
  std::vector<int> n;                // winding number per gap
  std::vector<unsigned char> half;   // 1: half-period spacing pi (2 n + 1) / omega
  std::vector<double> x;             // offsets in [-nu, nu]
  double z = 1.4;                    // window half-width
  double nu = 0.0;                   // offset bound
  double kappa_plus = 0.0, kappa_minus = 0.0;
  double K = 10.0;                   // tube factor for gap arcs
  double rbar = 0.05;

  static BumpSpec make(const std::vector<int>& n, double kappa_plus, double kappa_minus,
                       double z, double nu) {
    BumpSpec s;
    s.N = static_cast<int>(n.size());
    s.n = n;
    s.half.assign(n.size(), 0);
    s.x.assign(n.size(), 0.0);
    s.z = z;
    s.nu = nu;
    s.kappa_plus = kappa_plus;
    s.kappa_minus = kappa_minus;
    return s;
  }

  std::size_t windows() const { return static_cast<std::size_t>(N) + 1; }
  static Tail gap_tail(std::size_t i) { return i % 2 == 0 ? Tail::plus : Tail::minus; }
  static bool reversed_window(std::size_t k) { return k % 2 == 1; }
  Tail right_tail() const { return N % 2 == 0 ? Tail::plus : Tail::minus; }
  double kappa(std::size_t i) const { return gap_tail(i) == Tail::plus ? kappa_plus : kappa_minus; }

  // Nominal spacing without the offset.
  double base_spacing(std::size_t i, double omega) const {
    const double pi = std::numbers::pi;
    const double wind = half[i] ? pi * (2 * n[i] + 1) / omega : 2.0 * pi * n[i] / omega;
    return kappa(i) + wind;
  }
  double spacing(std::size_t i, double omega) const { return x[i] + base_spacing(i, omega); }
  std::vector<double> centers(double omega) const {
    std::vector<double> c(windows(), 0.0);
    for (std::size_t i = 0; i < n.size(); ++i) c[i + 1] = c[i] + spacing(i, omega);
    return c;
  }
  void validate(double omega) const {
    if (N < 0 || n.size() != static_cast<std::size_t>(N) || x.size() != n.size() ||
        half.size() != n.size())
      throw std::invalid_argument("BumpSpec: sizes of n, x and half must equal N");
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i] < 0) throw std::invalid_argument("BumpSpec: negative winding number");
      if (spacing(i, omega) - 2.0 * z < 1.0) throw MultiBumpError("overlapping windows");
    }
  }
};

inline Grid bump_grid(const BumpSpec& s, double omega, double h, double margin = 30.0) {
  const auto c = s.centers(omega);
  return Grid::with_spacing(c.front() - margin, c.back() + margin, h);
}

// Front trace of window k as a function of x - C_k.
struct WindowTraces {
  std::vector<Field> u, v;  // local coordinates, centered at 0
};

inline WindowTraces front_traces(const FrontSolution& f, const BumpSpec& s) {
  WindowTraces t;
  const FrontSolution r = f.reversed();
  for (std::size_t k = 0; k < s.windows(); ++k) {
    const FrontSolution& src = BumpSpec::reversed_window(k) ? r : f;
    t.u.push_back(src.u);
    t.v.push_back(src.v);
  }
  return t;
}

struct GluedProfile {
  Grid grid;
  std::vector<double> u, v;
  std::vector<double> centers;
  std::vector<unsigned char> window_mask;  // node lies in some (C_k - z, C_k + z)
  Tail right = Tail::plus;
  Field u_field() const { return Field(grid, u, Tail::minus, right); }
  Field v_field() const { return Field(grid, v, Tail::minus, right); }
};

// Window k value at absolute x.
inline Vec2 trace_at(const WindowTraces& t, std::size_t k, double center, double x) {
  return {sample(t.u[k], x - center), sample(t.v[k], x - center)};
}

inline GluedProfile glue_traces(const ModelParams& m, const WindowTraces& tr, const BumpSpec& s,
                                const Grid& g) {
  s.validate(m.spatial.omega);
  GluedProfile p;
  p.grid = g;
  p.centers = s.centers(m.spatial.omega);
  p.right = s.right_tail();
  const auto& C = p.centers;
  if (g.x_min() > C.front() - s.z - 1.0 || g.x_max() < C.back() + s.z + 1.0)
    throw std::invalid_argument("grid does not cover the windows");
  p.u.resize(g.size());
  p.v.resize(g.size());
  p.window_mask.assign(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    // Gap index: first k with x < C_{k+1} - z.
    std::size_t k = 0;
    while (k + 1 < C.size() && x >= C[k + 1] - s.z) ++k;
    Vec2 val;
    if (x <= C[k] + s.z || k + 1 == C.size()) {
      val = trace_at(tr, k, C[k], x);
      if (std::abs(x - C[k]) < s.z) p.window_mask[i] = 1;
    } else {
      const Tail t = BumpSpec::gap_tail(k);
      const double a = C[k] + s.z, b = C[k + 1] - s.z;
      const Vec2 eta = trace_at(tr, k, C[k], a), zeta = trace_at(tr, k + 1, C[k + 1], b);
      const Vec2 d = linear_window_value(m, t, eta, zeta, b - a, x - a);
      val = Vec2(m.u_eq(t) + d(0), m.v_eq(t) + d(1));
    }
    p.u[i] = val(0);
    p.v[i] = val(1);
  }
  p.u.front() = 0.0;
  p.v.front() = 0.0;
  p.u.back() = m.u_eq(p.right);
  p.v.back() = m.v_eq(p.right);
  return p;
}

inline GluedProfile glue_initial(const ModelParams& m, const FrontSolution& f, const BumpSpec& s,
                                 const Grid& g) {
  return glue_traces(m, front_traces(f, s), s, g);
}

// Per-gap sup of the P-frame radius about the gap's equilibrium.
inline std::vector<double> gap_radii(const ModelParams& m, const GluedProfile& p, const BumpSpec& s) {
  std::vector<double> r(static_cast<std::size_t>(s.N), 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto idx = nodes_between(p.grid, p.centers[k] + s.z, p.centers[k + 1] - s.z);
    for (std::size_t i = idx.begin; i < idx.end; ++i)
      r[k] = std::max(r[k], polar_deviation(m, BumpSpec::gap_tail(k), p.u[i], p.v[i]).radius);
  }
  return r;
}

// H1 norm of the gap arc's deviation from its equilibrium.
inline std::vector<double> gap_h1(const ModelParams& m, const GluedProfile& p, const BumpSpec& s) {
  std::vector<double> r(static_cast<std::size_t>(s.N), 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto idx = nodes_between(p.grid, p.centers[k] + s.z, p.centers[k + 1] - s.z);
    const Tail t = BumpSpec::gap_tail(k);
    std::vector<double> a, b;
    for (std::size_t i = idx.begin; i < idx.end; ++i) {
      a.push_back(p.u[i] - m.u_eq(t));
      b.push_back(p.v[i] - m.v_eq(t));
    }
    if (a.size() >= 3) r[k] = h1_norm(a, p.grid.h()) + h1_norm(b, p.grid.h());
  }
  return r;
}

// ---------------------------------------------------------- reduced map

struct ReduceResult {
  GluedProfile profile;
  bool converged = false;
  int iterations = 0;
  double residual_sup = 0.0;
  std::vector<double> gap_radius;
};

// Holding u on the window nodes, solves for u on the gaps and tails and for
// v everywhere.
inline ReduceResult reduce_b(const ModelParams& m, const GluedProfile& p, const BumpSpec& s,
                             const NewtonOptions& opt = {1e-10, 1e-13, 30, 12}) {
  BvpSystem sys{m, p.grid, Tail::minus, p.u, p.v, p.window_mask, {}};
  const auto r = solve_bvp(sys, opt);
  ReduceResult out;
  out.profile = p;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.residual_sup = r.residual_sup;
  if (!r.converged) throw MultiBumpError("reduced map: Newton did not converge");
  out.profile.u = r.y;
  out.profile.v = r.w;
  out.gap_radius = gap_radii(m, out.profile, s);
  for (double x : out.gap_radius)
    if (x > s.K * s.rbar) throw MultiBumpError("convexity tube violated");
  return out;
}

// Energy of gap i, from a window solve in deviation variables with the
// profile's values at the two window edges.
inline double gap_energy(const ModelParams& m, const GluedProfile& p, const BumpSpec& s,
                         std::size_t i, const WindowOptions& wopt = {}) {
  const Field fu = p.u_field(), fv = p.v_field();
  const double a = p.centers[i] + s.z, b = p.centers[i + 1] - s.z;
  const Vec2 eta(sample(fu, a), sample(fv, a)), zeta(sample(fu, b), sample(fv, b));
  return solve_window(m, BumpSpec::gap_tail(i), eta, zeta, b - a, wopt).energy;
}

// Same with traces and a hypothetical gap length.
inline double gap_energy_traces(const ModelParams& m, const WindowTraces& tr, std::size_t i,
                                double z, double T, const WindowOptions& wopt = {}) {
  const Vec2 eta = trace_at(tr, i, 0.0, z), zeta = trace_at(tr, i + 1, 0.0, -z);
  return solve_window(m, BumpSpec::gap_tail(i), eta, zeta, T, wopt).energy;
}

// Offset in [-nu, nu] where dJ/dx_i = -E vanishes with the right curvature:
// E decreasing (minimum) for full-period gaps, increasing (maximum) for
// half-period ones.
inline std::optional<double> offset_root(const ModelParams& m, const WindowTraces& tr,
                                         const BumpSpec& s, std::size_t i,
                                         const WindowOptions& wopt = {}, int samples = 9) {
  const double base = s.base_spacing(i, m.spatial.omega) - 2.0 * s.z;
  const bool want_decrease = !s.half[i];
  const std::size_t cells = detail::window_cells(base + s.nu, wopt);
  auto E = [&](double x) {
    WindowOptions o = wopt;
    o.cells = cells;
    return gap_energy_traces(m, tr, i, s.z, base + x, o);
  };
  double xa = -s.nu, fa = E(xa);
  for (int k = 1; k < samples; ++k) {
    const double xb = -s.nu + 2.0 * s.nu * k / (samples - 1), fb = E(xb);
    const bool dec = fa > 0 && fb <= 0, inc = fa < 0 && fb >= 0;
    if ((want_decrease && dec) || (!want_decrease && inc)) {
      double lo = xa, hi = xb, flo = fa;
      while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi), fm = E(mid);
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    xa = xb;
    fa = fb;
  }
  return std::nullopt;
}

// ---------------------------------------------------------- certificates

struct MultiBumpSolution {
  Field u, v;
  BumpSpec spec;
  std::vector<double> centers;           // measured crossings of u_plus / 2
  std::vector<double> spacings;          // consecutive center differences
  std::vector<double> spacing_error;     // |X_i - winding - kappa|
  std::vector<double> window_distance;   // H1 x H1 distance on each window
  std::vector<double> gap_radius;
  double j_value = 0.0;
  double el_residual_sup = 0.0;
  double energy_sup = 0.0;
  std::vector<double> multipliers;
  std::vector<double> j_history;         // outer loop values
  int outer_iterations = 0;
  bool polished = false;
  std::string status;

  bool certified(double sigma, double residual_tol = 1e-8, double energy_tol = 1e-6) const {
    if (!polished || el_residual_sup > residual_tol || energy_sup > energy_tol) return false;
    for (double d : window_distance)
      if (!(d <= sigma)) return false;
    for (double e : spacing_error)
      if (!(e <= sigma)) return false;
    return true;
  }
};

inline double window_distance(const Field& u, const Field& v, const Field& tu, const Field& tv,
                              double center, double z) {
  const auto idx = nodes_between(u.grid, center - z, center + z);
  std::vector<double> a, b;
  for (std::size_t i = idx.begin; i < idx.end; ++i) {
    const double x = u.grid.x(i) - center;
    a.push_back(u.values[i] - sample(tu, x));
    b.push_back(v.values[i] - sample(tv, x));
  }
  return h1_norm(a, u.grid.h()) + h1_norm(b, u.grid.h());
}

inline void certify_multibump(const ModelParams& m, const FrontSolution& f, MultiBumpSolution& s) {
  const auto rep = action_report(m, s.u, s.v);
  s.j_value = rep.j_direct;
  s.el_residual_sup = rep.el_residual_sup;
  s.energy_sup = rep.energy_sup;
  const auto tr = front_traces(f, s.spec);
  const auto nominal = s.spec.centers(m.spatial.omega);
  const double level = 0.5 * m.u_plus;
  s.centers.clear();
  for (double c : nominal) s.centers.push_back(crossing_near(s.u.values, s.u.grid, level, c).value_or(c));
  s.spacings.clear();
  s.spacing_error.clear();
  const double pi = std::numbers::pi, om = m.spatial.omega;
  for (std::size_t i = 0; i + 1 < s.centers.size(); ++i) {
    const double X = s.centers[i + 1] - s.centers[i];
    const double wind = s.spec.half[i] ? pi * (2 * s.spec.n[i] + 1) / om : 2.0 * pi * s.spec.n[i] / om;
    s.spacings.push_back(X);
    s.spacing_error.push_back(std::abs(X - wind - s.spec.kappa(i)));
  }
  s.window_distance.clear();
  for (std::size_t k = 0; k < s.centers.size(); ++k)
    s.window_distance.push_back(window_distance(s.u, s.v, tr.u[k], tr.v[k], s.centers[k], s.spec.z));
  GluedProfile p;
  p.grid = s.u.grid;
  p.u = s.u.values;
  p.v = s.v.values;
  p.centers = s.centers;
  s.gap_radius = gap_radii(m, p, s.spec);
}

inline BvpResult polish_multibump(const ModelParams& m, const GluedProfile& p,
                                  const std::vector<double>& pin_at,
                                  const NewtonOptions& opt = {1e-11, 1e-12, 30, 12}) {
  return polish_pinned(m, p.grid, p.u, p.v, pin_at, opt);
}

// ---------------------------------------------------------- outer loop

struct OuterOptions {
  int max_outer = 6;
  int trace_steps = 3;
  double gradient_tol = 1e-9;
  double offset_tol = 1e-9;
  double release_tol = 1e-9;  // pinned residual above this triggers a single-pin polish
  double h = 0.01;
  double margin = 30.0;
  WindowOptions window;
};

// Sup over window nodes of the EL residual, smoothed; returned as a descent
// direction vanishing off the windows.
inline std::vector<double> window_gradient(const ModelParams& m, const GluedProfile& p,
                                           const BumpSpec& s, double* sup) {
  auto r = el_residual_uv(m, p.u, p.v, p.grid.h());
  double mx = 0.0;
  std::vector<double> d(r.size(), 0.0);
  for (std::size_t k = 0; k < p.centers.size(); ++k) {
    const auto idx = nodes_between(p.grid, p.centers[k] - s.z, p.centers[k] + s.z);
    if (idx.end - idx.begin < 3) continue;
    std::vector<double> seg(r.begin() + static_cast<long>(idx.begin), r.begin() + static_cast<long>(idx.end));
    for (double x : seg) mx = std::max(mx, std::abs(x));
    seg.front() = 0.0;
    seg.back() = 0.0;
    const Tridiagonal sm = linv_matrix(seg.size(), p.grid.h(), 1.0, BoundaryKind::dirichlet_to_equilibrium);
    sm.solve(seg);
    for (std::size_t i = idx.begin; i < idx.end; ++i) d[i] = seg[i - idx.begin];
  }
  if (sup) *sup = mx;
  return d;
}

inline MultiBumpSolution outer_minimize(const ModelParams& m, const FrontSolution& f, BumpSpec s,
                                        const OuterOptions& opt = {}) {
  s.validate(m.spatial.omega);
  MultiBumpSolution out;
  const auto tr = front_traces(f, s);
  // Offsets: stationary points of the reduced action in each spacing.
  auto place_offsets = [&] {
    double change = 0.0;
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      const auto x = offset_root(m, tr, s, i, opt.window);
      if (!x) throw MultiBumpError("boundary minimizer: no interior stationary offset for gap " + std::to_string(i));
      change = std::max(change, std::abs(*x - s.x[i]));
      s.x[i] = *x;
    }
    return change;
  };
  place_offsets();
  const Grid g = bump_grid(s, m.spatial.omega, opt.h, opt.margin);
  GluedProfile p = reduce_b(m, glue_traces(m, tr, s, g), s).profile;
  double J = action_uv(m, p.u, p.v, g.h());
  out.j_history.push_back(J);
  for (int it = 0; it < opt.max_outer; ++it) {
    out.outer_iterations = it + 1;
    double gsup = 0.0;
    for (int k = 0; k < opt.trace_steps; ++k) {
      const auto d = window_gradient(m, p, s, &gsup);
      if (gsup <= opt.gradient_tol) break;
      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-6) {
        GluedProfile trial = p;
        for (std::size_t i = 0; i < d.size(); ++i) trial.u[i] -= alpha * d[i];
        try {
          trial = reduce_b(m, trial, s).profile;
        } catch (const MultiBumpError&) {
          alpha *= 0.5;
          continue;
        }
        const double Jt = action_uv(m, trial.u, trial.v, g.h());
        if (Jt <= J) {
          p = std::move(trial);
          J = Jt;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      out.j_history.push_back(J);
      if (!accepted) break;
    }
    if (gsup <= opt.gradient_tol) break;
  }
  // Newton polish with every center pinned at its nominal place.
  const auto nr = polish_multibump(m, p, p.centers);
  out.spec = s;
  out.multipliers = nr.multipliers;
  if (nr.converged) {
    p.u = nr.y;
    p.v = nr.w;
    out.polished = true;
    out.status = "converged";
  } else {
    out.status = "unpolished";
  }
  // At short spacings the stationary offsets of the window energies are only
  // approximate and the pins carry a force; release all but the first one.
  if (out.polished && sup_norm(el_residual_uv(m, p.u, p.v, g.h())) > opt.release_tol) {
    const auto fr = polish_multibump(m, p, {p.centers.front()});
    if (fr.converged) {
      GluedProfile q = p;
      q.u = fr.y;
      q.v = fr.w;
      bool close = true;
      for (double c : p.centers) {
        const auto x = crossing_near(q.u, g, 0.5 * m.u_plus, c);
        if (!x || std::abs(*x - c) > s.nu) close = false;
      }
      if (close) {
        p = std::move(q);
        out.multipliers = fr.multipliers;
        out.status = "converged, single pin";
      }
    }
  }
  out.u = p.u_field();
  out.v = p.v_field();
  certify_multibump(m, f, out);
  return out;
}

// ---------------------------------------------------------- coupling

// Discrepancy between the window gradient of the glued profile and the same
// trace placed alone on the line, in the discrete H^{-1} norm of each window.
struct CouplingReport {
  std::vector<int> n_values;
  std::vector<double> discrepancy;
  std::vector<double> gap_lengths;
  std::vector<double> predicted_ratio;  // e^{-lambda (T_{k+1} - T_k)}
  std::vector<double> observed_ratio;
  bool monotone = true;
};

inline double dual_norm_on(std::span<const double> r, const Grid& g, IndexRange idx) {
  std::vector<double> seg(r.begin() + static_cast<long>(idx.begin), r.begin() + static_cast<long>(idx.end));
  seg.front() = 0.0;
  seg.back() = 0.0;
  auto sol = seg;
  const Tridiagonal sm = linv_matrix(seg.size(), g.h(), 1.0, BoundaryKind::dirichlet_to_equilibrium);
  sm.solve(sol);
  return std::sqrt(std::max(0.0, inner(seg, sol, g.h())));
}

inline double coupling_discrepancy(const ModelParams& m, const FrontSolution& f, const BumpSpec& s,
                                   double h = 0.01) {
  const Grid g = bump_grid(s, m.spatial.omega, h);
  const auto tr = front_traces(f, s);
  const auto red = reduce_b(m, glue_traces(m, tr, s, g), s).profile;
  const auto rm = el_residual_uv(m, red.u, red.v, h);
  double worst = 0.0;
  for (std::size_t k = 0; k < red.centers.size(); ++k) {
    // The same trace alone: translated front on the same grid.
    std::vector<double> us(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) us[i] = sample(tr.u[k], g.x(i) - red.centers[k]);
    const Tail l = tr.u[k].left, r = tr.u[k].right;
    us.front() = m.u_eq(l);
    us.back() = m.u_eq(r);
    const auto vs = apply_Linv(us, h, m.gamma, BoundaryCondition::dirichlet(m.v_eq(l), m.v_eq(r)));
    const auto rs = el_residual_uv(m, us, vs, h);
    const auto idx = nodes_between(g, red.centers[k] - s.z, red.centers[k] + s.z);
    std::vector<double> diff(g.size(), 0.0);
    for (std::size_t i = idx.begin; i < idx.end; ++i) diff[i] = rm[i] - rs[i];
    worst = std::max(worst, dual_norm_on(diff, g, idx));
  }
  return worst;
}

inline CouplingReport coupling_decay_probe(const ModelParams& m, const FrontSolution& f,
                                           const BumpSpec& base, const std::vector<int>& n_values,
                                           double h = 0.01) {
  CouplingReport rep;
  for (int n : n_values) {
    BumpSpec s = base;
    s.n.assign(s.n.size(), n);
    rep.n_values.push_back(n);
    rep.discrepancy.push_back(coupling_discrepancy(m, f, s, h));
    double T = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.n.size(); ++i) T = std::min(T, s.spacing(i, m.spatial.omega) - 2.0 * s.z);
    rep.gap_lengths.push_back(T);
  }
  for (std::size_t k = 0; k + 1 < rep.discrepancy.size(); ++k) {
    if (!(rep.discrepancy[k + 1] < rep.discrepancy[k])) rep.monotone = false;
    rep.observed_ratio.push_back(rep.discrepancy[k + 1] / rep.discrepancy[k]);
    rep.predicted_ratio.push_back(std::exp(-m.spatial.lambda * (rep.gap_lengths[k + 1] - rep.gap_lengths[k])));
  }
  return rep;
}

// ---------------------------------------------------------- two-bump

// Critical point of J among profiles with u = u_plus / 2 at 0 and at X.
struct PinnedTwoBump {
  double X = 0.0;
  double j_value = 0.0;
  double dj_dx = 0.0;  // from the multiplier of the pin at X
  std::vector<double> u, v;
  std::vector<double> multipliers;
  bool converged = false;
};

inline std::vector<double> two_bump_seed(const ModelParams& m, const FrontSolution& f,
                                         const Grid& g, double X) {
  const FrontSolution r = f.reversed();
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = sample(f.u, g.x(i)), b = sample(r.u, g.x(i) - X);
    u[i] = a * b / m.u_plus;
  }
  u.front() = 0.0;
  u.back() = 0.0;
  return u;
}

inline PinnedTwoBump pinned_two_bump(const ModelParams& m, const Grid& g, std::vector<double> u,
                                     double X) {
  const auto v = apply_Linv(u, g.h(), m.gamma, BoundaryCondition::dirichlet(0.0, 0.0));
  const auto r = polish_pinned(m, g, u, v, {0.0, X}, NewtonOptions{1e-11, 1e-12, 40, 20});
  PinnedTwoBump p;
  p.X = X;
  p.converged = r.converged;
  p.u = r.y;
  p.v = r.w;
  p.multipliers = r.multipliers;
  p.j_value = action_uv(m, r.y, r.w, g.h());
  // Lagrangian J + h s (u(X) - c): dJ/dX = h s u'(X) with the cell slope.
  const auto [j, t] = g.locate(X);
  (void)t;
  p.dj_dx = r.multipliers[1] * (r.y[j + 1] - r.y[j]);
  return p;
}

struct MountainPassResult {
  MultiBumpSolution solution;
  std::vector<double> xs, jv, dj, dj_gap;  // dj_gap = -E of the gap, NaN when T < 1
  bool gap_route = false;   // x_sharp and margins from the gap energy
  double x_sharp = 0.0;
  double X_sharp = 0.0;
  double j_sharp = 0.0, j_left = 0.0, j_right = 0.0;
  double margin = 0.0;              // j_sharp - max(j_left, j_right)
  double second_difference = 0.0;   // d2 j / dx2 at x_sharp
  double j_stable = 0.0;
  double X_stable = 0.0;
  double j_excess = 0.0;            // j_sharp - j_stable
  bool interior_max = false;
};

struct MountainPassOptions {
  double h = 0.01;
  double margin = 30.0;
  int samples = 13;
  double nu = 0.0;     // 0 means 0.3 pi / omega
  double z = 1.4;
  WindowOptions window;
};

// Continuation in X from the middle of [X0 - nu, X0 + nu] outward.
inline std::vector<PinnedTwoBump> two_bump_family(const ModelParams& m, const FrontSolution& f,
                                                  const Grid& g, const std::vector<double>& Xs) {
  std::vector<PinnedTwoBump> out(Xs.size());
  const std::size_t mid = Xs.size() / 2;
  out[mid] = pinned_two_bump(m, g, two_bump_seed(m, f, g, Xs[mid]), Xs[mid]);
  auto step = [&](std::size_t from, std::size_t to) {
    const Field prev(g, out[from].u, Tail::minus, Tail::minus);
    // Shift the second front only: stretch the profile on the right half.
    std::vector<double> seed = out[from].u;
    const double dX = Xs[to] - Xs[from], half = 0.5 * Xs[from];
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.x(i) > half) seed[i] = sample(prev, g.x(i) - dX);
    seed.front() = 0.0;
    seed.back() = 0.0;
    out[to] = pinned_two_bump(m, g, seed, Xs[to]);
    if (!out[to].converged) out[to] = pinned_two_bump(m, g, two_bump_seed(m, f, g, Xs[to]), Xs[to]);
  };
  for (std::size_t k = mid; k + 1 < Xs.size(); ++k) step(k, k + 1);
  for (std::size_t k = mid; k > 0; --k) step(k, k - 1);
  return out;
}

// Root of dJ/dX in [a, b] by bisection on the constrained family.
inline PinnedTwoBump two_bump_stationary(const ModelParams& m, const Grid& g, PinnedTwoBump lo,
                                         PinnedTwoBump hi, double tol = 1e-9) {
  const Field base(g, lo.u, Tail::minus, Tail::minus);
  while (hi.X - lo.X > tol) {
    const double X = 0.5 * (lo.X + hi.X);
    std::vector<double> seed = lo.u;
    const Field prev(g, lo.u, Tail::minus, Tail::minus);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.x(i) > 0.5 * lo.X) seed[i] = sample(prev, g.x(i) - (X - lo.X));
    seed.front() = seed.back() = 0.0;
    auto p = pinned_two_bump(m, g, seed, X);
    if (!p.converged) throw MultiBumpError("two-bump bisection lost convergence");
    if ((p.dj_dx > 0) == (lo.dj_dx > 0)) lo = std::move(p);
    else hi = std::move(p);
  }
  return std::abs(lo.dj_dx) < std::abs(hi.dj_dx) ? lo : hi;
}

// Integral of -E over offsets [a, b] of a gap (Simpson, even panel count).
inline double gap_action_change(const ModelParams& m, const WindowTraces& tr, const BumpSpec& s,
                                std::size_t i, double a, double b, const WindowOptions& wopt,
                                int panels = 32) {
  const double base = s.base_spacing(i, m.spatial.omega) - 2.0 * s.z;
  WindowOptions o = wopt;
  o.cells = detail::window_cells(base + s.nu, wopt);
  const double hq = (b - a) / panels;
  double acc = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc -= w * gap_energy_traces(m, tr, i, s.z, base + a + k * hq, o);
  }
  return acc * hq / 3.0;
}

inline MountainPassResult two_bump_mountain_pass(const ModelParams& m, const FrontSolution& f, int n,
                                                 double kappa_plus, const MountainPassOptions& opt = {}) {
  const double pi = std::numbers::pi, om = m.spatial.omega;
  const double nu = opt.nu > 0 ? opt.nu : 0.3 * pi / om;
  const double X0 = kappa_plus + pi * (2 * n + 1) / om;
  const double Xs_stable = kappa_plus + 2.0 * pi * (n + 1) / om;
  if (X0 - nu <= 0.2) throw MultiBumpError("two-bump spacing too small");
  const Grid g = Grid::with_spacing(-opt.margin, Xs_stable + nu + opt.margin, opt.h);
  std::vector<double> Xs;
  for (int k = 0; k < opt.samples; ++k) Xs.push_back(X0 - nu + 2.0 * nu * k / (opt.samples - 1));
  const auto fam = two_bump_family(m, f, g, Xs);
  MountainPassResult res;
  BumpSpec spec = BumpSpec::make({n}, kappa_plus, kappa_plus, opt.z, nu);
  spec.half[0] = 1;
  const auto tr = front_traces(f, spec);
  res.gap_route = X0 - nu - 2.0 * opt.z >= 1.0;
  for (const auto& p : fam) {
    if (!p.converged) throw MultiBumpError("two-bump family: Newton failed");
    res.xs.push_back(p.X - X0);
    res.jv.push_back(p.j_value);
    res.dj.push_back(p.dj_dx);
    const double T = p.X - 2.0 * opt.z;
    res.dj_gap.push_back(T >= 1.0 ? -gap_energy_traces(m, tr, 0, opt.z, T, opt.window)
                                  : std::numeric_limits<double>::quiet_NaN());
  }
  res.j_left = res.jv.front();
  res.j_right = res.jv.back();
  PinnedTwoBump top;
  if (res.gap_route) {
    const auto x = offset_root(m, tr, spec, 0, opt.window, opt.samples);
    if (!x) throw MultiBumpError("no interior maximum of the reduced action");
    res.x_sharp = *x;
    std::size_t k = 0;
    while (k + 2 < fam.size() && fam[k + 1].X < X0 + *x) ++k;
    top = pinned_two_bump(m, g, fam[k].u, X0 + *x);
    if (!top.converged) throw MultiBumpError("two-bump Newton failed at the maximum");
    // J differences far below round-off of J itself come from integrating -E.
    const double up = gap_action_change(m, tr, spec, 0, -nu, *x, opt.window);
    const double down = -gap_action_change(m, tr, spec, 0, *x, nu, opt.window);
    res.margin = std::min(up, down);
    const double dx = 1e-3, base = spec.base_spacing(0, om) - 2.0 * opt.z;
    WindowOptions o = opt.window;
    o.cells = detail::window_cells(base + nu, opt.window);
    const double ep = gap_energy_traces(m, tr, 0, opt.z, base + *x + dx, o);
    const double em = gap_energy_traces(m, tr, 0, opt.z, base + *x - dx, o);
    res.second_difference = -(ep - em) / (2.0 * dx);
    res.j_sharp = top.j_value;
  } else {
    std::optional<std::size_t> bracket;
    for (std::size_t k = 0; k + 1 < fam.size(); ++k)
      if (fam[k].dj_dx > 0 && fam[k + 1].dj_dx <= 0) bracket = k;
    if (!bracket) throw MultiBumpError("no interior maximum of the reduced action");
    top = two_bump_stationary(m, g, fam[*bracket], fam[*bracket + 1]);
    res.x_sharp = top.X - X0;
    res.j_sharp = top.j_value;
    res.margin = res.j_sharp - std::max(res.j_left, res.j_right);
    const double dx = 0.05;
    const auto l = pinned_two_bump(m, g, top.u, top.X - dx);
    const auto r = pinned_two_bump(m, g, top.u, top.X + dx);
    res.second_difference = (l.j_value - 2.0 * top.j_value + r.j_value) / (dx * dx);
  }
  res.interior_max = res.margin > 0.0 && res.second_difference < 0.0;
  res.X_sharp = X0 + res.x_sharp;
  // Release the second pin: an unconstrained critical point.
  const auto v = apply_Linv(top.u, g.h(), m.gamma, BoundaryCondition::dirichlet(0.0, 0.0));
  const auto nr = polish_pinned(m, g, top.u, v, {0.0}, NewtonOptions{1e-11, 1e-12, 30, 12});
  const bool keep = nr.converged &&
                    std::abs(crossing_near(nr.y, g, 0.5 * m.u_plus, res.X_sharp).value_or(1e9) - res.X_sharp) < nu;
  auto& sol = res.solution;
  spec.x[0] = res.x_sharp;
  sol.spec = spec;
  sol.polished = top.converged;
  sol.status = keep ? "converged" : "converged, two pins";
  sol.multipliers = keep ? nr.multipliers : top.multipliers;
  sol.u = Field(g, keep ? nr.y : top.u, Tail::minus, Tail::minus);
  sol.v = Field(g, keep ? nr.w : top.v, Tail::minus, Tail::minus);
  certify_multibump(m, f, sol);
  // Stable two-bump half a period further: minimum of the same family.
  BumpSpec st_spec = BumpSpec::make({n + 1}, kappa_plus, kappa_plus, opt.z, nu);
  if (st_spec.base_spacing(0, om) - nu - 2.0 * opt.z >= 1.0) {
    const auto xs = offset_root(m, tr, st_spec, 0, opt.window, opt.samples);
    if (!xs) throw MultiBumpError("no stable two-bump next to the maximum");
    res.X_stable = st_spec.base_spacing(0, om) + *xs;
    const auto b = pinned_two_bump(m, g, two_bump_seed(m, f, g, res.X_stable), res.X_stable);
    res.j_stable = b.j_value;
    // Excess over the minimum by integrating -E from the minimum to the maximum.
    if (res.gap_route) {
      const double lo = X0 - 2.0 * opt.z, hi = res.X_stable - 2.0 * opt.z;
      BumpSpec span = spec;
      span.nu = hi - lo + nu;
      span.x[0] = 0.0;
      res.j_excess = -gap_action_change(m, tr, span, 0, res.x_sharp, res.X_stable - X0, opt.window, 64);
    } else {
      res.j_excess = res.j_sharp - res.j_stable;
    }
  }
  return res;
}

}  // namespace fhn
