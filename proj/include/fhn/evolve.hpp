// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Parabolic flow u_t = d u_xx + f(u) - v, tau v_t = v_xx - gamma v + u with a
// first-order IMEX scheme, the Lyapunov functional
//   E(u, v) = J(u) + gamma / (2 (1 + dh)) |v - L u|^2
// and the stability / escape experiments built on them.

#pragma once

#include "fhn/action.hpp"
#include "fhn/field.hpp"
#include "fhn/fronts.hpp"
#include "fhn/linalg.hpp"
#include "fhn/model.hpp"
#include "fhn/shift.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhn {

struct EvolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scheme error constant: max over the manufactured-solution runs of
// err / (dt + h^2), measured once and frozen (see tests).
inline constexpr double kSchemeConstant = 0.07;

// ---------------------------------------------------------- stepping

// Factored implicit operators for one (grid, dt).  Both ends are held.
class ImexStepper {
 public:
  ImexStepper(const ModelParams& m, const Grid& g, double dt, bool reaction = true)
      : m_(m), h_(g.h()), dt_(dt), reaction_(reaction) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const std::size_t n = g.size();
    if (n < 3) throw std::invalid_argument("grid too small for stepping");
    const double ih2 = 1.0 / (h_ * h_);
    std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      lo[i] = up[i] = -dt * m.d * ih2;
      di[i] = 1.0 + 2.0 * dt * m.d * ih2;
    }
    au_ = Tridiagonal(lo, di, up);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      lo[i] = up[i] = -dt * ih2;
      di[i] = m.tau + 2.0 * dt * ih2 + dt * m.gamma;
    }
    av_ = Tridiagonal(std::move(lo), std::move(di), std::move(up));
  }

  double dt() const { return dt_; }

  // One step in place; optional forcing is added to the two right hand sides.
  void step(std::vector<double>& u, std::vector<double>& v, std::span<const double> gu = {},
            std::span<const double> gv = {}) const {
    const std::size_t n = u.size();
    if (v.size() != n || n != au_.size()) throw std::invalid_argument("ImexStepper: size mismatch");
    std::vector<double> ru(u);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double react = reaction_ ? m_.f(u[i]) : 0.0;
      ru[i] = u[i] + dt_ * (react - v[i] + (gu.empty() ? 0.0 : gu[i]));
    }
    au_.solve(ru);
    u = std::move(ru);
    for (std::size_t i = 1; i + 1 < n; ++i)
      v[i] = m_.tau * v[i] + dt_ * (u[i] + (gv.empty() ? 0.0 : gv[i]));
    av_.solve(v);
    for (std::size_t i = 0; i < n; ++i)
      if (!(std::abs(u[i]) <= 10.0))
        throw EvolutionError("blow-up: |u| > 10 at x index " + std::to_string(i));
  }

 private:
  ModelParams m_;
  double h_, dt_;
  bool reaction_;
  Tridiagonal au_, av_;
};

// ---------------------------------------------------------- Lyapunov

inline double default_delta_hat(const ModelParams& m) { return m.gamma * m.gamma / m.tau - 1.0; }

// Upper end of the admissible range, 1 + dh / 2 = gamma^2 / tau.
inline double boundary_delta_hat(const ModelParams& m) {
  return 2.0 * (m.gamma * m.gamma / m.tau - 1.0);
}

inline void check_delta_hat(const ModelParams& m, double dh) {
  if (!(m.tau < m.gamma * m.gamma))
    throw std::invalid_argument("tau >= gamma^2: no Lyapunov functional of this form");
  const double lim = m.gamma * m.gamma / m.tau;
  if (!(dh > 0.0) || 1.0 + 0.5 * dh > lim * (1.0 + 1e-14))
    throw std::invalid_argument("delta_hat outside (0, 2 (gamma^2 / tau - 1)]");
}

struct DecayCoefficients {
  double ut = 0.0, w = 0.0, wx = 0.0;
};

inline DecayCoefficients decay_coefficients(const ModelParams& m, double dh) {
  const double g2t = m.gamma * m.gamma / m.tau;
  return {dh / (2.0 * (1.0 + dh)), std::max(0.0, g2t - 1.0 - 0.5 * dh) / (1.0 + dh),
          m.gamma / ((1.0 + dh) * m.tau)};
}

struct LyapunovValue {
  double E = 0.0, J = 0.0;
  double w2 = 0.0, wx2 = 0.0;  // |w|^2, |w_x|^2 with w = v - L u
  std::vector<double> Lu;
};

inline std::vector<double> linv_held(const ModelParams& m, std::span<const double> u,
                                     std::span<const double> v, double h) {
  // L u with the end values of v: the class equilibria for admissible states.
  return apply_Linv(u, h, m.gamma, BoundaryCondition::dirichlet(v.front(), v.back()));
}

inline double cell_energy(std::span<const double> w, double h) {
  double s = 0.0;
  for (std::size_t c = 0; c + 1 < w.size(); ++c) s += (w[c + 1] - w[c]) * (w[c + 1] - w[c]);
  return s / h;
}

inline LyapunovValue lyapunov(const ModelParams& m, std::span<const double> u,
                              std::span<const double> v, double h, double dh,
                              bool reaction = true) {
  LyapunovValue r;
  r.Lu = linv_held(m, u, v, h);
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = v[i] - r.Lu[i];
  r.w2 = inner(w, w, h);
  r.wx2 = cell_energy(w, h);
  if (reaction) {
    r.J = action_uv(m, u, r.Lu, h);
  } else {
    double cells = 0.0, nodes = 0.0;
    for (std::size_t c = 0; c + 1 < u.size(); ++c) {
      const double du = (u[c + 1] - u[c]) / h, dv = (r.Lu[c + 1] - r.Lu[c]) / h;
      cells += 0.5 * m.d * du * du - 0.5 * dv * dv;
    }
    for (std::size_t i = 0; i < u.size(); ++i)
      nodes += trapezoid_weight(i, u.size()) * (u[i] * r.Lu[i] - 0.5 * m.gamma * r.Lu[i] * r.Lu[i]);
    r.J = h * (cells + nodes);
  }
  r.E = r.J + m.gamma / (2.0 * (1.0 + dh)) * r.w2;
  return r;
}

// E(after) - E(before) summed term by term, which keeps precision when the
// change is many orders below E.
inline double lyapunov_change(const ModelParams& m, std::span<const double> u0,
                              std::span<const double> v0, const LyapunovValue& l0,
                              std::span<const double> u1, std::span<const double> v1,
                              const LyapunovValue& l1, double h, double dh, bool reaction = true) {
  const std::size_t n = u0.size();
  double cells = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double a1 = u1[c + 1] - u1[c], a0 = u0[c + 1] - u0[c];
    const double b1 = l1.Lu[c + 1] - l1.Lu[c], b0 = l0.Lu[c + 1] - l0.Lu[c];
    cells += 0.5 * m.d * (a1 - a0) * (a1 + a0) - 0.5 * (b1 - b0) * (b1 + b0);
  }
  double nodes = 0.0;
  const double c = m.gamma / (2.0 * (1.0 + dh));
  for (std::size_t i = 0; i < n; ++i) {
    const double du = u1[i] - u0[i], dv = l1.Lu[i] - l0.Lu[i];
    const double w0 = v0[i] - l0.Lu[i], w1 = v1[i] - l1.Lu[i];
    double g = u1[i] * dv + du * l0.Lu[i] - 0.5 * m.gamma * dv * (l1.Lu[i] + l0.Lu[i]);
    if (reaction) g -= m.f(u0[i]) * du + cubic_F_increment(u0[i], du, m.beta);
    g += c * (w1 - w0) * (w1 + w0);
    nodes += trapezoid_weight(i, n) * g;
  }
  return cells / h + h * nodes;
}

struct DecayReport {
  double dE_dt = 0.0;
  double rhs = 0.0;       // right side without tolerance
  double tol = 0.0;
  double ut2 = 0.0, w2 = 0.0, wx2 = 0.0;
  double term_ut = 0.0, term_w = 0.0, term_wx = 0.0;
  bool flagged = false;
};

// Tolerance C (dt + h^2) relative to the dissipation scale, plus a floor
// for round-off in the difference of E.
inline DecayReport decay_check(const ModelParams& m, std::span<const double> u0,
                               std::span<const double> v0, const LyapunovValue& l0,
                               std::span<const double> u1, std::span<const double> v1,
                               const LyapunovValue& l1, double h, double dt, double dh,
                               double C = kSchemeConstant, bool reaction = true) {
  DecayReport r;
  std::vector<double> ut(u0.size());
  for (std::size_t i = 0; i < ut.size(); ++i) ut[i] = (u1[i] - u0[i]) / dt;
  r.ut2 = inner(ut, ut, h);
  r.w2 = 0.5 * (l0.w2 + l1.w2);
  r.wx2 = 0.5 * (l0.wx2 + l1.wx2);
  const auto k = decay_coefficients(m, dh);
  r.term_ut = -k.ut * r.ut2;
  r.term_w = -k.w * r.w2;
  r.term_wx = -k.wx * r.wx2;
  r.rhs = r.term_ut + r.term_w + r.term_wx;
  r.dE_dt = lyapunov_change(m, u0, v0, l0, u1, v1, l1, h, dh, reaction) / dt;
  r.tol = C * (dt + h * h) * (r.ut2 + r.w2 + r.wx2) + 1e-14 / dt;
  r.flagged = r.dE_dt > r.rhs + r.tol;
  return r;
}

// ---------------------------------------------------------- state

struct LyapunovRecord {
  double t = 0.0, E = 0.0, J = 0.0, ut2 = 0.0, w2 = 0.0, wx2 = 0.0;
};

struct EvolutionState {
  Field u, v;
  double t = 0.0;
  double dt = 0.01;
  double delta_hat = 0.0;
  std::vector<LyapunovRecord> lyapunov_history;
};

inline EvolutionState make_state(const ModelParams& m, Field u, Field v, double dt = 0.01,
                                 std::optional<double> delta_hat = std::nullopt) {
  require_same_grid(u.grid, v.grid);
  EvolutionState s;
  s.delta_hat = delta_hat.value_or(default_delta_hat(m));
  check_delta_hat(m, s.delta_hat);
  s.u = std::move(u);
  s.v = std::move(v);
  s.dt = dt;
  const auto l = lyapunov(m, s.u.values, s.v.values, s.u.grid.h(), s.delta_hat);
  s.lyapunov_history.push_back({0.0, l.E, l.J, 0.0, l.w2, l.wx2});
  return s;
}

// Single step for value-semantics callers; long runs use ImexStepper.
inline EvolutionState step(const ModelParams& m, EvolutionState s) {
  const ImexStepper st(m, s.u.grid, s.dt);
  const auto u0 = s.u.values, v0 = s.v.values;
  st.step(s.u.values, s.v.values);
  s.t += s.dt;
  const double h = s.u.grid.h();
  const auto l0 = lyapunov(m, u0, v0, h, s.delta_hat);
  const auto l1 = lyapunov(m, s.u.values, s.v.values, h, s.delta_hat);
  const auto d = decay_check(m, u0, v0, l0, s.u.values, s.v.values, l1, h, s.dt, s.delta_hat);
  s.lyapunov_history.push_back({s.t, l1.E, l1.J, d.ut2, l1.w2, l1.wx2});
  return s;
}

// ---------------------------------------------------------- manufactured solution

struct MmsResult {
  double dt = 0.0, h = 0.0;
  double error = 0.0;  // sup over u and v at the final time
};

// u = a e^{-t} sin x, v = b e^{-t} sin x on [0, 2 pi] with matching forcing.
inline MmsResult manufactured_run(const ModelParams& m, double dt, double h, double T = 1.0,
                                  double a = 0.3, double b = 0.1) {
  const double L = 2.0 * std::numbers::pi;
  const auto n = static_cast<std::size_t>(std::lround(L / h)) + 1;
  const Grid g(0.0, L, n);
  const ImexStepper st(m, g, dt);
  std::vector<double> u(n), v(n), gu(n), gv(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = a * std::sin(g.x(i));
    v[i] = b * std::sin(g.x(i));
  }
  u.front() = u.back() = v.front() = v.back() = 0.0;
  const auto steps = static_cast<long>(std::lround(T / dt));
  for (long k = 1; k <= steps; ++k) {
    const double e = std::exp(-static_cast<double>(k) * dt);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double s = std::sin(g.x(i)), ue = a * e * s, ve = b * e * s;
      gu[i] = -ue + m.d * ue - m.f(ue) + ve;
      gv[i] = -m.tau * ve + ve + m.gamma * ve - ue;
    }
    st.step(u, v, gu, gv);
  }
  const double e = std::exp(-static_cast<double>(steps) * dt);
  MmsResult r{dt, g.h(), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sin(g.x(i));
    r.error = std::max({r.error, std::abs(u[i] - a * e * s), std::abs(v[i] - b * e * s)});
  }
  return r;
}

// ---------------------------------------------------------- experiments

struct PerturbationPair {
  std::vector<double> u, v;
};

// Mollified noise in both components, scaled to |pu|_H1 + |pv|_H1 = rho.
inline PerturbationPair random_perturbation(const Grid& g, double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PerturbationPair p{mollified_noise(g, rng), mollified_noise(g, rng)};
  const double nu = h1_norm(p.u, g.h()), nv = h1_norm(p.v, g.h());
  for (auto& x : p.u) x *= 0.5 * rho / nu;
  for (auto& x : p.v) x *= 0.5 * rho / nv;
  return p;
}

// Removes the L2 x L2 components along each of the given pairs (taken in
// order, Gram-Schmidt against the previous ones).
inline PerturbationPair orthogonalize(PerturbationPair p, std::vector<PerturbationPair> modes,
                                      double h) {
  auto dot = [h](const PerturbationPair& a, const PerturbationPair& b) {
    return inner(a.u, b.u, h) + inner(a.v, b.v, h);
  };
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      const double c = dot(modes[k], modes[j]);
      for (std::size_t i = 0; i < modes[k].u.size(); ++i) {
        modes[k].u[i] -= c * modes[j].u[i];
        modes[k].v[i] -= c * modes[j].v[i];
      }
    }
    const double nn = std::sqrt(dot(modes[k], modes[k]));
    for (auto& x : modes[k].u) x /= nn;
    for (auto& x : modes[k].v) x /= nn;
    const double c = dot(p, modes[k]);
    for (std::size_t i = 0; i < p.u.size(); ++i) {
      p.u[i] -= c * modes[k].u[i];
      p.v[i] -= c * modes[k].v[i];
    }
  }
  return p;
}

// Oblique projection removing the spectral component along a mode of the
// pencil: p - <a, B p> / <a, B m> m with B = diag(1, tau).
inline PerturbationPair project_out(PerturbationPair p, const PerturbationPair& mode,
                                    const PerturbationPair& adjoint, double tau, double h) {
  auto bdot = [&](const PerturbationPair& a, const PerturbationPair& b) {
    return inner(a.u, b.u, h) + tau * inner(a.v, b.v, h);
  };
  const double den = bdot(adjoint, mode);
  if (std::abs(den) < 1e-300) throw std::invalid_argument("project_out: mode orthogonal to adjoint");
  const double c = bdot(adjoint, p) / den;
  for (std::size_t i = 0; i < p.u.size(); ++i) {
    p.u[i] -= c * mode.u[i];
    p.v[i] -= c * mode.v[i];
  }
  return p;
}

inline int count_crossings(std::span<const double> u, double level) {
  int c = 0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i)
    if ((u[i] < level) != (u[i + 1] < level)) ++c;
  return c;
}

struct EvolveOptions {
  double dt = 0.01;
  double sample_every = 1.0;    // time between distance samples
  double max_shift = 1.0;       // shift search half-width around the last shift
  double transient = 0.25;      // fraction of the horizon excluded from the trend check
  std::optional<double> delta_hat;
  double scheme_constant = kSchemeConstant;
  double escape_distance = 0.5; // distance at which a stability run gives up
  std::uint64_t seed = 1;
};

struct TimeSample {
  double t = 0.0, E = 0.0, J = 0.0, distance = 0.0, shift = 0.0;
};

struct StabilityReport {
  double rho = 0.0;
  std::uint64_t seed = 0;
  double delta_hat = 0.0;
  std::vector<TimeSample> samples;
  DecayReport worst;              // step with the largest dE/dt - rhs - tol
  long steps = 0;
  long flagged_steps = 0;
  double max_j_excess = 0.0;      // max of J - E, must be <= round-off
  double initial_distance = 0.0;
  double final_distance = 0.0;
  bool monotone_after_transient = false;
  bool crossings_preserved = false;
  bool escaped = false;
  bool success = false;
  std::vector<double> front_shifts;  // final minus initial u_plus / 2 crossing, per front
  std::vector<double> u_final, v_final;
};

namespace detail {

struct Runner {
  const ModelParams& m;
  const Field& uref;
  const Field& vref;
  const EvolveOptions& opt;
  double dh;

  template <class Stop>
  void run(std::vector<double> u, std::vector<double> v, double T, StabilityReport& rep,
           Stop&& stop) const {
    const Grid& g = uref.grid;
    const double h = g.h();
    const ImexStepper st(m, g, opt.dt);
    const auto steps = static_cast<long>(std::lround(T / opt.dt));
    const auto every = std::max(1L, static_cast<long>(std::lround(opt.sample_every / opt.dt)));
    auto l0 = lyapunov(m, u, v, h, dh);
    double shift = 0.0;
    auto sample = [&](double t, const LyapunovValue& l) {
      const Field fu(g, u, uref.left, uref.right), fv(g, v, vref.left, vref.right);
      const auto sd = shift_distance(fu, fv, uref, vref, opt.max_shift, shift);
      shift = sd.shift;
      rep.samples.push_back({t, l.E, l.J, sd.distance, sd.shift});
      rep.max_j_excess = std::max(rep.max_j_excess, l.J - l.E);
      return sd.distance;
    };
    sample(0.0, l0);
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (long k = 1; k <= steps; ++k) {
      const auto u0 = u, v0 = v;
      st.step(u, v);
      auto l1 = lyapunov(m, u, v, h, dh);
      const auto d = decay_check(m, u0, v0, l0, u, v, l1, h, opt.dt, dh, opt.scheme_constant);
      ++rep.steps;
      if (d.flagged) ++rep.flagged_steps;
      if (d.dE_dt - d.rhs - d.tol > worst_gap) {
        worst_gap = d.dE_dt - d.rhs - d.tol;
        rep.worst = d;
      }
      l0 = std::move(l1);
      if (k % every == 0 || k == steps) {
        const double dist = sample(static_cast<double>(k) * opt.dt, l0);
        if (stop(dist)) break;
      }
    }
    rep.u_final = std::move(u);
    rep.v_final = std::move(v);
  }
};

}  // namespace detail

// Evolves from (u0, v0) and measures the shift-minimized distance to the
// reference wave.
inline StabilityReport run_stability_from(const ModelParams& m, const Field& uref, const Field& vref,
                                          std::vector<double> u, std::vector<double> v, double rho,
                                          double T, const EvolveOptions& opt = {}) {
  require_same_grid(uref.grid, vref.grid);
  if (!(m.tau < m.gamma * m.gamma))
    throw std::invalid_argument("stability runs need tau < gamma^2");
  if (rho < 0.0 || T < 0.0) throw std::invalid_argument("rho and T must be nonnegative");
  if (u.size() != uref.size() || v.size() != uref.size())
    throw std::invalid_argument("initial data size does not match the reference");
  StabilityReport rep;
  rep.rho = rho;
  rep.seed = opt.seed;
  rep.delta_hat = opt.delta_hat.value_or(default_delta_hat(m));
  check_delta_hat(m, rep.delta_hat);
  const detail::Runner run{m, uref, vref, opt, rep.delta_hat};
  run.run(std::move(u), std::move(v), T, rep, [&](double dist) {
    if (dist > opt.escape_distance) rep.escaped = true;
    return rep.escaped;
  });
  rep.initial_distance = rep.samples.front().distance;
  rep.final_distance = rep.samples.back().distance;
  const double t0 = opt.transient * T;
  rep.monotone_after_transient = true;
  for (std::size_t k = 1; k < rep.samples.size(); ++k) {
    if (rep.samples[k - 1].t < t0) continue;
    const double a = rep.samples[k - 1].distance, b = rep.samples[k].distance;
    if (b > a * (1.0 + 1e-3) + 1e-12) rep.monotone_after_transient = false;
  }
  const double level = 0.5 * m.u_plus;
  rep.crossings_preserved = count_crossings(rep.u_final, level) == count_crossings(uref.values, level);
  const Grid& g = uref.grid;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if ((uref.values[i] < level) == (uref.values[i + 1] < level)) continue;
    const double c = g.x(i) + g.h() * (level - uref.values[i]) / (uref.values[i + 1] - uref.values[i]);
    const auto after = crossing_near(rep.u_final, g, level, c);
    rep.front_shifts.push_back(after ? *after - c : std::numeric_limits<double>::quiet_NaN());
  }
  rep.success = !rep.escaped && rep.flagged_steps == 0 && rep.crossings_preserved &&
                rep.final_distance <= 0.1 * rho + 1e-9 && rep.monotone_after_transient;
  return rep;
}

inline StabilityReport run_stability(const ModelParams& m, const Field& uref, const Field& vref,
                                     double rho, double T, const EvolveOptions& opt = {}) {
  std::vector<double> u = uref.values, v = vref.values;
  if (rho > 0.0) {
    const auto p = random_perturbation(uref.grid, rho, opt.seed);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += p.u[i];
      v[i] += p.v[i];
    }
  }
  return run_stability_from(m, uref, vref, std::move(u), std::move(v), rho, T, opt);
}

struct InstabilityReport {
  double rho = 0.0;
  int sign = 1;
  double eps0 = 0.0;
  std::vector<TimeSample> samples;
  long flagged_steps = 0;
  bool escaped = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
};

struct InstabilityOptions {
  EvolveOptions evolve;
  double eps0 = 1e-2;     // absolute escape threshold
  double horizon = 5000.0;
};

// Perturbation sign * rho * (phi, psi) / |(phi, psi)|_{H1 x H1}; with no
// direction given, mollified noise.
inline InstabilityReport run_instability(const ModelParams& m, const Field& uref, const Field& vref,
                                         const PerturbationPair* direction, double rho, int sign = 1,
                                         const InstabilityOptions& opt = {}) {
  require_same_grid(uref.grid, vref.grid);
  if (!(m.tau < m.gamma * m.gamma)) throw std::invalid_argument("escape runs need tau < gamma^2");
  const Grid& g = uref.grid;
  PerturbationPair p = direction ? *direction : random_perturbation(g, 1.0, opt.evolve.seed);
  const double nrm = h1_norm(p.u, g.h()) + h1_norm(p.v, g.h());
  std::vector<double> u = uref.values, v = vref.values;
  if (rho > 0.0)
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += sign * rho * p.u[i] / nrm;
      v[i] += sign * rho * p.v[i] / nrm;
    }
  InstabilityReport rep;
  rep.rho = rho;
  rep.sign = sign;
  rep.eps0 = opt.eps0;
  StabilityReport inner_rep;
  const double dh = opt.evolve.delta_hat.value_or(default_delta_hat(m));
  check_delta_hat(m, dh);
  const detail::Runner run{m, uref, vref, opt.evolve, dh};
  run.run(std::move(u), std::move(v), opt.horizon, inner_rep,
          [&](double dist) { return dist > opt.eps0; });
  rep.samples = std::move(inner_rep.samples);
  rep.flagged_steps = inner_rep.flagged_steps;
  const auto& s = rep.samples;
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k].distance > opt.eps0 && s[k - 1].distance <= opt.eps0) {
      rep.escaped = true;
      // Log-linear interpolation between the bracketing samples.
      const double la = std::log(std::max(s[k - 1].distance, 1e-300)), lb = std::log(s[k].distance);
      const double th = (std::log(opt.eps0) - la) / (lb - la);
      rep.escape_time = s[k - 1].t + th * (s[k].t - s[k - 1].t);
      break;
    }
  }
  return rep;
}

struct EscapeSweep {
  std::vector<double> rhos, times;
  std::vector<double> differences;   // tau*(rho / 10) - tau*(rho)
  double predicted = 0.0;            // ln 10 / zeta_max
  double max_relative_error = std::numeric_limits<double>::infinity();
  bool all_escaped = false;
  std::vector<InstabilityReport> runs;
};

inline EscapeSweep escape_sweep(const ModelParams& m, const Field& uref, const Field& vref,
                                const PerturbationPair& direction, const std::vector<double>& rhos,
                                double zeta_max, int sign = 1, const InstabilityOptions& opt = {}) {
  EscapeSweep sw;
  sw.rhos = rhos;
  sw.predicted = std::log(10.0) / zeta_max;
  sw.all_escaped = true;
  for (double r : rhos) {
    sw.runs.push_back(run_instability(m, uref, vref, &direction, r, sign, opt));
    sw.times.push_back(sw.runs.back().escape_time);
    if (!sw.runs.back().escaped) sw.all_escaped = false;
  }
  if (sw.all_escaped && rhos.size() >= 2) {
    sw.max_relative_error = 0.0;
    for (std::size_t k = 0; k + 1 < rhos.size(); ++k) {
      const double steps = std::log10(rhos[k] / rhos[k + 1]);
      const double diff = (sw.times[k + 1] - sw.times[k]) / steps;
      sw.differences.push_back(diff);
      sw.max_relative_error = std::max(sw.max_relative_error, std::abs(diff / sw.predicted - 1.0));
    }
  }
  return sw;
}

}  // namespace fhn
