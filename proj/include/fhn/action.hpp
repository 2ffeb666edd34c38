// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete Lagrangian action J(u) = int L(u, Lu), its nonnegative rewriting,
// gradient, energy and Hamiltonian.
//
// Derivative terms are sums over cells of forward differences and pointwise
// terms use trapezoid weights.  With v = Lu computed with equilibrium
// Dirichlet rows, summation by parts makes the two forms of J agree exactly
// and makes el_residual the exact gradient of J divided by h.

#pragma once

#include "fhn/field.hpp"
#include "fhn/model.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fhn {

struct PhaseState {
  double u = 0.0, v = 0.0, p = 0.0, q = 0.0;  // p = d u', q = -v'
};

inline double hamiltonian(const ModelParams& m, const PhaseState& s) {
  return s.p * s.p / (2.0 * m.d) - 0.5 * s.q * s.q - s.u * s.v + 0.5 * m.gamma * s.v * s.v +
         m.F(s.u);
}

inline double pointwise_energy(const ModelParams& m, double du, double dv, double u, double v) {
  return 0.5 * m.d * du * du - 0.5 * dv * dv - u * v + 0.5 * m.gamma * v * v + m.F(u);
}

inline double equilibrium_energy(const ModelParams& m, Tail t) {
  return pointwise_energy(m, 0.0, 0.0, m.u_eq(t), m.v_eq(t));
}

// Energy for deviations (y, w) from the equilibrium of class t; exact
// rearrangement which keeps relative precision for tiny deviations.
inline double deviation_energy(const ModelParams& m, Tail t, double dy, double dw, double y,
                               double w) {
  return 0.5 * m.d * dy * dy - 0.5 * dw * dw - y * w + 0.5 * m.gamma * w * w +
         cubic_F_increment(m.u_eq(t), y, m.beta);
}

// Action with an arbitrary second field v (the saddle functional in v).
inline double action_uv(const ModelParams& m, std::span<const double> u,
                        std::span<const double> v, double h) {
  const std::size_t n = u.size();
  double cells = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double du = (u[c + 1] - u[c]) / h, dv = (v[c + 1] - v[c]) / h;
    cells += 0.5 * m.d * du * du - 0.5 * dv * dv;
  }
  double nodes = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = u[i] * v[i] - 0.5 * m.gamma * v[i] * v[i] - m.F(u[i]);
    nodes += trapezoid_weight(i, n) * g;
  }
  return h * (cells + nodes);
}

inline std::vector<double> linv_for(const ModelParams& m, const Field& u) {
  return apply_Linv(u.values, u.grid.h(), m.gamma,
                    BoundaryCondition::for_tails(m, u.left, u.right));
}

inline double j_direct(const ModelParams& m, const Field& u) {
  const auto v = linv_for(m, u);
  return action_uv(m, u.values, v, u.grid.h());
}

inline double j_positive_uv(const ModelParams& m, std::span<const double> u,
                            std::span<const double> v, double h) {
  const std::size_t n = u.size();
  const double ig = 1.0 / m.gamma;
  double cells = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double du = (u[c + 1] - u[c]) / h, dv = (v[c + 1] - v[c]) / h;
    const double t = dv - du * ig;
    cells += 0.5 * (m.d - ig * ig) * du * du + 0.5 * t * t;
  }
  double nodes = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = v[i] - u[i] * ig, b = u[i] * (u[i] - m.u_plus);
    nodes += trapezoid_weight(i, n) * (0.5 * m.gamma * a * a + 0.25 * b * b);
  }
  return h * (cells + nodes);
}

inline double j_positive(const ModelParams& m, const Field& u) {
  const auto v = linv_for(m, u);
  return j_positive_uv(m, u.values, v, u.grid.h());
}

// -d u'' - f(u) + v on interior nodes, zero at the ends.
inline std::vector<double> el_residual_uv(const ModelParams& m, std::span<const double> u,
                                          std::span<const double> v, double h) {
  const std::size_t n = u.size();
  std::vector<double> r(n, 0.0);
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i)
    r[i] = -m.d * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * ih2 - m.f(u[i]) + v[i];
  return r;
}
inline Field el_residual(const ModelParams& m, const Field& u) {
  const auto v = linv_for(m, u);
  return Field(u.grid, el_residual_uv(m, u.values, v, u.grid.h()), Tail::minus, Tail::minus);
}

// -v'' + gamma v - u on interior nodes.
inline std::vector<double> v_residual(const ModelParams& m, std::span<const double> u,
                                      std::span<const double> v, double h) {
  const std::size_t n = u.size();
  std::vector<double> r(n, 0.0);
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i)
    r[i] = -(v[i + 1] - 2.0 * v[i] + v[i - 1]) * ih2 + m.gamma * v[i] - u[i];
  return r;
}

struct MinmaxReport {
  double action_uv = 0.0;   // int L(u, v)
  double defect = 0.0;      // J(u) - int L(u, v)
  double quadratic = 0.0;   // 1/2 |w'|^2 + gamma/2 |w|^2, w = v - Lu
};

inline MinmaxReport minmax_defect(const ModelParams& m, const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid);
  const double h = u.grid.h();
  const auto lu = linv_for(m, u);
  MinmaxReport r;
  r.action_uv = action_uv(m, u.values, v.values, h);
  r.defect = action_uv(m, u.values, lu, h) - r.action_uv;
  const std::size_t n = u.size();
  double cells = 0.0, nodes = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double dw = ((v[c + 1] - lu[c + 1]) - (v[c] - lu[c])) / h;
    cells += 0.5 * dw * dw;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double w = v[i] - lu[i];
    nodes += trapezoid_weight(i, n) * 0.5 * m.gamma * w * w;
  }
  r.quadratic = h * (cells + nodes);
  return r;
}

inline std::vector<double> energy_trace_uv(const ModelParams& m, std::span<const double> u,
                                           std::span<const double> v, double h) {
  const auto du = derivative(u, h), dv = derivative(v, h);
  std::vector<double> e(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) e[i] = pointwise_energy(m, du[i], dv[i], u[i], v[i]);
  return e;
}
inline Field energy_trace(const ModelParams& m, const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid);
  return Field(u.grid, energy_trace_uv(m, u.values, v.values, u.grid.h()), Tail::minus,
               Tail::minus);
}

// Largest |E| over interior nodes.
inline double energy_sup_interior(std::span<const double> e) {
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < e.size(); ++i) s = std::max(s, std::abs(e[i]));
  return s;
}

struct ActionReport {
  double j_direct = 0.0;
  double j_positive = 0.0;
  double el_residual_sup = 0.0;
  double v_residual_sup = 0.0;
  double energy_sup = 0.0;
  Field energy_trace;
};

// Report for a pair (u, v); v need not equal Lu exactly (e.g. after Newton).
inline ActionReport action_report(const ModelParams& m, const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid);
  const double h = u.grid.h();
  ActionReport r;
  r.j_direct = action_uv(m, u.values, v.values, h);
  r.j_positive = j_positive_uv(m, u.values, v.values, h);
  r.el_residual_sup = sup_norm(el_residual_uv(m, u.values, v.values, h));
  r.v_residual_sup = sup_norm(v_residual(m, u.values, v.values, h));
  r.energy_trace = energy_trace(m, u, v);
  r.energy_sup = energy_sup_interior(r.energy_trace.values);
  return r;
}

inline ActionReport action_report(const ModelParams& m, const Field& u) {
  const Field v(u.grid, linv_for(m, u), u.left, u.right);
  return action_report(m, u, v);
}

}  // namespace fhn
