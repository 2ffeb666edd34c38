// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Translation-minimized H1 x H1 distance between two (u, v) pairs.

#pragma once

#include "fhn/field.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace fhn {

struct ShiftDistance {
  double distance = 0.0;
  double shift = 0.0;  // y minimizing |u - u_ref(. - y)| + |v - v_ref(. - y)|
};

namespace detail {

// Distance to the reference translated by an integer number of cells.
inline double integer_shift_distance(std::span<const double> u, std::span<const double> v,
                                     std::span<const double> ur, std::span<const double> vr,
                                     long k, double h) {
  const long n = static_cast<long>(u.size());
  std::vector<double> du(u.size()), dv(u.size());
  for (long i = 0; i < n; ++i) {
    const long j = std::clamp(i - k, 0L, n - 1);
    du[i] = u[i] - ur[j];
    dv[i] = v[i] - vr[j];
  }
  return h1_norm(du, h) + h1_norm(dv, h);
}

inline double interpolated_shift_distance(const Field& u, const Field& v, const Field& ur,
                                          const Field& vr, double y) {
  const auto su = shifted_values(ur, u.grid, y), sv = shifted_values(vr, u.grid, y);
  std::vector<double> a(su.size()), b(su.size());
  for (std::size_t i = 0; i < su.size(); ++i) {
    a[i] = u.values[i] - su[i];
    b[i] = v.values[i] - sv[i];
  }
  return h1_norm(a, u.grid.h()) + h1_norm(b, u.grid.h());
}

}  // namespace detail

// Coarse scan over grid shifts in center +- max_shift, then golden section
// with cubic interpolation of the reference.
inline ShiftDistance shift_distance(const Field& u, const Field& v, const Field& u_ref,
                                    const Field& v_ref, double max_shift = 5.0,
                                    double center = 0.0) {
  require_same_grid(u.grid, v.grid);
  require_same_grid(u.grid, u_ref.grid);
  require_same_grid(u.grid, v_ref.grid);
  const double h = u.grid.h();
  const long K = static_cast<long>(std::ceil(max_shift / h));
  const long k0 = std::lround(center / h);
  long best_k = k0;
  double best = std::numeric_limits<double>::infinity();
  for (long k = k0 - K; k <= k0 + K; ++k) {
    const double d = detail::integer_shift_distance(u.values, v.values, u_ref.values, v_ref.values, k, h);
    if (d < best) {
      best = d;
      best_k = k;
    }
  }
  double a = (static_cast<double>(best_k) - 1.0) * h, b = (static_cast<double>(best_k) + 1.0) * h;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = detail::interpolated_shift_distance(u, v, u_ref, v_ref, c);
  double fd = detail::interpolated_shift_distance(u, v, u_ref, v_ref, d);
  for (int it = 0; it < 60 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = detail::interpolated_shift_distance(u, v, u_ref, v_ref, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = detail::interpolated_shift_distance(u, v, u_ref, v_ref, d);
    }
  }
  ShiftDistance r;
  r.shift = 0.5 * (a + b);
  r.distance = detail::interpolated_shift_distance(u, v, u_ref, v_ref, r.shift);
  if (best < r.distance) {
    r.distance = best;
    r.shift = static_cast<double>(best_k) * h;
  }
  return r;
}

inline double h1_inner(std::span<const double> a, std::span<const double> b, double h) {
  const auto da = derivative(a, h), db = derivative(b, h);
  return inner(a, b, h) + inner(da, db, h);
}

// Gaussian noise on interior nodes smoothed by one solve of (I - D2) with
// zero end values; the result vanishes at both ends.
inline std::vector<double> mollified_noise(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> x(g.size(), 0.0);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) x[i] = nd(rng);
  return apply_Linv(x, g.h(), 1.0, BoundaryCondition::dirichlet(0.0, 0.0));
}

}  // namespace fhn
