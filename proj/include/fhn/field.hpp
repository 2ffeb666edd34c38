// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Uniform grids, sampled fields, discrete calculus and the inverse of
// -d^2/dx^2 + gamma.

#pragma once

#include "fhn/linalg.hpp"
#include "fhn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fhn {

struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class Grid {
 public:
  Grid() = default;
  Grid(double x_min, double x_max, std::size_t n_points)
      : x_min_(x_min), x_max_(x_max), n_(n_points) {
    if (n_points < 3) throw std::invalid_argument("Grid needs at least 3 points");
    if (!(x_max > x_min)) throw std::invalid_argument("Grid needs x_max > x_min");
    h_ = (x_max - x_min) / static_cast<double>(n_points - 1);
  }

  // Grid on [a, b'] with spacing exactly h, where b' >= b is the first node
  // past b giving an odd number of points.
  static Grid with_spacing(double a, double b, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("Grid spacing must be positive");
    auto cells = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-9));
    if (cells % 2 == 1) ++cells;
    return Grid(a, a + static_cast<double>(cells) * h, cells + 1);
  }
  // Symmetric grid on [-L, L] with 0 a node.
  static Grid symmetric(double half_width, double h) {
    const auto half = static_cast<std::size_t>(std::llround(half_width / h));
    return Grid(-static_cast<double>(half) * h, static_cast<double>(half) * h, 2 * half + 1);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double h() const { return h_; }
  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * h_; }
  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }
  // Index of the nearest node, clamped to the grid.
  std::size_t nearest(double xv) const {
    const double s = std::round((xv - x_min_) / h_);
    if (s <= 0) return 0;
    if (s >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(s);
  }
  // Cell j with x_j <= xv < x_{j+1} and the fraction (xv - x_j)/h.
  std::pair<std::size_t, double> locate(double xv) const {
    double s = (xv - x_min_) / h_;
    s = std::clamp(s, 0.0, static_cast<double>(n_ - 1));
    auto j = static_cast<std::size_t>(std::floor(s));
    if (j >= n_ - 1) j = n_ - 2;
    return {j, s - static_cast<double>(j)};
  }

  bool same_as(const Grid& o) const {
    return n_ == o.n_ && std::abs(x_min_ - o.x_min_) <= 1e-12 * (1.0 + std::abs(x_min_)) &&
           std::abs(h_ - o.h_) <= 1e-14 * h_;
  }

 private:
  double x_min_ = 0.0, x_max_ = 1.0;
  std::size_t n_ = 0;
  double h_ = 1.0;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!a.same_as(b)) throw GridMismatch("fields live on different grids");
}

struct Field {
  Grid grid;
  std::vector<double> values;
  Tail left = Tail::minus;
  Tail right = Tail::minus;

  Field() = default;
  Field(Grid g, std::vector<double> vals, Tail l, Tail r)
      : grid(g), values(std::move(vals)), left(l), right(r) {
    if (values.size() != grid.size()) throw std::invalid_argument("Field size does not match grid");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("Field values must be finite");
  }
  static Field constant(const Grid& g, double c, Tail l, Tail r) {
    return Field(g, std::vector<double>(g.size(), c), l, r);
  }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> span() const { return values; }
};

// Checks the end values against the declared class equilibria.
inline bool tails_consistent(const Field& f, double left_value, double right_value,
                             double tol) {
  return std::abs(f.values.front() - left_value) <= tol &&
         std::abs(f.values.back() - right_value) <= tol;
}

// ---------------------------------------------------------------- calculus

inline std::vector<double> derivative(std::span<const double> u, double h) {
  const std::size_t n = u.size();
  if (n < 3) throw std::invalid_argument("derivative needs at least 3 samples");
  std::vector<double> du(n);
  for (std::size_t i = 1; i + 1 < n; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  return du;
}
inline Field derivative(const Field& u) {
  return Field(u.grid, derivative(u.values, u.grid.h()), Tail::minus, Tail::minus);
}

// Interior second difference; zero at the two end nodes.
inline std::vector<double> second_difference(std::span<const double> u, double h) {
  const std::size_t n = u.size();
  std::vector<double> d2(n, 0.0);
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) d2[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * ih2;
  return d2;
}

inline double trapezoid(std::span<const double> g, double h) {
  const std::size_t n = g.size();
  if (n == 0) return 0.0;
  if (n == 1) return 0.0;
  double s = 0.5 * (g[0] + g[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += g[i];
  return s * h;
}
inline double integrate(const Field& u) { return trapezoid(u.values, u.grid.h()); }

// Trapezoid weight of node i in a grid of n nodes (in units of h).
inline double trapezoid_weight(std::size_t i, std::size_t n) {
  return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}

struct IndexRange {
  std::size_t begin = 0;  // first node
  std::size_t end = 0;    // one past last node
  std::size_t size() const { return end - begin; }
};

inline IndexRange whole(const Grid& g) { return {0, g.size()}; }
// Nodes with a <= x <= b (within round-off).
inline IndexRange nodes_between(const Grid& g, double a, double b) {
  const double eps = 1e-9 * g.h();
  const double sa = std::ceil((a - g.x_min()) / g.h() - eps);
  const double sb = std::floor((b - g.x_min()) / g.h() + eps);
  const auto lo = static_cast<std::size_t>(std::clamp(sa, 0.0, static_cast<double>(g.size())));
  const auto hi = static_cast<std::size_t>(
      std::clamp(sb + 1.0, 0.0, static_cast<double>(g.size())));
  return {lo, std::max(lo, hi)};
}

inline double l2_norm(std::span<const double> u, double h) {
  std::vector<double> sq(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) sq[i] = u[i] * u[i];
  return std::sqrt(trapezoid(sq, h));
}
inline double sup_norm(std::span<const double> u) {
  double m = 0.0;
  for (double x : u) m = std::max(m, std::abs(x));
  return m;
}
// sqrt(||u||^2 + ||u'||^2) with the derivative from centered differences.
inline double h1_norm(std::span<const double> u, double h) {
  if (u.size() < 3) return l2_norm(u, h);
  const auto du = derivative(u, h);
  const double a = l2_norm(u, h), b = l2_norm(du, h);
  return std::sqrt(a * a + b * b);
}

inline std::span<const double> restrict_to(std::span<const double> u, IndexRange r) {
  return u.subspan(r.begin, r.size());
}

// H1 norm of u minus the piecewise constant offset taking left_value for
// x < split and right_value for x > split.  The offset has no derivative.
inline double h1_norm_offset(const Field& u, double left_value, double right_value,
                             double split = 0.0) {
  const Grid& g = u.grid;
  std::vector<double> sq(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = g.x(i), a = u.values[i] - left_value, b = u.values[i] - right_value;
    if (std::abs(x - split) <= 1e-9 * g.h())
      sq[i] = 0.5 * (a * a + b * b);  // mean of the one-sided limits
    else
      sq[i] = x < split ? a * a : b * b;
  }
  const auto du = derivative(u.values, g.h());
  const double b = l2_norm(du, g.h());
  return std::sqrt(trapezoid(sq, g.h()) + b * b);
}

// Cubic Lagrange interpolation on the grid; constant extension by the end
// values outside the domain.
inline double sample(std::span<const double> u, const Grid& g, double x) {
  const std::size_t n = u.size();
  if (x <= g.x_min()) return u[0];
  if (x >= g.x_max()) return u[n - 1];
  auto [j, t] = g.locate(x);
  if (t == 0.0) return u[j];
  std::size_t i0 = j == 0 ? 0 : j - 1;
  if (i0 + 3 >= n) i0 = n - 4;
  const double s = (x - g.x(i0)) / g.h();
  double r = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double w = 1.0;
    for (std::size_t b = 0; b < 4; ++b)
      if (b != a) w *= (s - static_cast<double>(b)) / (static_cast<double>(a) - static_cast<double>(b));
    r += w * u[i0 + a];
  }
  return r;
}
inline double sample(const Field& f, double x) { return sample(f.values, f.grid, x); }

// Resamples f at x - shift on grid g (i.e. the translate f(. - shift)).
inline std::vector<double> shifted_values(const Field& f, const Grid& g, double shift) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = sample(f, g.x(i) - shift);
  return out;
}

// ---------------------------------------------------- inverse of -D2 + gamma

enum class BoundaryKind { dirichlet_to_equilibrium, robin_decay };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::dirichlet_to_equilibrium;
  double left_value = 0.0;
  double right_value = 0.0;

  static BoundaryCondition dirichlet(double l, double r) {
    return {BoundaryKind::dirichlet_to_equilibrium, l, r};
  }
  static BoundaryCondition robin(double l, double r) { return {BoundaryKind::robin_decay, l, r}; }
  // Class equilibria of v for the tails of u.
  static BoundaryCondition for_tails(const ModelParams& p, Tail l, Tail r,
                                     BoundaryKind kind = BoundaryKind::dirichlet_to_equilibrium) {
    return {kind, p.v_eq(l), p.v_eq(r)};
  }
};

// Tridiagonal matrix of -D2 + gamma on n nodes with the given boundary rows.
inline Tridiagonal linv_matrix(std::size_t n, double h, double gamma, BoundaryKind kind) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0);
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    lo[i] = -ih2;
    up[i] = -ih2;
    di[i] = 2.0 * ih2 + gamma;
  }
  if (kind == BoundaryKind::dirichlet_to_equilibrium) {
    di[0] = 1.0;
    di[n - 1] = 1.0;
  } else {
    // Ghost node from v' = +-sqrt(gamma) (v - v_class) at the two ends.
    const double sg = std::sqrt(gamma);
    di[0] = 2.0 * ih2 + 2.0 * sg / h + gamma;
    up[0] = -2.0 * ih2;
    di[n - 1] = di[0];
    lo[n - 1] = -2.0 * ih2;
  }
  return Tridiagonal(std::move(lo), std::move(di), std::move(up));
}

inline std::vector<double> apply_Linv(std::span<const double> u, double h, double gamma,
                                      const BoundaryCondition& bc) {
  const std::size_t n = u.size();
  if (n < 3) throw std::invalid_argument("apply_Linv needs at least 3 nodes");
  const Tridiagonal m = linv_matrix(n, h, gamma, bc.kind);
  std::vector<double> rhs(u.begin(), u.end());
  if (bc.kind == BoundaryKind::dirichlet_to_equilibrium) {
    rhs[0] = bc.left_value;
    rhs[n - 1] = bc.right_value;
  } else {
    const double sg = std::sqrt(gamma);
    rhs[0] += 2.0 * sg * bc.left_value / h;
    rhs[n - 1] += 2.0 * sg * bc.right_value / h;
  }
  m.solve(rhs);
  return rhs;
}

inline Field apply_Linv(const Field& u, double gamma, const BoundaryCondition& bc) {
  return Field(u.grid, apply_Linv(u.values, u.grid.h(), gamma, bc), u.left, u.right);
}
inline Field apply_Linv(const Field& u, const ModelParams& p,
                        BoundaryKind kind = BoundaryKind::dirichlet_to_equilibrium) {
  return apply_Linv(u, p.gamma, BoundaryCondition::for_tails(p, u.left, u.right, kind));
}

// Direct convolution with the kernel (1/(2 sqrt g)) exp(-sqrt g |x|) by the
// trapezoid rule; used as an independent check of apply_Linv.
inline std::vector<double> green_convolution(std::span<const double> phi, const Grid& g,
                                             double gamma) {
  const double sg = std::sqrt(gamma);
  const std::size_t n = phi.size();
  std::vector<double> out(n, 0.0), row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      row[j] = std::exp(-sg * std::abs(g.x(i) - g.x(j))) / (2.0 * sg) * phi[j];
    out[i] = trapezoid(row, g.h());
  }
  return out;
}

struct WindowSolution {
  Field psi;                       // finite-difference solution
  std::vector<double> green_psi;   // Green representation evaluated on the grid
  double b1 = 0.0, b2 = 0.0;       // coefficients of the two boundary modes
};

// Solves -psi'' + gamma psi = phi on [A, B] = grid extent with Dirichlet data.
// The oracle writes psi = G*phi + b1 e^{-sg (x-A)} + b2 e^{-sg (B-x)} and
// determines (b1, b2) from the 2x2 system at the ends.
inline WindowSolution window_solve(const Field& phi, double left_value, double right_value,
                                   double gamma) {
  const Grid& g = phi.grid;
  const double L = g.x_max() - g.x_min();
  if (L < 1.0 - 1e-12) throw std::invalid_argument("window_solve needs B - A >= 1");
  WindowSolution ws;
  ws.psi = Field(g, apply_Linv(phi.values, g.h(), gamma,
                               BoundaryCondition::dirichlet(left_value, right_value)),
                 phi.left, phi.right);
  const double sg = std::sqrt(gamma);
  const auto conv = green_convolution(phi.values, g, gamma);
  const double q = std::exp(-sg * L);
  const double r1 = left_value - conv.front(), r2 = right_value - conv.back();
  const double det = 1.0 - q * q;
  ws.b1 = (r1 - q * r2) / det;
  ws.b2 = (r2 - q * r1) / det;
  ws.green_psi.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    ws.green_psi[i] =
        conv[i] + ws.b1 * std::exp(-sg * (x - g.x_min())) + ws.b2 * std::exp(-sg * (g.x_max() - x));
  }
  return ws;
}

// Constants of the interval estimate ||psi||_{H2} <= M (||phi||_{L2} + |psi(A)| + |psi(B)|),
// valid for B - A >= 1.
struct IntervalBound {
  double c1, c2, c3, c4, M;
};
inline IntervalBound interval_bound_constants(double gamma) {
  const double sg = std::sqrt(gamma);
  const double cb = 1.0 / (1.0 - std::exp(-sg));
  const double e_norm = 1.0 / std::sqrt(2.0 * sg);
  const double g_half = std::pow(2.0, -1.5) * std::pow(gamma, -0.75);
  IntervalBound b{};
  b.c1 = cb * e_norm;
  b.c2 = 2.0 * cb * e_norm * g_half + 1.0 / gamma;
  b.c3 = sg * b.c1;
  b.c4 = 2.0 * sg * cb * e_norm * g_half + 1.0 / sg;
  b.M = std::max(b.c1 + b.c3 + gamma * b.c1, b.c2 + b.c4 + gamma * b.c2 + 1.0);
  return b;
}

struct IntervalBoundCheck {
  double h2_norm;  // ||psi|| + ||psi'|| + ||psi''||
  double rhs;      // M (||phi|| + |psi(A)| + |psi(B)|)
  bool holds;
};
inline IntervalBoundCheck check_interval_bound(const WindowSolution& ws, const Field& phi,
                                               double gamma) {
  const double h = phi.grid.h();
  const auto& psi = ws.psi.values;
  const auto d1 = derivative(psi, h);
  std::vector<double> d2(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) d2[i] = gamma * psi[i] - phi.values[i];
  const double lhs = l2_norm(psi, h) + l2_norm(d1, h) + l2_norm(d2, h);
  const auto c = interval_bound_constants(gamma);
  const double rhs = c.M * (l2_norm(phi.values, h) + std::abs(psi.front()) + std::abs(psi.back()));
  return {lhs, rhs, lhs <= rhs};
}

inline double inner(std::span<const double> a, std::span<const double> b, double h) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  return trapezoid(p, h);
}

}  // namespace fhn
