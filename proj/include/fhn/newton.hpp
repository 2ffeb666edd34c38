// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Newton solver for the discretized steady system
//   -d u'' = f(u) - v,   -v'' + gamma v = u
// on a uniform grid, written for deviations (y, w) from one of the two
// equilibria so that tiny tails keep their relative precision.  Values of u
// may be frozen on any set of nodes, both ends are always Dirichlet, and
// phase pins u(x_k) = c_k (linear interpolation) add one multiplier each.
// Unknowns are interleaved so the Jacobian is banded.

#pragma once

#include "fhn/field.hpp"
#include "fhn/linalg.hpp"
#include "fhn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fhn {

struct Pin {
  double x = 0.0;       // pinned position
  double target = 0.0;  // absolute value of u there
};

struct NewtonOptions {
  double residual_tol = 1e-10;
  double step_tol = 1e-13;
  int max_iterations = 40;
  int max_halvings = 12;
};

struct BvpSystem {
  ModelParams params;
  Grid grid;
  Tail base = Tail::minus;          // equilibrium the unknowns are measured from
  std::vector<double> y, w;         // initial deviations; frozen entries are kept
  std::vector<unsigned char> u_fixed;  // optional, per node; ends always fixed
  std::vector<Pin> pins;
};

struct BvpResult {
  std::vector<double> y, w;
  std::vector<double> multipliers;  // one per pin
  int iterations = 0;
  bool converged = false;
  double residual_sup = 0.0;
  double last_step = 0.0;
};

namespace detail {

struct PinSlot {
  std::size_t cell;
  double weight;  // weight of node cell+1
  double target;  // deviation target
};

class BvpLayout {
 public:
  BvpLayout(std::size_t n, const std::vector<PinSlot>& slots) : n_(n) {
    pu_.resize(n);
    pv_.resize(n);
    ps_.resize(slots.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pu_[i] = next++;
      pv_[i] = next++;
      for (std::size_t k = 0; k < slots.size(); ++k)
        if (slots[k].cell == i) ps_[k] = next++;
    }
    size_ = next;
  }
  std::size_t u(std::size_t i) const { return pu_[i]; }
  std::size_t v(std::size_t i) const { return pv_[i]; }
  std::size_t s(std::size_t k) const { return ps_[k]; }
  std::size_t size() const { return size_; }

 private:
  std::size_t n_, size_ = 0;
  std::vector<std::size_t> pu_, pv_, ps_;
};

}  // namespace detail

class BvpSolver {
 public:
  explicit BvpSolver(const BvpSystem& sys) : sys_(sys), n_(sys.grid.size()) {
    if (sys_.y.size() != n_ || sys_.w.size() != n_)
      throw std::invalid_argument("BvpSolver: initial guess size mismatch");
    fixed_ = sys_.u_fixed;
    if (fixed_.empty()) fixed_.assign(n_, 0);
    fixed_.front() = 1;
    fixed_.back() = 1;
    const double a = sys_.params.u_eq(sys_.base);
    for (const Pin& p : sys_.pins) {
      auto [j, t] = sys_.grid.locate(p.x);
      slots_.push_back({j, t, p.target - a});
    }
    std::sort(slots_.begin(), slots_.end(),
              [](const detail::PinSlot& l, const detail::PinSlot& r) { return l.cell < r.cell; });
    for (std::size_t k = 1; k < slots_.size(); ++k)
      if (slots_[k].cell == slots_[k - 1].cell)
        throw std::invalid_argument("BvpSolver: two pins in one cell");
    // Keep the caller's pin order for the multipliers.
    order_.resize(sys_.pins.size());
    for (std::size_t k = 0; k < sys_.pins.size(); ++k) {
      auto [j, t] = sys_.grid.locate(sys_.pins[k].x);
      for (std::size_t q = 0; q < slots_.size(); ++q)
        if (slots_[q].cell == j) order_[k] = q;
    }
  }

  BvpResult solve(const NewtonOptions& opt) const {
    BvpResult r;
    r.y = sys_.y;
    r.w = sys_.w;
    std::vector<double> s(slots_.size(), 0.0);
    const detail::BvpLayout lay(n_, slots_);
    double res = residual_norm(r.y, r.w, s);
    for (int it = 0; it < opt.max_iterations; ++it) {
      BandMatrix J(lay.size(), 3, 3);
      std::vector<double> rhs(lay.size(), 0.0);
      assemble(lay, r.y, r.w, s, J, rhs);
      for (double& x : rhs) x = -x;
      J.solve(rhs);
      double step = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        step = std::max({step, std::abs(rhs[lay.u(i)]), std::abs(rhs[lay.v(i)])});
      // Backtrack if the full step increases the residual.
      double lambda = 1.0;
      std::vector<double> y1(n_), w1(n_), s1(s.size());
      double res1 = 0.0;
      for (int k = 0; k <= opt.max_halvings; ++k) {
        for (std::size_t i = 0; i < n_; ++i) {
          y1[i] = r.y[i] + lambda * rhs[lay.u(i)];
          w1[i] = r.w[i] + lambda * rhs[lay.v(i)];
        }
        for (std::size_t q = 0; q < s.size(); ++q) s1[q] = s[q] + lambda * rhs[lay.s(q)];
        res1 = residual_norm(y1, w1, s1);
        if (!(res1 > res) || res1 <= opt.residual_tol || lambda < 1e-3) break;
        lambda *= 0.5;
      }
      r.y.swap(y1);
      r.w.swap(w1);
      s.swap(s1);
      res = res1;
      r.iterations = it + 1;
      r.last_step = lambda * step;
      if (!std::isfinite(res)) break;
      if (res <= opt.residual_tol && r.last_step <= opt.step_tol) {
        r.converged = true;
        break;
      }
    }
    r.residual_sup = res;
    if (!r.converged && res <= opt.residual_tol) r.converged = true;
    r.multipliers.resize(s.size());
    for (std::size_t k = 0; k < order_.size(); ++k) r.multipliers[k] = s[order_[k]];
    return r;
  }

  // Residual sup over free rows.
  double residual_norm(const std::vector<double>& y, const std::vector<double>& w,
                       const std::vector<double>& s) const {
    std::vector<double> ru(n_, 0.0), rv(n_, 0.0), rs(slots_.size(), 0.0);
    residuals(y, w, s, ru, rv, rs);
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) m = std::max({m, std::abs(ru[i]), std::abs(rv[i])});
    for (double x : rs) m = std::max(m, std::abs(x));
    if (!std::isfinite(m)) return std::numeric_limits<double>::infinity();
    return m;
  }

 private:
  void residuals(const std::vector<double>& y, const std::vector<double>& w,
                 const std::vector<double>& s, std::vector<double>& ru, std::vector<double>& rv,
                 std::vector<double>& rs) const {
    const ModelParams& m = sys_.params;
    const double a = m.u_eq(sys_.base);
    const double h = sys_.grid.h(), ih2 = 1.0 / (h * h);
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      if (!fixed_[i])
        ru[i] = -m.d * (y[i + 1] - 2.0 * y[i] + y[i - 1]) * ih2 -
                cubic_f_increment(a, y[i], m.beta) + w[i];
      rv[i] = -(w[i + 1] - 2.0 * w[i] + w[i - 1]) * ih2 + m.gamma * w[i] - y[i];
    }
    for (std::size_t q = 0; q < slots_.size(); ++q) {
      const auto& p = slots_[q];
      if (!fixed_[p.cell]) ru[p.cell] += (1.0 - p.weight) * s[q];
      if (!fixed_[p.cell + 1]) ru[p.cell + 1] += p.weight * s[q];
      rs[q] = (1.0 - p.weight) * y[p.cell] + p.weight * y[p.cell + 1] - p.target;
    }
  }

  void assemble(const detail::BvpLayout& lay, const std::vector<double>& y,
                const std::vector<double>& w, const std::vector<double>& s, BandMatrix& J,
                std::vector<double>& rhs) const {
    const ModelParams& m = sys_.params;
    const double a = m.u_eq(sys_.base);
    const double h = sys_.grid.h(), ih2 = 1.0 / (h * h);
    std::vector<double> ru(n_, 0.0), rv(n_, 0.0), rs(slots_.size(), 0.0);
    residuals(y, w, s, ru, rv, rs);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t iu = lay.u(i), iv = lay.v(i);
      const bool end = (i == 0 || i + 1 == n_);
      if (fixed_[i]) {
        J.at(iu, iu) = 1.0;
        rhs[iu] = 0.0;
      } else {
        J.at(iu, lay.u(i - 1)) = -m.d * ih2;
        J.at(iu, lay.u(i + 1)) = -m.d * ih2;
        J.at(iu, iu) = 2.0 * m.d * ih2 - cubic_df(a + y[i], m.beta);
        J.at(iu, iv) = 1.0;
        rhs[iu] = ru[i];
      }
      if (end) {
        J.at(iv, iv) = 1.0;
        rhs[iv] = 0.0;
      } else {
        J.at(iv, lay.v(i - 1)) = -ih2;
        J.at(iv, lay.v(i + 1)) = -ih2;
        J.at(iv, iv) = 2.0 * ih2 + m.gamma;
        J.at(iv, iu) = -1.0;
        rhs[iv] = rv[i];
      }
    }
    for (std::size_t q = 0; q < slots_.size(); ++q) {
      const auto& p = slots_[q];
      const std::size_t is = lay.s(q);
      if (!fixed_[p.cell]) J.at(lay.u(p.cell), is) += 1.0 - p.weight;
      if (!fixed_[p.cell + 1]) J.at(lay.u(p.cell + 1), is) += p.weight;
      J.at(is, lay.u(p.cell)) += 1.0 - p.weight;
      J.at(is, lay.u(p.cell + 1)) += p.weight;
      rhs[is] = rs[q];
    }
  }

  const BvpSystem& sys_;
  std::size_t n_;
  std::vector<unsigned char> fixed_;
  std::vector<detail::PinSlot> slots_;
  std::vector<std::size_t> order_;
};

inline BvpResult solve_bvp(const BvpSystem& sys, const NewtonOptions& opt = {}) {
  return BvpSolver(sys).solve(opt);
}

// Absolute values from deviations.
inline std::vector<double> add_constant(std::vector<double> x, double c) {
  for (double& e : x) e += c;
  return x;
}

}  // namespace fhn
