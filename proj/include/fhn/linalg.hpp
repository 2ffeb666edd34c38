// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Small dense and banded solvers used by the boundary value and
// time stepping code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fhn {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solves a tridiagonal system in place.  lower[0] and upper[n-1] are unused.
// The matrices seen here are diagonally dominant so no pivoting is needed.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw std::invalid_argument("solve_tridiagonal: size mismatch");
  if (n == 0) return;
  std::vector<double> c(n);
  double denom = diag[0];
  if (denom == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
    c[i] = upper[i] / denom;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

// Prefactored tridiagonal operator, reused across many right hand sides.
class Tridiagonal {
 public:
  Tridiagonal() = default;
  Tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
      : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
    const std::size_t n = diag_.size();
    if (lower_.size() != n || upper_.size() != n)
      throw std::invalid_argument("Tridiagonal: size mismatch");
    c_.resize(n);
    inv_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = diag_[i] - (i > 0 ? lower_[i] * c_[i - 1] : 0.0);
      if (denom == 0.0) throw NumericalError("Tridiagonal: zero pivot");
      inv_[i] = 1.0 / denom;
      c_[i] = upper_[i] * inv_[i];
    }
  }

  std::size_t size() const { return diag_.size(); }

  void solve(std::span<double> rhs) const {
    const std::size_t n = size();
    if (rhs.size() != n) throw std::invalid_argument("Tridiagonal::solve: size mismatch");
    if (n == 0) return;
    rhs[0] *= inv_[0];
    for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inv_[i];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c_[i] * rhs[i + 1];
  }

  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag_[i] * x[i];
      if (i > 0) s += lower_[i] * x[i - 1];
      if (i + 1 < n) s += upper_[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

 private:
  std::vector<double> lower_, diag_, upper_, c_, inv_;
};

// General band matrix with kl sub- and ku super-diagonals, factored by
// Gaussian elimination with partial pivoting (fill grows the upper band to
// kl+ku).
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1), ab_(ld_ * n, 0.0) {}

  std::size_t size() const { return n_; }
  std::size_t lower_bandwidth() const { return kl_; }
  std::size_t upper_bandwidth() const { return ku_; }

  bool in_band(std::size_t i, std::size_t j) const {
    return (j <= i + ku_ + kl_) && (i <= j + kl_);
  }

  double& at(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_ || !in_band(i, j) || j > i + ku_)
      throw std::out_of_range("BandMatrix::at outside band");
    return ab_[idx(i, j)];
  }
  double get(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_ || !in_band(i, j)) return 0.0;
    return ab_[idx(i, j)];
  }
  void add(std::size_t i, std::size_t j, double value) { at(i, j) += value; }

  std::vector<double> apply(std::span<const double> x) const {
    if (factored_) throw std::logic_error("BandMatrix::apply after factor");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i > kl_ ? i - kl_ : 0;
      const std::size_t j1 = std::min(n_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) s += ab_[idx(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

  void factor() {
    if (factored_) return;
    piv_.assign(n_, 0);
    const std::size_t kv = ku_ + kl_;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t last_row = std::min(n_ - 1, k + kl_);
      std::size_t p = k;
      double best = std::abs(ab_[idx(k, k)]);
      for (std::size_t i = k + 1; i <= last_row; ++i) {
        const double a = std::abs(ab_[idx(i, k)]);
        if (a > best) {
          best = a;
          p = i;
        }
      }
      if (best == 0.0) throw NumericalError("BandMatrix::factor: singular matrix");
      piv_[k] = p;
      const std::size_t last_col = std::min(n_ - 1, k + kv);
      if (p != k)
        for (std::size_t j = k; j <= last_col; ++j) std::swap(ab_[idx(k, j)], ab_[idx(p, j)]);
      const double inv = 1.0 / ab_[idx(k, k)];
      for (std::size_t i = k + 1; i <= last_row; ++i) {
        double& l = ab_[idx(i, k)];
        l *= inv;
        if (l == 0.0) continue;
        for (std::size_t j = k + 1; j <= last_col; ++j) ab_[idx(i, j)] -= l * ab_[idx(k, j)];
      }
    }
    factored_ = true;
  }

  // Solves A x = b in place; factors on first use.
  void solve(std::span<double> b) {
    if (b.size() != n_) throw std::invalid_argument("BandMatrix::solve: size mismatch");
    factor();
    const std::size_t kv = ku_ + kl_;
    for (std::size_t k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      const std::size_t last_row = std::min(n_ - 1, k + kl_);
      for (std::size_t i = k + 1; i <= last_row; ++i) b[i] -= ab_[idx(i, k)] * b[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
      const std::size_t last_col = std::min(n_ - 1, k + kv);
      double s = b[k];
      for (std::size_t j = k + 1; j <= last_col; ++j) s -= ab_[idx(k, j)] * b[j];
      b[k] = s / ab_[idx(k, k)];
    }
  }

  bool factored() const { return factored_; }

 private:
  // Row i of column j lives at offset kl+ku+i-j (LAPACK band layout).
  std::size_t idx(std::size_t i, std::size_t j) const { return j * ld_ + (kl_ + ku_ + i - j); }

  std::size_t n_ = 0, kl_ = 0, ku_ = 0, ld_ = 1;
  std::vector<double> ab_;
  std::vector<std::size_t> piv_;
  bool factored_ = false;
};

}  // namespace fhn
