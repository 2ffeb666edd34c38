// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/linalg.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

namespace {

TEST(Linalg, BandLuMatchesDense) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 2u, 5u, 17u, 60u}) {
    const std::size_t kl = 3, ku = 2;
    fhn::BandMatrix b(n, kl, ku);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j + kl >= i && j <= i + ku) {
          // Small diagonal forces pivoting.
          const double x = (i == j) ? 1e-3 * u(rng) : u(rng);
          b.at(i, j) = x;
          a(i, j) = x;
        }
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = u(rng);
    std::vector<double> x(rhs.data(), rhs.data() + n);
    const auto ax = b.apply(x);
    const Eigen::VectorXd ref_ax = a * rhs;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ax[i], ref_ax(i), 1e-14);
    b.solve(x);
    const Eigen::VectorXd ref = a.partialPivLu().solve(rhs);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref(i), 1e-9 * (1.0 + ref.norm()));
  }
}

TEST(Linalg, SingularBandThrows) {
  fhn::BandMatrix b(3, 1, 1);
  b.at(0, 0) = 1.0;
  b.at(1, 1) = 0.0;
  b.at(2, 2) = 1.0;
  std::vector<double> x{1, 2, 3};
  EXPECT_THROW(b.solve(x), fhn::NumericalError);
}

TEST(Linalg, TridiagonalSolve) {
  const std::size_t n = 50;
  std::vector<double> lo(n, -1.0), di(n, 4.0), up(n, -1.0), rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = std::sin(0.3 * static_cast<double>(i));
  fhn::Tridiagonal t(lo, di, up);
  auto x = rhs;
  t.solve(x);
  const auto back = t.apply(x);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back[i], rhs[i], 1e-13);
  auto y = rhs;
  fhn::solve_tridiagonal(lo, di, up, y);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], x[i], 1e-15);
}

}  // namespace
