// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/action.hpp"
#include "fhn/model.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>

namespace {

using fhn::derive_params;

// Eigenvalues of the companion matrix of d m^4 - (d g + b) m^2 + (b g + 1).
std::vector<std::complex<double>> companion_roots(double beta, double gamma, double d) {
  Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
  const double a2 = -(d * gamma + beta) / d, a0 = (beta * gamma + 1.0) / d;
  c(0, 1) = 1.0;
  c(1, 2) = 1.0;
  c(2, 3) = 1.0;
  c(3, 0) = -a0;
  c(3, 2) = -a2;
  Eigen::EigenSolver<Eigen::Matrix4d> es(c);
  std::vector<std::complex<double>> r;
  for (int i = 0; i < 4; ++i) r.push_back(es.eigenvalues()(i));
  return r;
}

TEST(Model, ReferenceParameters) {
  const auto p = derive_params(0.1, 0.05, 1.0);
  EXPECT_NEAR(p.gamma, 9.0 / 1.52, 1e-12);
  EXPECT_NEAR(p.u_plus, 11.0 / 15.0, 1e-15);
  EXPECT_NEAR(p.v_plus, p.u_plus / p.gamma, 1e-15);
  EXPECT_NEAR(p.v_plus, 0.12385, 1e-5);
  EXPECT_NEAR(p.k, 0.91 / 3.0, 1e-15);
  EXPECT_NEAR(p.k_gamma, 1.79605, 1e-5);
  EXPECT_TRUE(p.k_gamma_in_range);
  EXPECT_TRUE(p.lyapunov_regime);
  EXPECT_TRUE(p.front_regime);
  EXPECT_TRUE(p.spatial.saddle_focus);
}

TEST(Model, RejectsInvalidRanges) {
  EXPECT_THROW(derive_params(0.6, 0.05), fhn::InvalidParameters);
  EXPECT_THROW(derive_params(0.0, 0.05), fhn::InvalidParameters);
  EXPECT_THROW(derive_params(0.1, -1.0), fhn::InvalidParameters);
  EXPECT_THROW(derive_params(0.1, 0.05, 0.0), fhn::InvalidParameters);
}

TEST(Model, SaddleFocusEigenvaluesMatchCompanionOracle) {
  const auto p = derive_params(0.1, 0.05);
  // Frozen from the companion-matrix oracle.
  EXPECT_NEAR(p.spatial.lambda, 2.191278993220377, 1e-12);
  EXPECT_NEAR(p.spatial.omega, 0.9171571895479189, 1e-12);
  const auto roots = companion_roots(p.beta, p.gamma, p.d);
  for (const auto& r : roots) {
    EXPECT_NEAR(std::abs(r.real()), p.spatial.lambda, 1e-10);
    EXPECT_NEAR(std::abs(r.imag()), p.spatial.omega, 1e-10);
  }
  const auto& s = p.spatial;
  EXPECT_NEAR(s.mu * s.mu, s.lambda * s.lambda + s.omega * s.omega, 1e-12);
  EXPECT_NEAR(s.lambda, s.mu * std::cos(s.nu), 1e-12);
  EXPECT_NEAR(s.omega, s.mu * std::sin(s.nu), 1e-12);
}

TEST(Model, RotationNormalForm) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ub(0.02, 0.14), ud(0.02, 0.12);
  int tested = 0;
  for (int k = 0; k < 200; ++k) {
    const auto p = derive_params(ub(rng), ud(rng));
    if (!p.spatial.saddle_focus) continue;
    ++tested;
    const fhn::Mat2 lhs = p.spatial.P * p.A() * p.spatial.P_inv;
    const fhn::Mat2 rhs = p.spatial.mu * p.spatial.mu * fhn::rotation(2.0 * p.spatial.nu);
    EXPECT_LE((lhs - rhs).norm(), 1e-10 * (1.0 + rhs.norm()));
    EXPECT_NEAR(p.spatial.P_inv.col(0).norm(), 1.0, 1e-14);
  }
  EXPECT_GT(tested, 20);
}

TEST(Model, DerivativeAtEquilibriaIsMinusBeta) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ub(1e-3, 0.499);
  for (int k = 0; k < 1000; ++k) {
    const auto p = derive_params(ub(rng), 0.05);
    EXPECT_NEAR(p.df(0.0), -p.beta, 1e-15);
    EXPECT_NEAR(p.df(p.u_plus), -p.beta, 1e-14);
  }
}

TEST(Model, GateAgreesWithClosedDiscriminant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ub(1e-3, 0.499), ud(1e-3, 0.5);
  int compared = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto p = derive_params(ub(rng), ud(rng));
    const double disc = p.discriminant_closed;
    if (std::abs(disc) <= 1e-10) continue;
    ++compared;
    EXPECT_EQ(p.spatial.saddle_focus, disc < 0.0) << p.beta << " " << p.d;
  }
  EXPECT_GT(compared, 9900);
}

TEST(Model, DegenerateBoundaryIsNotSaddleFocus) {
  // (g d - b)^2 = 4 d  <=>  g^2 d^2 - (2 g b + 4) d + b^2 = 0.
  const double beta = 0.1, g = fhn::gamma_of_beta(beta);
  const double a = g * g, b = -(2.0 * g * beta + 4.0), c = beta * beta;
  for (double d : {(-b - std::sqrt(b * b - 4 * a * c)) / (2 * a),
                   (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a)}) {
    const auto s = fhn::analyse_spatial(beta, g, d);
    EXPECT_TRUE(s.degenerate);
    EXPECT_FALSE(s.saddle_focus);
  }
}

TEST(Model, ClosedFormWindowAroundBetaLimit) {
  const double lim = fhn::closed_form_beta_limit();
  EXPECT_NEAR(lim, 0.145898, 1e-6);
  bool some_true = false, any_true_above = false;
  for (int i = 1; i < 2000; ++i) {
    const double d = 0.2 * i / 2000.0;
    some_true |= derive_params(lim - 1e-3, d).closed_form_window;
    const auto above = derive_params(0.2, d);
    any_true_above |= above.closed_form_window || above.discriminant_printed < 0.0;
  }
  EXPECT_TRUE(some_true);
  EXPECT_FALSE(any_true_above);
  // The numerical gate still finds saddle-focus points at beta = 0.2 near d = beta / gamma.
  const double g = fhn::gamma_of_beta(0.2);
  EXPECT_TRUE(derive_params(0.2, 0.2 / g).spatial.saddle_focus);
}

TEST(Model, EquilibriumEnergies) {
  const auto p = derive_params(0.1, 0.05);
  EXPECT_EQ(fhn::equilibrium_energy(p, fhn::Tail::minus), 0.0);
  EXPECT_LE(std::abs(fhn::equilibrium_energy(p, fhn::Tail::plus)), 1e-12);
  auto q = p;
  q.gamma *= 1.01;
  q.v_plus = q.u_plus / q.gamma;
  EXPECT_GT(std::abs(fhn::equilibrium_energy(q, fhn::Tail::plus)), 1e-4);
}

TEST(Model, CubicTransform) {
  const auto p = derive_params(0.1, 0.05);
  const auto up = fhn::cubic_transform(p, fhn::normalized_equilibrium(p, fhn::Tail::plus));
  const auto um = fhn::cubic_transform(p, fhn::normalized_equilibrium(p, fhn::Tail::minus));
  EXPECT_NEAR(up(0), p.u_plus, 1e-12);
  EXPECT_NEAR(up(1), p.v_plus, 1e-12);
  EXPECT_NEAR(um(0), 0.0, 1e-12);
  EXPECT_NEAR(um(1), 0.0, 1e-12);
  const auto c = fhn::cubic_transform(p, fhn::Vec2(0.0, 0.0));
  EXPECT_NEAR(c(0), p.u_plus / 2.0, 1e-15);
  EXPECT_NEAR(c(1), p.v_plus / 2.0, 1e-15);
}

TEST(Model, IncrementFormsAgree) {
  const double beta = 0.1;
  for (double a : {0.0, 11.0 / 15.0})
    for (double y : {-0.3, -1e-3, 2e-5, 0.2}) {
      EXPECT_NEAR(fhn::cubic_f_increment(a, y, beta),
                  fhn::cubic_f(a + y, beta) - fhn::cubic_f(a, beta), 1e-15);
      EXPECT_NEAR(fhn::cubic_F_increment(a, y, beta),
                  fhn::cubic_F(a + y, beta) - fhn::cubic_F(a, beta) - fhn::cubic_f(a, beta) * y,
                  1e-15);
    }
}

}  // namespace
