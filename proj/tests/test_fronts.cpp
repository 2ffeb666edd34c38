// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/fronts.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace {

using fhn::Field;
using fhn::Grid;
using fhn::Tail;

const fhn::ModelParams P = fhn::derive_params(0.1, 0.05, 1.0);
// Golden action of the polished front, h = 0.01 on (-30, 30).
const double kFrontJ = 0.0075432601551173621;

const fhn::FrontSolution& basic_front() {
  static const fhn::FrontSolution s =
      fhn::solve_front(P, Grid::symmetric(30.0, 0.01), Tail::minus, Tail::plus);
  return s;
}

TEST(Fronts, BasicFrontCertified) {
  const auto& s = basic_front();
  ASSERT_TRUE(s.polished) << s.status;
  EXPECT_LE(s.el_residual_sup, 1e-8);
  EXPECT_GT(s.j_value, 0.0);
  EXPECT_NEAR(s.j_value, kFrontJ, 1e-12);
  EXPECT_NEAR(s.j_value, s.j_positive, 1e-10);
  EXPECT_LE(s.energy_sup, 1e-6);
  EXPECT_NEAR(s.center, 0.0, 1e-12);
  EXPECT_NEAR(fhn::sample(s.u, 0.0), 0.5 * P.u_plus, 1e-12);
}

TEST(Fronts, TailRatesMatchLinearization) {
  const auto& s = basic_front();
  for (const auto* f : {&s.left_fit, &s.right_fit}) {
    ASSERT_TRUE(f->fitted) << f->message;
    EXPECT_LE(std::abs(f->lambda_hat / P.spatial.lambda - 1.0), 0.03);
    EXPECT_LE(std::abs(f->omega_hat / P.spatial.omega - 1.0), 0.03);
  }
  EXPECT_GE(s.left_fit.inequality_fraction, 0.99);
  EXPECT_GE(s.right_fit.inequality_fraction, 0.99);
}

TEST(Fronts, ReversalSymmetry) {
  const auto& s = basic_front();
  const auto r = fhn::solve_front(P, Grid::symmetric(30.0, 0.01), Tail::plus, Tail::minus);
  ASSERT_TRUE(r.polished);
  EXPECT_NEAR(r.j_value, s.j_value, 1e-10);
  const auto m = s.reversed();
  double e = 0.0;
  for (std::size_t i = 0; i < r.u.size(); ++i) {
    e = std::max(e, std::abs(r.u.values[i] - m.u.values[i]));
    e = std::max(e, std::abs(r.v.values[i] - m.v.values[i]));
  }
  EXPECT_LE(e, 1e-8);
}

TEST(Fronts, ConvergedSeedIsFixedPoint) {
  const auto& s = basic_front();
  const auto r = fhn::solve_front(P, s.u.grid, Tail::minus, Tail::plus, {}, &s.u.values);
  EXPECT_TRUE(r.polished);
  EXPECT_EQ(r.descent_iterations, 0);
  EXPECT_LE(r.newton_iterations, 2);
}

TEST(Fronts, RejectsBadInputs) {
  const Grid g = Grid::symmetric(30.0, 0.01);
  EXPECT_THROW(fhn::solve_front(P, Grid::symmetric(3.0, 0.01), Tail::minus, Tail::plus),
               fhn::FrontError);
  EXPECT_THROW(fhn::solve_front(P, g, Tail::plus, Tail::plus), fhn::FrontError);
  // d below 1/gamma^2.
  const auto q = fhn::derive_params(0.1, 0.02, 1.0);
  if (q.spatial.saddle_focus) {
    EXPECT_FALSE(q.front_regime);
    EXPECT_THROW(fhn::solve_front(q, g, Tail::minus, Tail::plus), fhn::FrontError);
  }
}

TEST(Fronts, SyntheticLinearTailRecovered) {
  const Grid g = Grid::symmetric(30.0, 0.01);
  const double lam = P.spatial.lambda, om = P.spatial.omega;
  std::vector<double> u(g.size()), v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i), r = std::exp(-lam * x);
    const fhn::Vec2 z = P.spatial.P_inv * fhn::Vec2(r * std::cos(om * x), r * std::sin(om * x));
    u[i] = P.u_plus + z(0);
    v[i] = P.v_plus + z(1);
  }
  const Field fu(g, u, Tail::minus, Tail::plus), fv(g, v, Tail::minus, Tail::plus);
  const auto f = fhn::tail_fit(P, fu, fv, false);
  ASSERT_TRUE(f.fitted) << f.message;
  EXPECT_NEAR(f.lambda_hat, lam, 1e-8);
  EXPECT_NEAR(f.omega_hat, om, 1e-8);
  EXPECT_NEAR(f.angular_rate, om, 1e-8);
  EXPECT_EQ(f.inequality_fraction, 1.0);
}

TEST(Fronts, TailFitRefusesShortWindow) {
  const Grid g = Grid::symmetric(30.0, 0.01);
  std::vector<double> u(g.size()), v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    // Very fast decay: the admissible band is crossed in well under a period.
    const double x = g.x(i), r = std::exp(-40.0 * x);
    const fhn::Vec2 z = P.spatial.P_inv * fhn::Vec2(std::min(r, 1.0), 0.0);
    u[i] = P.u_plus + z(0);
    v[i] = P.v_plus + z(1);
  }
  const auto f = fhn::tail_fit(P, Field(g, u, Tail::minus, Tail::plus),
                               Field(g, v, Tail::minus, Tail::plus), false);
  EXPECT_FALSE(f.fitted);
}

TEST(Fronts, HalfLineTrivial) {
  const auto r = fhn::half_line_connector(P, 0.0);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(fhn::sup_norm(r.u.values), 1e-14);
  EXPECT_NEAR(r.lhs, 0.0, 1e-14);
  EXPECT_NEAR(r.rhs, 0.0, 1e-14);
  EXPECT_FALSE(r.case_ii);
}

TEST(Fronts, HalfLineInequality) {
  for (double b : {0.5 * P.u_plus, 2.0 * P.u_plus}) {
    const auto r = fhn::half_line_connector(P, b);
    ASSERT_TRUE(r.converged) << b;
    EXPECT_NEAR(r.u.values.back(), b, 1e-14);
    EXPECT_NEAR(r.v.values.back(), 2.0 * b / P.gamma, 1e-14);
    EXPECT_GE(r.margin, -1e-8) << b;
    EXPECT_FALSE(r.case_ii);
  }
}

TEST(Fronts, UniquenessProbeZeroRadius) {
  const auto& s = basic_front();
  const auto rep = fhn::local_uniqueness_probe(P, s, 0.0, 1);
  ASSERT_EQ(rep.trials.size(), 1u);
  EXPECT_TRUE(rep.trials[0].converged);
  EXPECT_LE(rep.max_distance, 1e-12);
}

TEST(Fronts, UniquenessProbePureTranslation) {
  const auto& s = basic_front();
  const auto sh = fhn::shifted_values(s.u, s.u.grid, 0.1);
  std::vector<double> p(sh.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sh[i] - s.u.values[i];
  p.front() = p.back() = 0.0;
  const auto t = fhn::probe_from(P, s, p, 1e-6);
  EXPECT_TRUE(t.converged);
  EXPECT_NEAR(t.shift, 0.1, 1e-3);
  EXPECT_LE(t.distance, 1e-6);
}

TEST(Fronts, UniquenessProbeSmallPerturbations) {
  const auto& s = basic_front();
  const auto rep = fhn::local_uniqueness_probe(P, s, 1e-3, 20, 7);
  EXPECT_EQ(rep.trials.size(), 20u);
  EXPECT_TRUE(rep.all_translates) << rep.max_distance;
  EXPECT_LE(rep.max_distance, 1e-6);
}

}  // namespace
