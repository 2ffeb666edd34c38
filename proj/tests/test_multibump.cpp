// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/multibump.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace {

using fhn::BumpSpec;
using fhn::Grid;
using fhn::Tail;

const fhn::ModelParams P = fhn::derive_params(0.1, 0.05, 1.0);
const double kPi = std::numbers::pi;
const double kNu = 0.3 * kPi / P.spatial.omega;

struct Setup {
  fhn::FrontSolution front;
  double z = 0.0, kp = 0.0, km = 0.0;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup r;
    r.front = fhn::solve_front(P, Grid::symmetric(30.0, 0.01), Tail::minus, Tail::plus);
    r.z = fhn::tail_point_for_radius(P, r.front, 0.025);
    r.kp = fhn::estimate_kappa(P, r.front, r.z, 2).kappa;
    const auto rev = r.front.reversed();
    r.km = fhn::estimate_kappa(P, rev, fhn::tail_point_for_radius(P, rev, 0.025), 2).kappa;
    return r;
  }();
  return s;
}

BumpSpec spec(const std::vector<int>& n) {
  const auto& s = setup();
  return BumpSpec::make(n, s.kp, s.km, s.z, kNu);
}

const fhn::MultiBumpSolution& three_gaps() {
  static const auto sol = fhn::outer_minimize(P, setup().front, spec({6, 6, 6}));
  return sol;
}

TEST(MultiBump, SpecConventions) {
  EXPECT_EQ(spec({}).windows(), 1u);
  EXPECT_EQ(spec({}).right_tail(), Tail::plus);
  EXPECT_EQ(spec({2}).right_tail(), Tail::minus);
  EXPECT_EQ(spec({2, 2}).right_tail(), Tail::plus);
  EXPECT_EQ(BumpSpec::gap_tail(0), Tail::plus);
  EXPECT_EQ(BumpSpec::gap_tail(1), Tail::minus);
  EXPECT_NEAR(setup().z, 1.4, 0.05);
  // n = 0 full-period spacing leaves no room between windows.
  EXPECT_THROW(spec({0}).validate(P.spatial.omega), fhn::MultiBumpError);
  auto bad = spec({2});
  bad.n[0] = -1;
  EXPECT_THROW(bad.validate(P.spatial.omega), std::invalid_argument);
}

TEST(MultiBump, GluedProfileInsideTube) {
  const auto s = spec({2, 3});
  const Grid g = fhn::bump_grid(s, P.spatial.omega, 0.01);
  const auto p = fhn::glue_initial(P, setup().front, s, g);
  EXPECT_EQ(p.right, Tail::plus);
  for (double r : fhn::gap_radii(P, p, s)) EXPECT_LE(r, s.K * s.rbar);
  // Values are continuous across each window edge.
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(std::abs(p.u[i] - p.u[i - 1]), 0.01);
}

TEST(MultiBump, TubeViolationReported) {
  auto s = spec({2});
  s.K = 1e-3;
  const auto p = fhn::glue_initial(P, setup().front, s, fhn::bump_grid(s, P.spatial.omega, 0.01));
  try {
    fhn::reduce_b(P, p, s);
    FAIL() << "expected a tube violation";
  } catch (const fhn::MultiBumpError& e) {
    EXPECT_NE(std::string(e.what()).find("tube"), std::string::npos);
  }
}

TEST(MultiBump, SingleWindowIsTheFront) {
  const auto sol = fhn::outer_minimize(P, setup().front, spec({}));
  ASSERT_TRUE(sol.polished) << sol.status;
  EXPECT_NEAR(sol.j_value, setup().front.j_value, 1e-10);
  EXPECT_EQ(sol.u.right, Tail::plus);
  EXPECT_TRUE(sol.certified(0.05));
}

TEST(MultiBump, ThreeGapsCertified) {
  const auto& sol = three_gaps();
  ASSERT_TRUE(sol.polished) << sol.status;
  EXPECT_TRUE(sol.certified(0.05));
  EXPECT_LE(sol.el_residual_sup, 1e-8);
  EXPECT_LE(sol.energy_sup, 1e-6);
  EXPECT_EQ(sol.u.right, Tail::minus);
  ASSERT_EQ(sol.spacings.size(), 3u);
  for (double e : sol.spacing_error) EXPECT_LE(e, 0.05);
  for (double d : sol.window_distance) EXPECT_LE(d, 0.05);
  for (double r : sol.gap_radius) EXPECT_LE(r, sol.spec.K * sol.spec.rbar);
  for (double x : sol.spec.x) EXPECT_LE(std::abs(x), kNu);
}

TEST(MultiBump, OuterLoopMonotone) {
  const auto& h = three_gaps().j_history;
  ASSERT_FALSE(h.empty());
  for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(h[k], h[k - 1]);
}

TEST(MultiBump, ReducedMapFixesSolution) {
  const auto& sol = three_gaps();
  const auto tr = fhn::front_traces(setup().front, sol.spec);
  auto p = fhn::glue_traces(P, tr, sol.spec, sol.u.grid);
  p.u = sol.u.values;
  p.v = sol.v.values;
  const auto r = fhn::reduce_b(P, p, sol.spec);
  EXPECT_LE(r.iterations, 1);
  double e = 0.0;
  for (std::size_t i = 0; i < p.u.size(); ++i)
    e = std::max({e, std::abs(r.profile.u[i] - p.u[i]), std::abs(r.profile.v[i] - p.v[i])});
  EXPECT_LE(e, 1e-10);
}

TEST(MultiBump, Deterministic) {
  const auto a = fhn::outer_minimize(P, setup().front, spec({2, 2}));
  const auto b = fhn::outer_minimize(P, setup().front, spec({2, 2}));
  ASSERT_EQ(a.u.size(), b.u.size());
  EXPECT_EQ(a.j_value, b.j_value);
  for (std::size_t i = 0; i < a.u.size(); ++i) ASSERT_EQ(a.u.values[i], b.u.values[i]);
}

TEST(MultiBump, BoundaryMinimizerRejected) {
  // A quarter-period error in kappa puts every admissible offset between zeros.
  auto s = spec({3});
  s.kappa_plus += 0.5 * kPi / P.spatial.omega;
  s.nu = 0.1;
  try {
    fhn::outer_minimize(P, setup().front, s);
    FAIL() << "expected a boundary minimizer";
  } catch (const fhn::MultiBumpError& e) {
    EXPECT_NE(std::string(e.what()).find("boundary minimizer"), std::string::npos);
  }
}

TEST(MultiBump, CouplingDecays) {
  const auto rep = fhn::coupling_decay_probe(P, setup().front, spec({1, 1, 1}), {1, 2});
  ASSERT_EQ(rep.observed_ratio.size(), 1u);
  EXPECT_TRUE(rep.monotone);
  const double q = rep.observed_ratio[0] / rep.predicted_ratio[0];
  EXPECT_GE(q, 0.1);
  EXPECT_LE(q, 10.0);
}

TEST(MultiBump, MultiplierMatchesGapEnergy) {
  // dJ/dX from the pin multiplier against -E of the gap, n = 1.
  fhn::MountainPassOptions o;
  o.samples = 9;
  const auto r = fhn::two_bump_mountain_pass(P, setup().front, 1, setup().kp, o);
  ASSERT_EQ(r.dj.size(), r.dj_gap.size());
  double scale = 0.0;
  for (double d : r.dj_gap) scale = std::max(scale, std::abs(d));
  ASSERT_GT(scale, 0.0);
  for (std::size_t k = 0; k < r.dj.size(); ++k) EXPECT_NEAR(r.dj[k], r.dj_gap[k], 0.01 * scale);
  // Differences of J against Simpson on the multipliers; the derivative is
  // strongly curved so each pair of panels is checked relative to itself.
  for (std::size_t k = 0; k + 2 < r.jv.size(); k += 2) {
    const double dx = r.xs[k + 1] - r.xs[k];
    const double dj = r.jv[k + 2] - r.jv[k];
    const double simpson = dx / 3.0 * (r.dj[k] + 4.0 * r.dj[k + 1] + r.dj[k + 2]);
    EXPECT_NEAR(simpson, dj, 0.01 * std::abs(dj) + 1e-15) << k;
  }
}

TEST(MultiBump, MountainPassPulsePair) {
  const auto r = fhn::two_bump_mountain_pass(P, setup().front, 0, setup().kp);
  EXPECT_FALSE(r.gap_route);
  EXPECT_TRUE(r.interior_max);
  EXPECT_GT(r.margin, 0.0);
  EXPECT_LT(r.second_difference, 0.0);
  EXPECT_GT(r.j_excess, 0.0);
  EXPECT_LE(std::abs(r.x_sharp), kNu);
  EXPECT_LE(r.solution.el_residual_sup, 1e-8);
  EXPECT_EQ(r.solution.u.right, Tail::minus);
}

TEST(MultiBump, MountainPassLongGap) {
  const auto r = fhn::two_bump_mountain_pass(P, setup().front, 6, setup().kp);
  EXPECT_TRUE(r.gap_route);
  EXPECT_TRUE(r.interior_max);
  EXPECT_LE(std::abs(r.x_sharp), 0.05);
  EXPECT_GT(r.margin, 0.0);
  EXPECT_LT(r.second_difference, 0.0);
  EXPECT_GT(r.j_excess, 0.0);
  EXPECT_LE(r.solution.el_residual_sup, 1e-8);
}

}  // namespace
