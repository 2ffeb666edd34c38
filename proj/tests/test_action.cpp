// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/action.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using fhn::Field;
using fhn::Grid;
using fhn::Tail;

const fhn::ModelParams P = fhn::derive_params(0.1, 0.05, 1.0);
const double kTanhSeedJ = 0.0081999517640775153;

Field random_admissible(std::mt19937_64& rng, const Grid& g, Tail l, Tail r) {
  std::normal_distribution<double> nd;
  std::vector<double> u(g.size());
  const double c = 3.0 * nd(rng), w = 0.3 + std::abs(nd(rng));
  std::vector<double> amp(4), cen(4);
  for (int k = 0; k < 4; ++k) {
    amp[k] = 0.3 * nd(rng);
    cen[k] = 4.0 * nd(rng);
  }
  const double ul = P.u_eq(l), ur = P.u_eq(r);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    const double s = 0.5 * (1.0 + std::tanh((x - c) / w));
    u[i] = ul + (ur - ul) * s;
    for (int k = 0; k < 4; ++k) u[i] += amp[k] * std::exp(-(x - cen[k]) * (x - cen[k]));
  }
  u.front() = ul;
  u.back() = ur;
  return Field(g, u, l, r);
}

Field tanh_seed(const Grid& g) {
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = P.u_plus * 0.5 * (1.0 + std::tanh(g.x(i)));
  u.front() = 0.0;
  u.back() = P.u_plus;
  return Field(g, u, Tail::minus, Tail::plus);
}

TEST(Action, EquilibriumProfiles) {
  const Grid g = Grid::symmetric(10.0, 0.05);
  const Field up = Field::constant(g, P.u_plus, Tail::plus, Tail::plus);
  EXPECT_NEAR(fhn::j_direct(P, up), 0.0, 1e-13);
  EXPECT_NEAR(fhn::j_positive(P, up), 0.0, 1e-13);
  for (double r : fhn::el_residual(P, up).values) EXPECT_NEAR(r, 0.0, 1e-13);
  const Field z = Field::constant(g, 0.0, Tail::minus, Tail::minus);
  EXPECT_EQ(fhn::j_positive(P, z), 0.0);
}

TEST(Action, TwoFormulasAgree) {
  std::mt19937_64 rng(42);
  const Grid g = Grid::symmetric(10.0, 0.05);
  const Tail cls[2] = {Tail::minus, Tail::plus};
  for (int t = 0; t < 1000; ++t) {
    const Field u = random_admissible(rng, g, cls[t % 2], cls[(t / 2) % 2]);
    const double jd = fhn::j_direct(P, u), jp = fhn::j_positive(P, u);
    EXPECT_LE(std::abs(jd - jp), 1e-8 * (1.0 + std::abs(jd)));
    EXPECT_GE(jp, 0.0);
  }
}

TEST(Action, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  const Grid g = Grid::symmetric(10.0, 0.05);
  for (int t = 0; t < 20; ++t) {
    const Field u = random_admissible(rng, g, Tail::minus, Tail::plus);
    std::vector<double> w(g.size(), 0.0);
    const double c = 2.0 * nd(rng);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) w[i] = std::exp(-std::pow(g.x(i) - c, 2)) * nd(rng);
    const double eps = 1e-5;
    auto up = u.values, um = u.values;
    for (std::size_t i = 0; i < g.size(); ++i) {
      up[i] += eps * w[i];
      um[i] -= eps * w[i];
    }
    const double fd = (fhn::j_direct(P, Field(g, up, u.left, u.right)) -
                       fhn::j_direct(P, Field(g, um, u.left, u.right))) /
                      (2.0 * eps);
    const auto r = fhn::el_residual(P, u);
    const double an = g.h() * fhn::inner(r.values, w, 1.0);
    EXPECT_LE(std::abs(fd - an), 1e-6 * std::abs(an) + 1e-12);
  }
}

TEST(Action, MinmaxDefectIdentity) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  const Grid g = Grid::symmetric(10.0, 0.05);
  for (int t = 0; t < 100; ++t) {
    const Field u = random_admissible(rng, g, Tail::minus, Tail::plus);
    auto v = fhn::linv_for(P, u);
    const double c = 2.0 * nd(rng);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) v[i] += 0.2 * nd(rng) * std::exp(-std::pow(g.x(i) - c, 2));
    const auto rep = fhn::minmax_defect(P, u, Field(g, v, u.left, u.right));
    EXPECT_LE(std::abs(rep.defect - rep.quadratic), 1e-10 * (1.0 + rep.quadratic));
    EXPECT_GE(rep.defect, -1e-14);
    EXPECT_LE(rep.action_uv, fhn::j_direct(P, u) + 1e-14);
  }
  const Field u = tanh_seed(g);
  const Field v(g, fhn::linv_for(P, u), u.left, u.right);
  EXPECT_NEAR(fhn::minmax_defect(P, u, v).defect, 0.0, 1e-14);
}

TEST(Action, TanhSeedGoldenValue) {
  const Grid g = Grid::symmetric(30.0, 0.01);
  const Field u = tanh_seed(g);
  const auto rep = fhn::action_report(P, u);
  EXPECT_GT(rep.j_direct, 0.0);
  // Golden number from the quadrature at h = 0.01 on (-30, 30).
  EXPECT_NEAR(rep.j_direct, kTanhSeedJ, 1e-12);
  EXPECT_GT(rep.energy_sup, 1e-3);
  // Reflection.
  std::vector<double> r(u.values.rbegin(), u.values.rend());
  EXPECT_NEAR(fhn::j_direct(P, Field(g, r, Tail::plus, Tail::minus)), rep.j_direct, 1e-12);
  // Grid-commensurate translation.
  std::vector<double> s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = i >= 37 ? u.values[i - 37] : 0.0;
  s.back() = P.u_plus;
  EXPECT_NEAR(fhn::j_direct(P, Field(g, s, Tail::minus, Tail::plus)), rep.j_direct, 1e-10);
}

TEST(Action, HamiltonianEqualsEnergy) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 100; ++t) {
    const double u = nd(rng), v = nd(rng), du = nd(rng), dv = nd(rng);
    const fhn::PhaseState s{u, v, P.d * du, -dv};
    EXPECT_NEAR(fhn::hamiltonian(P, s), fhn::pointwise_energy(P, du, dv, u, v), 1e-12);
  }
  EXPECT_LE(std::abs(fhn::equilibrium_energy(P, Tail::plus)), 1e-12);
}

TEST(Action, DeviationEnergyMatchesAbsolute) {
  for (double y : {1e-3, -2e-2, 0.1})
    for (double w : {-1e-3, 4e-3}) {
      const double a = P.u_plus, b = P.v_plus;
      const double abs_e = fhn::pointwise_energy(P, 0.3, -0.2, a + y, b + w);
      EXPECT_NEAR(fhn::deviation_energy(P, Tail::plus, 0.3, -0.2, y, w), abs_e, 1e-14);
    }
}

}  // namespace
