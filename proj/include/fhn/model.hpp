// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Parameters of the FitzHugh-Nagumo system
//   u_t - d u_xx = f(u) - v,   tau v_t - v_xx = u - gamma v,
// with the cubic f(u) = u (u - beta) (1 - u) and gamma tied to beta by the
// equal-area condition. Also the linearization at the two equilibria.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fhn {

struct InvalidParameters : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Tail { minus, plus };

inline const char* to_string(Tail t) { return t == Tail::minus ? "minus" : "plus"; }
inline Tail tail_from_string(const std::string& s) {
  if (s == "minus") return Tail::minus;
  if (s == "plus") return Tail::plus;
  throw std::invalid_argument("unknown tail class: " + s);
}
inline Tail opposite(Tail t) { return t == Tail::minus ? Tail::plus : Tail::minus; }

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Cubic nonlinearity and its derivatives.
inline double cubic_f(double u, double beta) { return u * (u - beta) * (1.0 - u); }
inline double cubic_df(double u, double beta) {
  return -3.0 * u * u + 2.0 * (1.0 + beta) * u - beta;
}
inline double cubic_d2f(double u, double beta) { return -6.0 * u + 2.0 * (1.0 + beta); }
// Antiderivative of f with value zero at u = 0.
inline double cubic_F(double u, double beta) {
  const double u2 = u * u;
  return -0.25 * u2 * u2 + (1.0 + beta) * u2 * u / 3.0 - 0.5 * beta * u2;
}
// f(a + y) - f(a), evaluated without cancellation for small y.
inline double cubic_f_increment(double a, double y, double beta) {
  return y * (cubic_df(a, beta) + y * (0.5 * cubic_d2f(a, beta) - y));
}
// F(a + y) - F(a) - f(a) y, the part of the potential that is quadratic and higher.
inline double cubic_F_increment(double a, double y, double beta) {
  const double y2 = y * y;
  return y2 * (0.5 * cubic_df(a, beta) + y * (cubic_d2f(a, beta) / 6.0 - 0.25 * y));
}

struct SaddleFocus {
  bool saddle_focus = false;    // all four spatial eigenvalues non-real
  bool degenerate = false;      // discriminant within tolerance of zero
  double discriminant = 0.0;    // d^2 (s1 - s2)^2 from the computed roots
  std::array<std::complex<double>, 4> roots{};
  double lambda = 0.0;          // |Re m|
  double omega = 0.0;           // |Im m|
  double mu = 0.0;              // modulus of the complex eigenvalue of A
  double nu = 0.0;              // argument / 2
  // P A P^{-1} = mu^2 R(2 nu).  A is the same at both equilibria.
  Mat2 P = Mat2::Identity();
  Mat2 P_inv = Mat2::Identity();
};

struct ModelParams {
  double beta = 0.1;
  double d = 0.05;
  double tau = 1.0;
  double gamma = 0.0;
  double u_plus = 0.0;
  double v_plus = 0.0;
  double k = 0.0;
  double k_gamma = 0.0;
  bool k_gamma_in_range = false;  // 3/2 < k gamma < 2, equivalent to beta below the closed form limit
  SaddleFocus spatial;
  bool front_regime = false;      // d > gamma^{-2}
  bool lyapunov_regime = false;   // tau < gamma^2
  bool closed_form_window = false;  // beta < (7 - sqrt 45)/2 and 1/gamma < sqrt d < 2/gamma
  double discriminant_closed = 0.0;   // (gamma d - beta)^2 - 4 d
  double discriminant_printed = 0.0;  // (gamma d + beta)^2 - 4 d

  double u_eq(Tail t) const { return t == Tail::minus ? 0.0 : u_plus; }
  double v_eq(Tail t) const { return t == Tail::minus ? 0.0 : v_plus; }
  double f(double u) const { return cubic_f(u, beta); }
  double df(double u) const { return cubic_df(u, beta); }
  double F(double u) const { return cubic_F(u, beta); }
  double sqrt_gamma() const { return std::sqrt(gamma); }
  // Matrix of the linearized steady problem (u, v)'' = A (u, v).
  Mat2 A() const {
    Mat2 a;
    a << beta / d, 1.0 / d, -1.0, gamma;
    return a;
  }
};

inline constexpr double kDegenerateTolerance = 1e-12;

inline double gamma_of_beta(double beta) { return 9.0 / (2.0 * beta * beta - 5.0 * beta + 2.0); }

inline double closed_form_beta_limit() { return (7.0 - std::sqrt(45.0)) / 2.0; }

// Roots m of d m^4 - (d gamma + beta) m^2 + (beta gamma + 1) = 0 via the
// two values of m^2.
inline std::array<std::complex<double>, 4> spatial_roots(double beta, double gamma, double d,
                                                         double* disc_out = nullptr) {
  using C = std::complex<double>;
  const double a = d, b = -(d * gamma + beta), c = beta * gamma + 1.0;
  const double disc = b * b - 4.0 * a * c;
  const C sq = std::sqrt(C(disc, 0.0));
  // Stable quadratic formula for s = m^2.
  const C q = -0.5 * (C(b, 0.0) + (b >= 0 ? sq : -sq));
  const C s1 = q / a;
  const C s2 = C(c, 0.0) / q;
  if (disc_out) *disc_out = std::norm(a * (s1 - s2)) * (disc >= 0 ? 1.0 : -1.0);
  const C r1 = std::sqrt(s1), r2 = std::sqrt(s2);
  return {r1, -r1, r2, -r2};
}

inline SaddleFocus analyse_spatial(double beta, double gamma, double d) {
  SaddleFocus sf;
  double disc = 0.0;
  sf.roots = spatial_roots(beta, gamma, d, &disc);
  sf.discriminant = disc;
  double scale = d * d * (d * gamma + beta) * (d * gamma + beta);
  if (scale == 0.0) scale = 1.0;
  sf.degenerate = std::abs(disc) <= kDegenerateTolerance * std::max(1.0, scale);
  bool all_complex = true;
  for (const auto& r : sf.roots) {
    if (std::abs(r.imag()) <= 1e-14 * std::abs(r) || std::abs(r.real()) <= 1e-14 * std::abs(r))
      all_complex = false;
  }
  sf.saddle_focus = all_complex && !sf.degenerate;
  if (!sf.saddle_focus) return sf;
  sf.lambda = std::abs(sf.roots[0].real());
  sf.omega = std::abs(sf.roots[0].imag());

  // Eigenvalue s = m^2 of A with positive imaginary part and its eigenvector.
  Mat2 A;
  A << beta / d, 1.0 / d, -1.0, gamma;
  using C = std::complex<double>;
  const double tr = A.trace(), det = A.determinant();
  const C s = 0.5 * (C(tr, 0.0) + std::sqrt(C(tr * tr - 4.0 * det, 0.0)));
  const C sp = s.imag() >= 0 ? s : std::conj(s);
  sf.mu = std::sqrt(std::abs(sp));
  sf.nu = 0.5 * std::arg(sp);
  // (A - s) e = 0 with first component 1: e = (1, (s - beta/d) d).
  Eigen::Vector2cd e(C(1.0, 0.0), (sp - beta / d) * d);
  e /= e.real().norm();
  const Vec2 ar = e.real(), bi = e.imag();
  Mat2 Q;
  Q.col(0) = ar;
  Q.col(1) = -bi;
  sf.P_inv = Q;
  sf.P = Q.inverse();
  return sf;
}

inline ModelParams derive_params(double beta, double d, double tau = 1.0) {
  if (!(beta > 0.0 && beta < 0.5)) throw InvalidParameters("beta must lie in (0, 1/2)");
  if (!(d > 0.0)) throw InvalidParameters("d must be positive");
  if (!(tau > 0.0)) throw InvalidParameters("tau must be positive");
  ModelParams p;
  p.beta = beta;
  p.d = d;
  p.tau = tau;
  p.gamma = gamma_of_beta(beta);
  p.u_plus = 2.0 * (beta + 1.0) / 3.0;
  p.v_plus = p.u_plus / p.gamma;
  p.k = (beta * beta - beta + 1.0) / 3.0;
  p.k_gamma = p.k * p.gamma;
  p.k_gamma_in_range = p.k_gamma > 1.5 && p.k_gamma < 2.0;
  p.spatial = analyse_spatial(beta, p.gamma, d);
  p.front_regime = d > 1.0 / (p.gamma * p.gamma);
  p.lyapunov_regime = tau < p.gamma * p.gamma;
  p.discriminant_closed = std::pow(p.gamma * d - beta, 2) - 4.0 * d;
  p.discriminant_printed = std::pow(p.gamma * d + beta, 2) - 4.0 * d;
  const double sd = std::sqrt(d);
  p.closed_form_window =
      beta < closed_form_beta_limit() && 1.0 / p.gamma < sd && sd < 2.0 / p.gamma;
  return p;
}

// Affine map taking the normalized cubic system to the original one.
inline Vec2 cubic_transform(const ModelParams& p, const Vec2& normalized) {
  const double sk = std::sqrt(p.k);
  return {(p.beta + 1.0) / 3.0 + sk * normalized(0),
          (p.beta + 1.0) / (3.0 * p.gamma) + sk * normalized(1)};
}

// Equilibria of the normalized system, +/-(a, a/gamma) with a^2 = 1 - 1/(k gamma).
inline Vec2 normalized_equilibrium(const ModelParams& p, Tail t) {
  const double a = std::sqrt(1.0 - 1.0 / p.k_gamma);
  const double s = t == Tail::plus ? 1.0 : -1.0;
  return {s * a, s * a / p.gamma};
}

// Rotation by angle a.
inline Mat2 rotation(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

// Deviation from an equilibrium expressed in the rotating frame.
struct PolarDeviation {
  double radius;
  double angle;
};
inline PolarDeviation polar_deviation(const ModelParams& p, Tail t, double u, double v) {
  const Vec2 y = p.spatial.P * Vec2(u - p.u_eq(t), v - p.v_eq(t));
  return {y.norm(), std::atan2(y(1), y(0))};
}

}  // namespace fhn
