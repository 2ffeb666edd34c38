// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, exit 0 only if all pass.
// Tolerances are the published acceptance numbers; nothing is tuned here.

#include "fhn/action.hpp"
#include "fhn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace fhn;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
  void need(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

const ModelParams P = derive_params(0.1, 0.05, 1.0);

// Shared heavy objects, built once on first use.
struct Waves {
  FrontSolution front;
  json kappa;
  MultiBumpSolution multibump;
  MountainPassResult mpass;
  std::optional<SpectrumReport> mpass_spectrum;
};

cli::Context context(const fs::path& dir) {
  cli::RunConfig c;
  return cli::Context{c, P, dir, std::cout, std::cerr};
}

Waves& waves() {
  static std::optional<Waves> w;
  if (!w) {
    w.emplace();
    const auto ctx = context(fs::temp_directory_path());
    w->front = solve_front(P, Grid::symmetric(30.0, 0.01), Tail::minus, Tail::plus);
    w->kappa = cli::kappa_certificate(ctx, w->front).cert.values;
    w->multibump = outer_minimize(P, w->front, cli::default_spec(ctx, w->kappa));
    MountainPassOptions o;
    o.z = w->kappa["z_plus"].get<double>();
    w->mpass = two_bump_mountain_pass(P, w->front, 0, w->kappa["kappa_plus"].get<double>(), o);
  }
  return *w;
}

Outcome c1() {
  Outcome o;
  const auto t0 = Clock::now();
  const double b = 0.1;
  const auto m = derive_params(b, 0.05, 1.0);
  o.need(std::abs(m.gamma - 9.0 / 1.52) <= 1e-12, "gamma err " + num(std::abs(m.gamma - 9.0 / 1.52)));
  o.need(std::abs(m.u_plus - 2.0 * (b + 1.0) / 3.0) <= 1e-12, "u+");
  o.need(std::abs(m.k - (b * b - b + 1.0) / 3.0) <= 1e-12, "k");
  o.need(m.k_gamma > 1.5 && m.k_gamma < 2.0, "k*gamma " + num(m.k_gamma));
  const double e = std::max(std::abs(equilibrium_energy(m, Tail::minus)), std::abs(equilibrium_energy(m, Tail::plus)));
  o.need(e <= 1e-12, "|E(z)| " + num(e));
  const double t = seconds_since(t0);
  o.need(t < 1.0, "time " + num(t) + " s");
  return o;
}

Outcome c2() {
  Outcome o;
  const auto t0 = Clock::now();
  cli::Certificate cert;
  const json s = cli::gate_sweep(100, cert);
  o.need(cert.passed(), "agree " + std::to_string(s["agree_closed"].get<long>()) + "/" +
                            std::to_string(s["compared"].get<long>()));
  const auto n = s["disagree_printed"].get<long>();
  o.need(true, "printed variant disagrees at " + std::to_string(n) + " points" +
                   (n ? " in " + s["printed_disagreement_box"].dump() : ""));
  const double t = seconds_since(t0);
  o.need(t < 5.0, "time " + num(t) + " s");
  return o;
}

double sin_error(double h) {
  const double a = 1.7, g = P.gamma;
  const Grid gr = Grid::with_spacing(0.0, 6.0, h);
  std::vector<double> u(gr.size()), ex(gr.size());
  for (std::size_t i = 0; i < gr.size(); ++i) {
    u[i] = std::sin(a * gr.x(i));
    ex[i] = u[i] / (g + a * a);
  }
  const auto v = apply_Linv(u, gr.h(), g, BoundaryCondition::dirichlet(ex.front(), ex.back()));
  double e = 0.0;
  for (std::size_t i = 0; i < gr.size(); ++i) e = std::max(e, std::abs(v[i] - ex[i]));
  return e;
}

Outcome c3() {
  Outcome o;
  const double g = P.gamma;
  {  // self-adjointness
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    const Grid gr = Grid::symmetric(10.0, 0.02);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      std::vector<double> a(gr.size()), b(gr.size());
      for (std::size_t i = 1; i + 1 < gr.size(); ++i) {
        a[i] = nd(rng);
        b[i] = nd(rng);
      }
      for (auto kind : {BoundaryKind::dirichlet_to_equilibrium, BoundaryKind::robin_decay}) {
        const BoundaryCondition bc{kind, 0.0, 0.0};
        const double lhs = inner(a, apply_Linv(b, gr.h(), g, bc), gr.h());
        const double rhs = inner(apply_Linv(a, gr.h(), g, bc), b, gr.h());
        worst = std::max(worst, std::abs(lhs - rhs) / (l2_norm(a, gr.h()) * l2_norm(b, gr.h())));
      }
    }
    o.need(worst <= 1e-10, "adjoint defect " + num(worst));
  }
  {  // constants
    const Grid gr = Grid::symmetric(5.0, 0.05);
    const double c = 0.7;
    const auto v = apply_Linv(std::vector<double>(gr.size(), c), gr.h(), g, BoundaryCondition::dirichlet(c / g, c / g));
    double e = 0.0;
    for (double x : v) e = std::max(e, std::abs(x - c / g));
    o.need(e <= 1e-12, "constant err " + num(e));
  }
  {  // sinusoid order
    const double e1 = sin_error(0.04), e2 = sin_error(0.02), e3 = sin_error(0.01);
    const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
    o.need(p1 >= 1.9 && p2 >= 1.9, "orders " + num(p1) + ", " + num(p2));
  }
  {  // Green convolution
    const Grid gr = Grid::symmetric(12.0, 0.001);
    std::vector<double> u(gr.size());
    for (std::size_t i = 0; i < gr.size(); ++i) {
      const double x = gr.x(i);
      u[i] = std::abs(x) < 1.0 ? std::pow(1.0 - x * x, 4) : 0.0;
    }
    const auto v = apply_Linv(u, gr.h(), g, BoundaryCondition::robin(0.0, 0.0));
    const double sg = std::sqrt(g);
    double err = 0.0;
    std::vector<double> row(gr.size());
    for (std::size_t i = 0; i < gr.size(); i += 97) {
      for (std::size_t j = 0; j < gr.size(); ++j) row[j] = std::exp(-sg * std::abs(gr.x(i) - gr.x(j))) / (2.0 * sg) * u[j];
      err = std::max(err, std::abs(trapezoid(row, gr.h()) - v[i]));
    }
    o.need(err <= 1e-6, "Green err " + num(err));
  }
  {  // interval smallness bound on random windows
    bool all = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> nd;
      const Grid gr = Grid::with_spacing(-1.0, 2.0, 0.02);
      std::vector<double> phi(gr.size());
      for (int k = 0; k < 6; ++k) {
        const double a = nd(rng), f = 0.5 + 3.0 * std::abs(nd(rng));
        for (std::size_t i = 0; i < gr.size(); ++i) phi[i] += a * std::sin(f * gr.x(i) + k);
      }
      const Field f(gr, phi, Tail::minus, Tail::minus);
      const auto ws = window_solve(f, nd(rng), nd(rng), g);
      all = all && check_interval_bound(ws, f, g).holds;
    }
    o.need(all, "interval bound on 5 windows");
  }
  return o;
}

Field random_admissible(std::mt19937_64& rng, const Grid& g, Tail l, Tail r) {
  std::normal_distribution<double> nd;
  std::vector<double> u(g.size());
  const double c = 3.0 * nd(rng), w = 0.3 + std::abs(nd(rng));
  double amp[4], cen[4];
  for (int k = 0; k < 4; ++k) {
    amp[k] = 0.3 * nd(rng);
    cen[k] = 4.0 * nd(rng);
  }
  const double ul = P.u_eq(l), ur = P.u_eq(r);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    u[i] = ul + (ur - ul) * 0.5 * (1.0 + std::tanh((x - c) / w));
    for (int k = 0; k < 4; ++k) u[i] += amp[k] * std::exp(-(x - cen[k]) * (x - cen[k]));
  }
  u.front() = ul;
  u.back() = ur;
  return Field(g, u, l, r);
}

Outcome c4() {
  Outcome o;
  const Grid g = Grid::symmetric(10.0, 0.05);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  double mm = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Field u = random_admissible(rng, g, Tail::minus, Tail::plus);
    auto v = linv_for(P, u);
    const double c = 2.0 * nd(rng);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) v[i] += 0.2 * nd(rng) * std::exp(-std::pow(g.x(i) - c, 2));
    const auto r = minmax_defect(P, u, Field(g, v, u.left, u.right));
    mm = std::max(mm, std::abs(r.defect - r.quadratic) / (1.0 + r.quadratic));
  }
  o.need(mm <= 1e-10, "minmax defect " + num(mm));
  double jj = 0.0;
  const Tail cls[2] = {Tail::minus, Tail::plus};
  for (int t = 0; t < 1000; ++t) {
    const Field u = random_admissible(rng, g, cls[t % 2], cls[(t / 2) % 2]);
    const double a = j_direct(P, u), b = j_positive(P, u);
    jj = std::max(jj, std::abs(a - b) / (1.0 + std::abs(a)));
  }
  o.need(jj <= 1e-8, "J formulas " + num(jj));
  double gd = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Field u = random_admissible(rng, g, Tail::minus, Tail::plus);
    std::vector<double> w(g.size(), 0.0);
    const double c = 2.0 * nd(rng);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) w[i] = std::exp(-std::pow(g.x(i) - c, 2)) * nd(rng);
    // Richardson-extrapolated central difference: the plain one carries an
    // eps^2 truncation term that dominates when the directional derivative is small.
    auto central = [&](double eps) {
      auto up = u.values, um = u.values;
      for (std::size_t i = 0; i < g.size(); ++i) {
        up[i] += eps * w[i];
        um[i] -= eps * w[i];
      }
      return (j_direct(P, Field(g, up, u.left, u.right)) - j_direct(P, Field(g, um, u.left, u.right))) / (2 * eps);
    };
    const double fd = (4.0 * central(5e-5) - central(1e-4)) / 3.0;
    const double an = g.h() * inner(el_residual(P, u).values, w, 1.0);
    gd = std::max(gd, std::abs(fd - an) / (std::abs(an) + 1e-12));
  }
  o.need(gd <= 1e-6, "gradient vs FD " + num(gd));
  return o;
}

Outcome from_certificate(const cli::Certificate& c, const std::vector<std::string>& show) {
  Outcome o;
  o.need(c.passed(), c.passed() ? "all checks" : "failed: " + json(c.failures()).dump());
  for (const auto& k : show)
    if (c.values.contains(k)) o.detail += "; " + k + " " + c.values[k].dump();
  return o;
}

Outcome c5() {
  const auto t0 = Clock::now();
  const auto& w = waves();
  auto o = from_certificate(cli::front_certificate(context("."), w.front), {"j_value", "el_residual_sup", "energy_sup"});
  o.need(w.front.polished, "polished");
  o.detail += "; lambda_hat " + num(w.front.right_fit.lambda_hat) + " omega_hat " + num(w.front.right_fit.omega_hat);
  o.detail += "; setup " + num(seconds_since(t0)) + " s";
  return o;
}

Outcome c6() {
  auto o = from_certificate(cli::kappa_certificate(context("."), waves().front).cert,
                            {"kappa_plus", "kappa_plus_next", "sign_law_fraction"});
  return o;
}

Outcome c7() {
  const auto& s = waves().multibump;
  auto o = from_certificate(cli::multibump_certificate(context("."), s), {"el_residual_sup", "spacing_error"});
  o.need(s.spec.N == 3 && s.spec.n == std::vector<int>({6, 6, 6}), "N=3 n=(6,6,6)");
  return o;
}

// Five seeded stability runs on the N=3 wave; criteria 8 and 9 read the same runs.
const std::vector<StabilityReport>& stability_runs() {
  static std::vector<StabilityReport> runs;
  if (runs.empty()) {
    const auto& s = waves().multibump;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EvolveOptions o;
      o.seed = seed;
      o.sample_every = 10.0;
      runs.push_back(run_stability(P, s.u, s.v, 1e-2, 200.0, o));
    }
  }
  return runs;
}

Outcome c8() {
  Outcome o;
  long flagged = 0, steps = 0;
  double jex = 0.0;
  for (const auto& r : stability_runs()) {
    flagged += r.flagged_steps;
    steps += r.steps;
    jex = std::max(jex, r.max_j_excess);
  }
  o.need(flagged == 0, "flagged " + std::to_string(flagged) + " of " + std::to_string(steps) + " steps");
  o.detail += "; C " + num(kSchemeConstant) + ", max J excess " + num(jex);
  return o;
}

Outcome c9() {
  Outcome o;
  for (const auto& r : stability_runs()) {
    o.need(r.final_distance <= 1e-3, "seed " + std::to_string(r.seed) + " d(T) " + num(r.final_distance));
  }
  return o;
}

Outcome c10() {
  Outcome o;
  auto& w = waves();
  const auto sp = rightmost_spectrum(P, w.mpass.solution.u, w.mpass.solution.v);
  w.mpass_spectrum = sp;
  if (!sp.zeta_max || !sp.unstable_mode) {
    o.need(false, "no unstable eigenvalue");
    return o;
  }
  const double z = *sp.zeta_max;
  const auto f2 = solve_front(P, Grid::symmetric(30.0, 0.005), Tail::minus, Tail::plus);
  MountainPassOptions mo;
  mo.h = 0.005;
  mo.z = w.kappa["z_plus"].get<double>();
  const auto mp2 = two_bump_mountain_pass(P, f2, 0, w.kappa["kappa_plus"].get<double>(), mo);
  const auto sp2 = rightmost_spectrum(P, mp2.solution.u, mp2.solution.v);
  o.need(z > 0.0, "zeta_max " + num(z));
  const double dz = sp2.zeta_max ? std::abs(*sp2.zeta_max - z) : INFINITY;
  o.need(dz <= 1e-4, "h/2 change " + num(dz));
  const PerturbationPair dir{sp.unstable_mode->phi, sp.unstable_mode->psi};
  for (int sign : {1, -1}) {
    InstabilityOptions io;
    io.horizon = 3000.0;
    const auto sw = escape_sweep(P, w.mpass.solution.u, w.mpass.solution.v, dir, {1e-3, 1e-4, 1e-5}, z, sign, io);
    long flagged = 0;
    for (const auto& r : sw.runs) flagged += r.flagged_steps;
    o.need(sw.all_escaped && sw.max_relative_error <= 0.15,
           "sign " + std::to_string(sign) + " rel err " + num(sw.max_relative_error));
    o.need(flagged == 0, "flagged " + std::to_string(flagged));
  }
  return o;
}

Outcome c11() {
  Outcome o;
  auto& w = waves();
  auto check = [&](const std::string& name, const Field& u, const Field& v, const SpectrumReport* have) {
    const auto r = have ? *have : rightmost_spectrum(P, u, v);
    o.need(r.zero_mode_error <= 1e-6 && r.zero_mode_correlation >= 0.999,
           name + " |z0| " + num(r.zero_mode_error) + " corr " + num(r.zero_mode_correlation));
  };
  check("front", w.front.u, w.front.v, nullptr);
  check("multibump", w.multibump.u, w.multibump.v, nullptr);
  check("mpass", w.mpass.solution.u, w.mpass.solution.v, w.mpass_spectrum ? &*w.mpass_spectrum : nullptr);
  return o;
}

Outcome c12() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "fhn_acceptance_determinism";
  fs::remove_all(root);
  setenv("FHN_RUN_DIR", root.c_str(), 1);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    cli::RunConfig c;
    c.run = run;
    c.T = 5.0;
    c.evolve_wave = "front";
    for (const char* cmd : {"front", "kappa", "evolve", "spectrum"}) cli::run_command(cmd, c, sink, sink);
  }
  for (const char* f : {"front_cert.json", "kappa.json", "evolve_stability.json", "spectrum_front.json"}) {
    const bool same = fs::exists(root / "a" / f) && read_text(root / "a" / f) == read_text(root / "b" / f);
    o.need(same, f);
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> crit{
      {"parameter algebra", c1},
      {"saddle-focus gate sweep", c2},
      {"nonlocal operator", c3},
      {"exact action identities", c4},
      {"basic front", c5},
      {"spacing constant", c6},
      {"three-gap multi-bump", c7},
      {"Lyapunov decay", c8},
      {"asymptotic stability", c9},
      {"mountain-pass instability", c10},
      {"translation zero mode", c11},
      {"determinism", c12}};
  int failed = 0;
  for (std::size_t k = 0; k < crit.size(); ++k) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = crit[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s  %-26s (%.1f s) %s\n", k + 1, o.pass ? "PASS" : "FAIL", crit[k].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, crit.size());
  return failed ? 1 : 0;
}
