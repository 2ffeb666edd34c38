// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command layer behind tools/fhn: run configuration, certificates, and the
// subcommands params, front, kappa, build, mpass, evolve, spectrum, verify.
// Each command writes into one run directory and returns an exit code.

#pragma once

#include "fhn/evolve.hpp"
#include "fhn/fronts.hpp"
#include "fhn/io.hpp"
#include "fhn/localbvp.hpp"
#include "fhn/multibump.hpp"
#include "fhn/spectral.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace fhn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCertificate = 1;
inline constexpr int kExitUsage = 2;

struct PrerequisiteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // params block
  double beta = 0.1, d = 0.05, tau = 1.0;
  // numerics block
  double h = 0.01, dt = 0.01, half_width = 30.0;
  double el_tol = 1e-8, energy_tol = 1e-6, tail_tol = 0.03, sigma = 0.05;
  double zero_tol = 1e-6, correlation = 0.999;
  std::uint64_t seed = 1;
  std::string run = "run";
  // experiment blocks
  int sweep = 0;                                  // params
  int n_tilde = 2;                                // kappa
  double radius = 0.025;
  std::string spec;                               // build
  std::vector<int> build_n{6, 6, 6};
  double z = 0.0, nu = 0.0, K = 10.0, rbar = 0.05;  // z, nu = 0: derived
  int min_winding = 4;
  int mpass_n = 0;                                // mpass
  int samples = 13;
  std::string mode = "stability";                 // evolve
  std::string evolve_wave = "multibump";
  double rho = 1e-2, T = 200.0, eps0 = 1e-2, horizon = 5000.0, sample_every = 1.0;
  std::vector<double> rhos{1e-3, 1e-4, 1e-5};
  int sign = 1;
  std::string spectrum_wave = "front";            // spectrum
  int count = 8;
  bool eigvec = false;

  bool operator==(const RunConfig&) const = default;
};

inline std::string ini_string(const std::string& s) { return "\"" + s + "\""; }
template <class T>
std::string ini_list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt17(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s + "]";
}

// Resolved configuration in the key = value format read by --config.
inline std::string to_ini(const RunConfig& c) {
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  auto num = [&](const std::string& k, double v) { kv(k, fmt17(v)); };
  num("beta", c.beta);
  num("d", c.d);
  num("tau", c.tau);
  num("h", c.h);
  num("dt", c.dt);
  num("half-width", c.half_width);
  num("el-tol", c.el_tol);
  num("energy-tol", c.energy_tol);
  num("tail-tol", c.tail_tol);
  num("sigma", c.sigma);
  num("zero-tol", c.zero_tol);
  num("correlation", c.correlation);
  kv("seed", std::to_string(c.seed));
  kv("run", ini_string(c.run));
  s += "\n[params]\n";
  kv("sweep", std::to_string(c.sweep));
  s += "\n[kappa]\n";
  kv("n-tilde", std::to_string(c.n_tilde));
  num("radius", c.radius);
  s += "\n[build]\n";
  kv("spec", ini_string(c.spec));
  kv("n", ini_list(c.build_n));
  num("z", c.z);
  num("nu", c.nu);
  num("K", c.K);
  num("rbar", c.rbar);
  kv("min-winding", std::to_string(c.min_winding));
  s += "\n[mpass]\n";
  kv("n", std::to_string(c.mpass_n));
  kv("samples", std::to_string(c.samples));
  s += "\n[evolve]\n";
  kv("mode", ini_string(c.mode));
  kv("wave", ini_string(c.evolve_wave));
  num("rho", c.rho);
  num("T", c.T);
  num("eps0", c.eps0);
  num("horizon", c.horizon);
  num("sample-every", c.sample_every);
  kv("rhos", ini_list(c.rhos));
  kv("sign", std::to_string(c.sign));
  s += "\n[spectrum]\n";
  kv("wave", ini_string(c.spectrum_wave));
  kv("count", std::to_string(c.count));
  kv("eigvec", c.eigvec ? "true" : "false");
  return s;
}

// Parser bound to a RunConfig. Flags override the --config file.
class Parser {
 public:
  explicit Parser(RunConfig& c) : app_("Standing waves of the FitzHugh-Nagumo system") {
    app_.set_help_flag("--help", "print help");  // -h is the grid spacing
    app_.set_config("--config", "", "key = value configuration file");
    app_.fallthrough();
    app_.require_subcommand(1);
    app_.add_option("--beta", c.beta, "cubic threshold, in (0, 1/2)");
    app_.add_option("--d", c.d, "activator diffusion");
    app_.add_option("--tau", c.tau, "inhibitor time scale");
    app_.add_option("--h", c.h, "grid spacing");
    app_.add_option("--dt", c.dt, "time step");
    app_.add_option("--half-width", c.half_width, "front domain half-width");
    app_.add_option("--el-tol", c.el_tol, "Euler-Lagrange residual tolerance");
    app_.add_option("--energy-tol", c.energy_tol, "energy trace tolerance");
    app_.add_option("--tail-tol", c.tail_tol, "relative tolerance of fitted tail rates");
    app_.add_option("--sigma", c.sigma, "multi-bump window and spacing tolerance");
    app_.add_option("--zero-tol", c.zero_tol, "translation eigenvalue tolerance");
    app_.add_option("--correlation", c.correlation, "required translation-mode correlation");
    app_.add_option("--seed", c.seed, "random seed");
    app_.add_option("--run", c.run, "run directory name under $FHN_RUN_DIR");

    auto* p = sub("params", "derived constants and window verdicts");
    p->add_option("--sweep", c.sweep, "(beta, d) gate sweep resolution, 0 to skip");
    sub("front", "basic front and its certificates");
    auto* k = sub("kappa", "spacing constants from the window energy");
    k->add_option("--n-tilde", c.n_tilde, "winding of the probe window");
    k->add_option("--radius", c.radius, "frame radius of the tail point");
    auto* b = sub("build", "multi-bump standing wave");
    b->add_option("--spec", c.spec, "BumpSpec JSON file");
    b->add_option("--n", c.build_n, "winding numbers, comma separated")->delimiter(',');
    b->add_option("--z", c.z, "window half-width, 0: from kappa");
    b->add_option("--nu", c.nu, "offset bound, 0: 0.3 pi / omega");
    b->add_option("--K", c.K, "tube factor");
    b->add_option("--rbar", c.rbar, "endpoint radius");
    b->add_option("--min-winding", c.min_winding, "smallest admissible winding D");
    auto* mp = sub("mpass", "two-bump mountain pass");
    mp->add_option("--n", c.mpass_n, "winding of the gap");
    mp->add_option("--samples", c.samples, "family samples across the offset interval");
    auto* e = sub("evolve", "time evolution from a stored wave");
    e->add_option("--mode", c.mode, "stability or instability")->check(CLI::IsMember({"stability", "instability"}));
    e->add_option("--wave", c.evolve_wave, "front, multibump or mpass")->check(CLI::IsMember({"front", "multibump", "mpass"}));
    e->add_option("--rho", c.rho, "perturbation size");
    e->add_option("--T", c.T, "horizon of a stability run");
    e->add_option("--eps0", c.eps0, "escape threshold");
    e->add_option("--horizon", c.horizon, "horizon of an escape run");
    e->add_option("--sample-every", c.sample_every, "time between distance samples");
    e->add_option("--rhos", c.rhos, "escape sweep sizes, comma separated")->delimiter(',');
    e->add_option("--sign", c.sign, "direction along the unstable mode")->check(CLI::IsMember({-1, 1}));
    auto* s = sub("spectrum", "rightmost spectrum of a stored wave");
    s->add_option("--wave", c.spectrum_wave, "front, multibump or mpass")->check(CLI::IsMember({"front", "multibump", "mpass"}));
    s->add_option("--count", c.count, "eigenvalues to report");
    s->add_flag("--eigvec", c.eigvec, "write the unstable eigenfunction");
    sub("verify", "recompute certificates from the stored fields");
  }

  CLI::App& app() { return app_; }
  std::string selected() const {
    for (const auto& [name, s] : subs_)
      if (s->parsed()) return name;
    return {};
  }

 private:
  CLI::App* sub(const std::string& name, const std::string& help) {
    auto* s = app_.add_subcommand(name, help);
    subs_[name] = s;
    return s;
  }
  CLI::App app_;
  std::map<std::string, CLI::App*> subs_;
};

inline fs::path run_root() {
  const char* r = std::getenv("FHN_RUN_DIR");
  return r && *r ? fs::path(r) : fs::path("runs");
}
inline fs::path run_directory(const RunConfig& c) { return run_root() / c.run; }

// ------------------------------------------------------------ certificates

class Certificate {
 public:
  void le(const std::string& n, double v, double lim) { add(n, v, lim, "<=", v <= lim); }
  void lt(const std::string& n, double v, double lim) { add(n, v, lim, "<", v < lim); }
  void ge(const std::string& n, double v, double lim) { add(n, v, lim, ">=", v >= lim); }
  void gt(const std::string& n, double v, double lim) { add(n, v, lim, ">", v > lim); }
  void truth(const std::string& n, bool b) { add(n, b ? 1.0 : 0.0, 1.0, "==", b); }
  void error(const std::string& msg) {
    checks_.push_back({{"name", "error"}, {"message", msg}, {"passed", false}});
    failures_.push_back("error: " + msg);
  }
  bool passed() const { return failures_.empty(); }
  const std::vector<std::string>& failures() const { return failures_; }
  json values = json::object();

  json to_json(const std::string& command, const ModelParams& m) const {
    return {{"command", command}, {"params_hash", params_hash(m)}, {"passed", passed()},
            {"failures", failures_},  {"checks", checks_},          {"values", values}};
  }

 private:
  void add(const std::string& n, double v, double lim, const char* rel, bool ok) {
    checks_.push_back({{"name", n}, {"value", v}, {"limit", lim}, {"relation", rel}, {"passed", ok}});
    if (!ok) failures_.push_back(n);
  }
  json checks_ = json::array();
  std::vector<std::string> failures_;
};

struct Context {
  RunConfig cfg;
  ModelParams m;
  fs::path dir;
  std::ostream& out;
  std::ostream& err;
};

inline json mat_json(const Mat2& a) { return {{a(0, 0), a(0, 1)}, {a(1, 0), a(1, 1)}}; }

inline json params_report(const ModelParams& m) {
  return {{"beta", m.beta},
          {"d", m.d},
          {"tau", m.tau},
          {"gamma", m.gamma},
          {"u_plus", m.u_plus},
          {"v_plus", m.v_plus},
          {"k", m.k},
          {"k_gamma", m.k_gamma},
          {"verdicts",
           {{"saddle_focus", m.spatial.saddle_focus},
            {"degenerate", m.spatial.degenerate},
            {"k_gamma_in_range", m.k_gamma_in_range},
            {"front_regime", m.front_regime},
            {"lyapunov_regime", m.lyapunov_regime},
            {"closed_form_window", m.closed_form_window}}},
          {"spatial",
           {{"lambda", m.spatial.lambda},
            {"omega", m.spatial.omega},
            {"mu", m.spatial.mu},
            {"nu", m.spatial.nu},
            {"discriminant", m.spatial.discriminant},
            {"P", mat_json(m.spatial.P)},
            {"P_inv", mat_json(m.spatial.P_inv)}}},
          {"discriminants", {{"closed", m.discriminant_closed}, {"printed", m.discriminant_printed}}},
          {"closed_form_beta_limit", closed_form_beta_limit()},
          {"equilibrium_energy",
           {{"minus", equilibrium_energy(m, Tail::minus)}, {"plus", equilibrium_energy(m, Tail::plus)}}},
          {"params_hash", params_hash(m)}};
}

// Numerical gate against both closed discriminants on an n x n (beta, d) grid.
inline json gate_sweep(int n, Certificate& c) {
  long compared = 0, agree = 0, printed_disagree = 0, skipped = 0;
  double bmin = 1e300, bmax = -1e300, dmin = 1e300, dmax = -1e300;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double beta = 0.5 * (i + 0.5) / n, d = 0.5 * (j + 0.5) / n;
      const auto p = derive_params(beta, d);
      if (std::abs(p.discriminant_closed) <= 1e-10) {
        ++skipped;
        continue;
      }
      ++compared;
      agree += p.spatial.saddle_focus == (p.discriminant_closed < 0.0);
      if (p.spatial.saddle_focus != (p.discriminant_printed < 0.0)) {
        ++printed_disagree;
        bmin = std::min(bmin, beta);
        bmax = std::max(bmax, beta);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    }
  c.truth("gate_matches_closed_discriminant", agree == compared);
  json region = printed_disagree ? json{{"beta", {bmin, bmax}}, {"d", {dmin, dmax}}} : json(nullptr);
  return {{"n", n},
          {"compared", compared},
          {"boundary_skipped", skipped},
          {"agree_closed", agree},
          {"disagree_printed", printed_disagree},
          {"printed_disagreement_box", region}};
}

// ------------------------------------------------------------ stored inputs

inline void require_file(const Context& ctx, const std::string& name, const std::string& producer) {
  if (!fs::exists(ctx.dir / name))
    throw PrerequisiteError("missing " + name + " in " + ctx.dir.string() + "; run `" + producer + "` first");
}

inline FrontSolution front_from_fields(const ModelParams& m, Field u, Field v) {
  FrontSolution s;
  s.u = std::move(u);
  s.v = std::move(v);
  certify_front(m, s, FrontOptions{}.tail_rho);
  s.polished = true;
  return s;
}

inline FrontSolution load_front(const Context& ctx) {
  require_file(ctx, "front.csv", "front");
  auto w = read_wave(ctx.dir, "front", ctx.m);
  return front_from_fields(ctx.m, std::move(w.u), std::move(w.v));
}

inline json load_kappa(const Context& ctx) {
  require_file(ctx, "kappa.json", "kappa");
  return read_json(ctx.dir / "kappa.json").at("values");
}

inline json spec_json(const BumpSpec& s) {
  return {{"N", s.N},   {"n", s.n},   {"half", s.half},       {"x", s.x},
          {"z", s.z},   {"nu", s.nu}, {"kappa_plus", s.kappa_plus}, {"kappa_minus", s.kappa_minus},
          {"K", s.K},   {"rbar", s.rbar}};
}

inline BumpSpec spec_from_json(const json& j, BumpSpec s) {
  s.n = j.at("n").get<std::vector<int>>();
  s.N = static_cast<int>(s.n.size());
  if (j.contains("N") && j.at("N").get<int>() != s.N) throw std::invalid_argument("BumpSpec: N differs from the length of n");
  s.half = j.contains("half") ? j.at("half").get<std::vector<unsigned char>>() : std::vector<unsigned char>(s.n.size(), 0);
  s.x = j.contains("x") ? j.at("x").get<std::vector<double>>() : std::vector<double>(s.n.size(), 0.0);
  for (const char* k : {"z", "nu", "kappa_plus", "kappa_minus", "K", "rbar"})
    if (j.contains(k)) {
      const double v = j.at(k).get<double>();
      if (std::string(k) == "z") s.z = v;
      else if (std::string(k) == "nu") s.nu = v;
      else if (std::string(k) == "kappa_plus") s.kappa_plus = v;
      else if (std::string(k) == "kappa_minus") s.kappa_minus = v;
      else if (std::string(k) == "K") s.K = v;
      else s.rbar = v;
    }
  return s;
}

inline std::string wave_producer(const std::string& wave) {
  return wave == "multibump" ? "build" : wave;
}

// ------------------------------------------------------------ certificate rules

inline Certificate front_certificate(const Context& ctx, const FrontSolution& s) {
  const auto& m = ctx.m;
  const auto& c = ctx.cfg;
  Certificate cert;
  cert.le("el_residual_sup", s.el_residual_sup, c.el_tol);
  cert.le("energy_sup", s.energy_sup, c.energy_tol);
  cert.gt("j_value", s.j_value, 0.0);
  cert.le("j_formula_gap", std::abs(s.j_value - s.j_positive), 1e-8 * (1.0 + std::abs(s.j_value)));
  cert.truth("tails_minus_to_plus", s.u.left == Tail::minus && s.u.right == Tail::plus);
  for (const auto* f : {&s.left_fit, &s.right_fit}) {
    const std::string side = f == &s.left_fit ? "left" : "right";
    cert.truth(side + "_tail_fitted", f->fitted);
    cert.le(side + "_lambda_rel_error", std::abs(f->lambda_hat - m.spatial.lambda) / m.spatial.lambda, c.tail_tol);
    cert.le(side + "_omega_rel_error", std::abs(f->omega_hat - m.spatial.omega) / m.spatial.omega, c.tail_tol);
  }
  cert.values = {{"j_value", s.j_value},
                 {"j_positive", s.j_positive},
                 {"center", s.center},
                 {"el_residual_sup", s.el_residual_sup},
                 {"energy_sup", s.energy_sup},
                 {"lambda_model", m.spatial.lambda},
                 {"omega_model", m.spatial.omega},
                 {"left_fit", {{"lambda_hat", s.left_fit.lambda_hat}, {"omega_hat", s.left_fit.omega_hat},
                               {"window", {s.left_fit.window_begin, s.left_fit.window_end}}}},
                 {"right_fit", {{"lambda_hat", s.right_fit.lambda_hat}, {"omega_hat", s.right_fit.omega_hat},
                                {"window", {s.right_fit.window_begin, s.right_fit.window_end}}}},
                 {"grid", grid_json(s.u.grid)}};
  return cert;
}

inline Vec2 frame_point(const ModelParams& m, Tail t, double r, double a) {
  const Vec2 y = m.spatial.P_inv * Vec2(r * std::cos(a), r * std::sin(a));
  return {m.u_eq(t) + y(0), m.v_eq(t) + y(1)};
}

struct KappaRun {
  Certificate cert;
  EnergySignMap spacing_map;
};

inline KappaRun kappa_certificate(const Context& ctx, const FrontSolution& f) {
  const auto& m = ctx.m;
  const auto& c = ctx.cfg;
  const double pi = std::numbers::pi, om = m.spatial.omega;
  KappaRun run;
  auto& cert = run.cert;
  const FrontSolution rev = f.reversed();
  for (const auto* ff : {&f, &rev}) {
    const std::string side = ff == &f ? "plus" : "minus";
    const double z = tail_point_for_radius(m, *ff, c.radius);
    const auto k1 = estimate_kappa(m, *ff, z, c.n_tilde);
    const auto k2 = estimate_kappa(m, *ff, z, c.n_tilde + 1);
    cert.le("kappa_" + side + "_winding_agreement", std::abs(k1.kappa - k2.kappa), 1e-4);
    cert.values["kappa_" + side] = k1.kappa;
    cert.values["kappa_" + side + "_next"] = k2.kappa;
    cert.values["z_" + side] = z;
    cert.values["T0_" + side] = k1.T0;
    cert.values["radius_" + side] = k1.radius;
  }
  // Zero spacing on the front's own tail point.
  const double zp = cert.values["z_plus"].get<double>();
  const Vec2 p(sample(f.u, zp), sample(f.v, zp));
  run.spacing_map = energy_sign_map(m, Tail::plus, p, p, 4.0, 4.0 + 3.0 * pi / om, 49);
  const auto& zs = run.spacing_map.zeros;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < zs.size(); ++k) worst = std::max(worst, std::abs((zs[k + 1].T - zs[k].T) * om / pi - 1.0));
  cert.ge("zero_count", static_cast<double>(zs.size()), 3.0);
  cert.le("zero_spacing_rel_error", worst, 0.01);
  // Sign law over the front point and seeded random endpoint pairs.
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> ang(-pi, pi), rad(0.01, 0.025);
  std::vector<std::pair<Vec2, Vec2>> ends{{p, p}};
  for (int k = 0; k < 4; ++k) {
    const double r1 = rad(rng), a1 = ang(rng), r2 = rad(rng), a2 = ang(rng);
    ends.emplace_back(frame_point(m, Tail::plus, r1, a1), frame_point(m, Tail::plus, r2, a2));
  }
  std::vector<PhaseObservation> obs;
  std::vector<EnergySignMap> maps;
  for (const auto& [a, b] : ends) {
    maps.push_back(energy_sign_map(m, Tail::plus, a, b, 4.0, 4.0 + 2.0 * pi / om, 33));
    for (const auto& zz : maps.back().zeros) obs.push_back({a, b, zz});
  }
  const auto fit = fit_phase(m, Tail::plus, obs);
  std::size_t used = 0, ok = 0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    std::size_t n = 0;
    const double fr = sign_law_fraction(m, Tail::plus, ends[k].first, ends[k].second, maps[k].samples, fit.phi, 0.5, &n);
    used += n;
    ok += static_cast<std::size_t>(std::lround(fr * static_cast<double>(n)));
  }
  const double frac = used ? static_cast<double>(ok) / static_cast<double>(used) : 0.0;
  cert.ge("sign_law_samples", static_cast<double>(used), 50.0);
  cert.ge("sign_law_fraction", frac, 0.98);
  cert.values["phase_constant"] = fit.phi;
  cert.values["phase_spread"] = fit.spread;
  cert.values["sign_law_fraction"] = frac;
  cert.values["n_tilde"] = c.n_tilde;
  return run;
}

inline BumpSpec default_spec(const Context& ctx, const json& kappa) {
  const double om = ctx.m.spatial.omega;
  BumpSpec s = BumpSpec::make(ctx.cfg.build_n, kappa.at("kappa_plus").get<double>(),
                              kappa.at("kappa_minus").get<double>(),
                              ctx.cfg.z > 0 ? ctx.cfg.z : kappa.at("z_plus").get<double>(),
                              ctx.cfg.nu > 0 ? ctx.cfg.nu : 0.3 * std::numbers::pi / om);
  s.K = ctx.cfg.K;
  s.rbar = ctx.cfg.rbar;
  return s;
}

inline Certificate multibump_certificate(const Context& ctx, const MultiBumpSolution& s) {
  const auto& c = ctx.cfg;
  Certificate cert;
  cert.le("el_residual_sup", s.el_residual_sup, c.el_tol);
  cert.le("energy_sup", s.energy_sup, c.energy_tol);
  for (std::size_t k = 0; k < s.window_distance.size(); ++k)
    cert.le("window_distance_" + std::to_string(k), s.window_distance[k], c.sigma);
  for (std::size_t k = 0; k < s.spacing_error.size(); ++k)
    cert.le("spacing_error_" + std::to_string(k), s.spacing_error[k], c.sigma);
  for (std::size_t k = 0; k < s.gap_radius.size(); ++k)
    cert.le("gap_radius_" + std::to_string(k), s.gap_radius[k], s.spec.K * s.spec.rbar);
  cert.truth("parity_tail_class", s.u.left == Tail::minus && s.u.right == s.spec.right_tail());
  int nmin = std::numeric_limits<int>::max();
  for (int n : s.spec.n) nmin = std::min(nmin, n);
  if (!s.spec.n.empty()) cert.ge("min_winding", nmin, c.min_winding);
  double xmax = 0.0;
  for (double x : s.spec.x) xmax = std::max(xmax, std::abs(x));
  cert.le("offset_bound", xmax, s.spec.nu);
  cert.values = {{"j_value", s.j_value},
                 {"el_residual_sup", s.el_residual_sup},
                 {"energy_sup", s.energy_sup},
                 {"centers", s.centers},
                 {"spacings", s.spacings},
                 {"spacing_error", s.spacing_error},
                 {"window_distance", s.window_distance},
                 {"gap_radius", s.gap_radius},
                 {"homoclinic", s.u.right == Tail::minus},
                 {"spec", spec_json(s.spec)},
                 {"grid", grid_json(s.u.grid)}};
  return cert;
}

inline Certificate mpass_certificate(const Context& ctx, const MountainPassResult& r, double nu) {
  const auto& c = ctx.cfg;
  Certificate cert;
  cert.truth("interior_max", r.interior_max);
  cert.gt("margin", r.margin, 0.0);
  cert.lt("second_difference", r.second_difference, 0.0);
  cert.gt("j_excess", r.j_excess, 0.0);
  cert.le("offset_bound", std::abs(r.x_sharp), nu);
  cert.le("el_residual_sup", r.solution.el_residual_sup, c.el_tol);
  cert.le("energy_sup", r.solution.energy_sup, c.energy_tol);
  cert.values = {{"n", c.mpass_n},
                 {"gap_route", r.gap_route},
                 {"x_sharp", r.x_sharp},
                 {"X_sharp", r.X_sharp},
                 {"j_sharp", r.j_sharp},
                 {"j_left", r.j_left},
                 {"j_right", r.j_right},
                 {"margin", r.margin},
                 {"second_difference", r.second_difference},
                 {"j_stable", r.j_stable},
                 {"X_stable", r.X_stable},
                 {"j_excess", r.j_excess},
                 {"el_residual_sup", r.solution.el_residual_sup},
                 {"energy_sup", r.solution.energy_sup},
                 {"nu", nu},
                 {"grid", grid_json(r.solution.u.grid)}};
  return cert;
}

inline json cplx_list(const std::vector<cplx>& z) {
  json a = json::array();
  for (const auto& x : z) a.push_back({x.real(), x.imag()});
  return a;
}

inline Certificate spectrum_certificate(const Context& ctx, const std::string& wave, const SpectrumReport& r) {
  const auto& c = ctx.cfg;
  Certificate cert;
  double worst = 0.0;
  for (double x : r.residuals) worst = std::max(worst, x);
  cert.le("eigen_residual", worst, 1e-6);
  cert.le("zero_mode_error", r.zero_mode_error, c.zero_tol);
  cert.ge("zero_mode_correlation", r.zero_mode_correlation, c.correlation);
  if (wave == "mpass")
    cert.gt("zeta_max", r.zeta_max.value_or(0.0), 0.0);
  else
    cert.truth("no_unstable_eigenvalue", r.stable);
  cert.values = {{"wave", wave},
                 {"method", r.method},
                 {"iterations", r.iterations},
                 {"eigenvalues", cplx_list(r.rightmost_eigenvalues)},
                 {"residuals", r.residuals},
                 {"zero_cluster", r.zero_cluster},
                 {"zero_mode_error", r.zero_mode_error},
                 {"zero_mode_correlation", r.zero_mode_correlation},
                 {"spectral_gap", r.spectral_gap},
                 {"essential_spectrum_bound", r.essential_spectrum_bound},
                 {"zeta_max", r.zeta_max ? json(*r.zeta_max) : json(nullptr)},
                 {"stable", r.stable}};
  return cert;
}

inline SpectrumOptions spectrum_options(const RunConfig& c) {
  SpectrumOptions o;
  o.count = c.count;
  o.zero_tol = c.zero_tol;
  return o;
}

inline EvolveOptions evolve_options(const RunConfig& c) {
  EvolveOptions o;
  o.dt = c.dt;
  o.sample_every = c.sample_every;
  o.seed = c.seed;
  return o;
}

// Distance-trend checks shared by the evolve command and verify.
inline void stability_trend_checks(Certificate& cert, const std::vector<double>& t, const std::vector<double>& dist,
                                   double rho, double T, double transient) {
  const double t0 = transient * T;
  bool mono = true;
  for (std::size_t k = 1; k < dist.size(); ++k) {
    if (t[k - 1] < t0) continue;
    if (dist[k] > dist[k - 1] * (1.0 + 1e-3) + 1e-12) mono = false;
  }
  cert.truth("monotone_after_transient", mono);
  cert.le("final_distance", dist.empty() ? INFINITY : dist.back(), 0.1 * rho + 1e-9);
}

inline void escape_checks(Certificate& cert, const std::vector<double>& rhos, const std::vector<double>& times,
                          double zeta) {
  bool all = times.size() == rhos.size();
  for (double t : times) all = all && std::isfinite(t);
  cert.truth("all_escaped", all);
  double worst = all ? 0.0 : INFINITY;
  const double pred = std::log(10.0) / zeta;
  for (std::size_t k = 0; all && k + 1 < times.size(); ++k) {
    if (std::abs(rhos[k + 1] * 10.0 / rhos[k] - 1.0) > 1e-9) {
      worst = INFINITY;
      break;
    }
    worst = std::max(worst, std::abs((times[k + 1] - times[k]) - pred) / pred);
  }
  cert.le("escape_difference_rel_error", worst, 0.15);
}

// ------------------------------------------------------------ commands

inline void record(Manifest& man, const std::vector<std::string>& names, const std::string& role) {
  for (const auto& n : names) man.add(n, role);
}

inline int finish(const Context& ctx, Manifest& man, const std::string& command, const std::string& file,
                  const Certificate& cert) {
  write_json(ctx.dir / file, cert.to_json(command, ctx.m));
  man.add(file, "certificate");
  man.save();
  ctx.out << command << ": " << (cert.passed() ? "all certificates pass" : "certificate failures") << " (" << file
          << ")\n";
  for (const auto& f : cert.failures()) ctx.err << "  FAIL " << f << "\n";
  return cert.passed() ? kExitOk : kExitCertificate;
}

inline int cmd_params(const Context& ctx, Manifest& man) {
  Certificate cert;
  json rep = params_report(ctx.m);
  if (ctx.cfg.sweep > 0) rep["gate_sweep"] = gate_sweep(ctx.cfg.sweep, cert);
  cert.values = rep;
  write_json(ctx.dir / "params.json", rep);
  man.add("params.json", "params");
  ctx.out << rep.dump(2) << "\n";
  return finish(ctx, man, "params", "params_cert.json", cert);
}

inline int cmd_front(const Context& ctx, Manifest& man) {
  const Grid g = Grid::symmetric(ctx.cfg.half_width, ctx.cfg.h);
  const auto s = solve_front(ctx.m, g, Tail::minus, Tail::plus);
  record(man, write_wave(ctx.dir, "front", ctx.m, s.u, s.v), "field");
  Certificate cert = front_certificate(ctx, s);
  cert.values["polished"] = s.polished;
  cert.values["status"] = s.status;
  cert.truth("polished", s.polished);
  return finish(ctx, man, "front", "front_cert.json", cert);
}

inline int cmd_kappa(const Context& ctx, Manifest& man) {
  const auto f = load_front(ctx);
  auto run = kappa_certificate(ctx, f);
  std::vector<double> T, E;
  for (const auto& s : run.spacing_map.samples) {
    T.push_back(s.T);
    E.push_back(s.E);
  }
  write_text(ctx.dir / "energy_map.csv", csv_text({"T", "E"}, {T, E}));
  man.add("energy_map.csv", "series");
  man.seed("kappa_sign_law", ctx.cfg.seed);
  return finish(ctx, man, "kappa", "kappa.json", run.cert);
}

inline int cmd_build(const Context& ctx, Manifest& man) {
  const auto f = load_front(ctx);
  const json kap = load_kappa(ctx);
  BumpSpec s = default_spec(ctx, kap);
  if (!ctx.cfg.spec.empty()) s = spec_from_json(read_json(ctx.cfg.spec), s);
  OuterOptions opt;
  opt.h = ctx.cfg.h;
  const auto sol = outer_minimize(ctx.m, f, s, opt);
  record(man, write_wave(ctx.dir, "multibump", ctx.m, sol.u, sol.v), "field");
  write_json(ctx.dir / "bumpspec.json", spec_json(sol.spec));
  man.add("bumpspec.json", "input");
  Certificate cert = multibump_certificate(ctx, sol);
  cert.truth("polished", sol.polished);
  cert.values["status"] = sol.status;
  cert.values["outer_iterations"] = sol.outer_iterations;
  cert.values["j_history"] = sol.j_history;
  return finish(ctx, man, "build", "multibump_cert.json", cert);
}

inline int cmd_mpass(const Context& ctx, Manifest& man) {
  const auto f = load_front(ctx);
  const json kap = load_kappa(ctx);
  MountainPassOptions opt;
  opt.h = ctx.cfg.h;
  opt.samples = ctx.cfg.samples;
  opt.z = kap.at("z_plus").get<double>();
  const double nu = ctx.cfg.nu > 0 ? ctx.cfg.nu : 0.3 * std::numbers::pi / ctx.m.spatial.omega;
  opt.nu = nu;
  const auto r = two_bump_mountain_pass(ctx.m, f, ctx.cfg.mpass_n, kap.at("kappa_plus").get<double>(), opt);
  record(man, write_wave(ctx.dir, "mpass", ctx.m, r.solution.u, r.solution.v), "field");
  std::vector<double> gap(r.xs.size(), NAN);
  for (std::size_t k = 0; k < r.dj_gap.size() && k < gap.size(); ++k) gap[k] = r.dj_gap[k];
  write_text(ctx.dir / "mpass_family.csv", csv_text({"x", "J", "dJ", "dJ_gap"}, {r.xs, r.jv, r.dj, gap}));
  man.add("mpass_family.csv", "series");
  return finish(ctx, man, "mpass", "mpass_cert.json", mpass_certificate(ctx, r, nu));
}

inline int cmd_spectrum(const Context& ctx, Manifest& man) {
  const std::string wave = ctx.cfg.spectrum_wave;
  require_file(ctx, wave + ".csv", wave_producer(wave));
  const auto w = read_wave(ctx.dir, wave, ctx.m);
  const auto r = rightmost_spectrum(ctx.m, w.u, w.v, spectrum_options(ctx.cfg));
  man.seed("spectrum", spectrum_options(ctx.cfg).seed);
  if (ctx.cfg.eigvec && r.unstable_mode) {
    const auto x = w.u.grid.nodes();
    const std::string name = "spectrum_" + wave + "_mode.csv";
    write_text(ctx.dir / name, csv_text({"x", "phi", "psi"}, {x, r.unstable_mode->phi, r.unstable_mode->psi}));
    man.add(name, "series");
  }
  return finish(ctx, man, "spectrum", "spectrum_" + wave + ".json", spectrum_certificate(ctx, wave, r));
}

inline int cmd_evolve(const Context& ctx, Manifest& man) {
  const auto& c = ctx.cfg;
  require_file(ctx, c.evolve_wave + ".csv", wave_producer(c.evolve_wave));
  const auto w = read_wave(ctx.dir, c.evolve_wave, ctx.m);
  if (c.mode == "stability") {
    const auto opt = evolve_options(c);
    const auto r = run_stability(ctx.m, w.u, w.v, c.rho, c.T, opt);
    std::vector<double> t, E, J, dist, y;
    for (const auto& s : r.samples) {
      t.push_back(s.t);
      E.push_back(s.E);
      J.push_back(s.J);
      dist.push_back(s.distance);
      y.push_back(s.shift);
    }
    write_text(ctx.dir / "evolve_stability.csv", csv_text({"t", "E", "J", "distance", "y_opt"}, {t, E, J, dist, y}));
    man.add("evolve_stability.csv", "series");
    record(man,
           write_wave(ctx.dir, "evolve_final", ctx.m, Field(w.u.grid, r.u_final, w.u.left, w.u.right),
                      Field(w.v.grid, r.v_final, w.v.left, w.v.right)),
           "field");
    man.seed("evolve", c.seed);
    Certificate cert;
    cert.le("lyapunov_flagged_steps", static_cast<double>(r.flagged_steps), 0.0);
    cert.le("j_above_lyapunov", r.max_j_excess, 1e-12);
    cert.truth("not_escaped", !r.escaped);
    cert.truth("crossings_preserved", r.crossings_preserved);
    stability_trend_checks(cert, t, dist, c.rho, c.T, opt.transient);
    cert.values = {{"wave", c.evolve_wave},     {"rho", c.rho},
                   {"T", c.T},                  {"dt", c.dt},
                   {"seed", c.seed},            {"delta_hat", r.delta_hat},
                   {"steps", r.steps},          {"flagged_steps", r.flagged_steps},
                   {"worst_decay_margin", r.worst.dE_dt - r.worst.rhs - r.worst.tol},
                   {"max_j_excess", r.max_j_excess},
                   {"initial_distance", r.initial_distance},
                   {"final_distance", r.final_distance},
                   {"final_shift", y.empty() ? 0.0 : y.back()},
                   {"front_shifts", r.front_shifts},
                   {"transient", opt.transient}};
    return finish(ctx, man, "evolve", "evolve_stability.json", cert);
  }
  // Escape sweep along the computed unstable mode.
  const auto sp = rightmost_spectrum(ctx.m, w.u, w.v, spectrum_options(c));
  Certificate cert;
  cert.gt("zeta_max", sp.zeta_max.value_or(0.0), 0.0);
  if (!sp.zeta_max || !sp.unstable_mode) return finish(ctx, man, "evolve", "evolve_instability.json", cert);
  InstabilityOptions o;
  o.evolve = evolve_options(c);
  o.eps0 = c.eps0;
  o.horizon = c.horizon;
  const PerturbationPair dir{sp.unstable_mode->phi, sp.unstable_mode->psi};
  const auto sw = escape_sweep(ctx.m, w.u, w.v, dir, c.rhos, *sp.zeta_max, c.sign, o);
  long flagged = 0;
  for (const auto& r : sw.runs) flagged += r.flagged_steps;
  cert.le("lyapunov_flagged_steps", static_cast<double>(flagged), 0.0);
  escape_checks(cert, sw.rhos, sw.times, *sp.zeta_max);
  write_text(ctx.dir / "evolve_instability.csv", csv_text({"rho", "t_escape"}, {sw.rhos, sw.times}));
  man.add("evolve_instability.csv", "series");
  cert.values = {{"wave", c.evolve_wave},  {"zeta_max", *sp.zeta_max}, {"sign", c.sign},
                 {"eps0", c.eps0},         {"rhos", sw.rhos},           {"escape_times", sw.times},
                 {"differences", sw.differences}, {"predicted", sw.predicted},
                 {"max_relative_error", sw.max_relative_error}};
  return finish(ctx, man, "evolve", "evolve_instability.json", cert);
}

// ------------------------------------------------------------ verify

struct Comparison {
  std::string file;
  bool stored_passed = false, recomputed_passed = false;
  std::vector<std::string> mismatches;
  std::vector<std::string> carried;  // checks taken from the stored certificate
};

// Every stored check must be reproduced: same verdict, value within 1e-9 relative.
inline void compare_checks(const json& stored, const json& fresh, Comparison& cmp, const std::vector<std::string>& carry = {}) {
  std::map<std::string, json> f;
  for (const auto& c : fresh.at("checks")) f[c.at("name").get<std::string>()] = c;
  for (const auto& c : stored.at("checks")) {
    const auto name = c.at("name").get<std::string>();
    if (std::find(carry.begin(), carry.end(), name) != carry.end()) {
      cmp.carried.push_back(name);
      if (!c.at("passed").get<bool>()) cmp.recomputed_passed = false;
      continue;
    }
    auto it = f.find(name);
    if (it == f.end()) {
      cmp.mismatches.push_back(name + ": not recomputed");
      continue;
    }
    if (c.at("passed") != it->second.at("passed")) cmp.mismatches.push_back(name + ": verdict differs");
    if (c.contains("value") && c.at("value").is_number() && it->second.at("value").is_number()) {
      const double a = c.at("value").get<double>(), b = it->second.at("value").get<double>();
      if (std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}))
        cmp.mismatches.push_back(name + ": value " + fmt17(a) + " vs " + fmt17(b));
    }
  }
}

inline int cmd_verify(const Context& ctx, Manifest& man) {
  if (!fs::exists(ctx.dir / "manifest.json")) throw PrerequisiteError("no manifest in " + ctx.dir.string());
  json report = {{"stale", man.stale()}, {"certificates", json::array()}};
  bool ok = report["stale"].empty();
  for (const auto& [name, rec] : man.data()["files"].items()) {
    if (rec.at("role") != "certificate") continue;
    const json stored = read_json(ctx.dir / name);
    const std::string cmd = stored.at("command").get<std::string>();
    Comparison cmp{name, stored.at("passed").get<bool>(), true, {}, {}};
    Certificate fresh;
    std::vector<std::string> carry;
    if (stored.at("params_hash") != params_hash(ctx.m)) cmp.mismatches.push_back("params_hash differs from config");
    if (cmd == "params") {
      if (read_json(ctx.dir / "params.json") != [&] {
            json r = params_report(ctx.m);
            if (stored.at("values").contains("gate_sweep"))
              r["gate_sweep"] = gate_sweep(stored["values"]["gate_sweep"]["n"].get<int>(), fresh);
            return r;
          }())
        cmp.mismatches.push_back("params report differs");
    } else if (cmd == "front") {
      fresh = front_certificate(ctx, load_front(ctx));
      carry = {"polished"};
    } else if (cmd == "kappa") {
      fresh = kappa_certificate(ctx, load_front(ctx)).cert;
    } else if (cmd == "build") {
      MultiBumpSolution s;
      auto w = read_wave(ctx.dir, "multibump", ctx.m);
      s.u = std::move(w.u);
      s.v = std::move(w.v);
      s.spec = spec_from_json(read_json(ctx.dir / "bumpspec.json"), BumpSpec{});
      certify_multibump(ctx.m, load_front(ctx), s);
      fresh = multibump_certificate(ctx, s);
      carry = {"polished"};
    } else if (cmd == "mpass") {
      const auto w = read_wave(ctx.dir, "mpass", ctx.m);
      const auto rep = action_report(ctx.m, w.u, w.v);
      fresh.le("el_residual_sup", rep.el_residual_sup, ctx.cfg.el_tol);
      fresh.le("energy_sup", rep.energy_sup, ctx.cfg.energy_tol);
      // Family quantities come from continuation solves; re-derived from the stored values.
      const auto& v = stored.at("values");
      // On the direct route the margin is a plain difference of stored actions.
      const double margin = v.at("gap_route").get<bool>()
                                ? v.at("margin").get<double>()
                                : v.at("j_sharp").get<double>() -
                                      std::max(v.at("j_left").get<double>(), v.at("j_right").get<double>());
      fresh.gt("margin", margin, 0.0);
      fresh.le("offset_bound", std::abs(v.at("x_sharp").get<double>()), v.at("nu").get<double>());
      carry = {"interior_max", "second_difference", "j_excess"};
    } else if (cmd == "spectrum") {
      const std::string wave = stored.at("values").at("wave").get<std::string>();
      const auto w = read_wave(ctx.dir, wave, ctx.m);
      fresh = spectrum_certificate(ctx, wave, rightmost_spectrum(ctx.m, w.u, w.v, spectrum_options(ctx.cfg)));
    } else if (cmd == "evolve" && name == "evolve_stability.json") {
      const auto& v = stored.at("values");
      const std::string wave = v.at("wave").get<std::string>();
      const auto ref = read_wave(ctx.dir, wave, ctx.m);
      const auto fin = read_wave(ctx.dir, "evolve_final", ctx.m);
      const CsvTable ts = parse_csv(read_text(ctx.dir / "evolve_stability.csv"));
      auto dist = ts.col("distance");
      const auto sd = shift_distance(fin.u, fin.v, ref.u, ref.v, EvolveOptions{}.max_shift, v.at("final_shift").get<double>());
      if (!dist.empty()) dist.back() = sd.distance;
      stability_trend_checks(fresh, ts.col("t"), dist, v.at("rho").get<double>(), v.at("T").get<double>(),
                             v.at("transient").get<double>());
      const double level = 0.5 * ctx.m.u_plus;
      fresh.truth("crossings_preserved", count_crossings(fin.u.values, level) == count_crossings(ref.u.values, level));
      carry = {"lyapunov_flagged_steps", "j_above_lyapunov", "not_escaped"};
    } else if (cmd == "evolve") {
      const auto& v = stored.at("values");
      const CsvTable ts = parse_csv(read_text(ctx.dir / "evolve_instability.csv"));
      fresh.gt("zeta_max", v.at("zeta_max").get<double>(), 0.0);
      escape_checks(fresh, ts.col("rho"), ts.col("t_escape"), v.at("zeta_max").get<double>());
      carry = {"lyapunov_flagged_steps"};
    }
    fresh.values = json::object();
    if (cmd != "params") compare_checks(stored, fresh.to_json(cmd, ctx.m), cmp, carry);
    cmp.recomputed_passed = cmp.recomputed_passed && fresh.passed();
    const bool good = cmp.stored_passed && cmp.recomputed_passed && cmp.mismatches.empty();
    ok = ok && good;
    report["certificates"].push_back({{"file", cmp.file},
                                      {"stored_passed", cmp.stored_passed},
                                      {"recomputed_passed", cmp.recomputed_passed},
                                      {"mismatches", cmp.mismatches},
                                      {"carried", cmp.carried}});
    ctx.out << "verify " << name << ": " << (good ? "ok" : "FAILED") << "\n";
    for (const auto& m : cmp.mismatches) ctx.err << "  mismatch " << m << "\n";
  }
  for (const auto& s : report["stale"]) ctx.err << "  stale " << s.get<std::string>() << "\n";
  report["passed"] = ok;
  write_json(ctx.dir / "verify.json", report);
  return ok ? kExitOk : kExitCertificate;
}

inline const char* certificate_file(const std::string& cmd, const RunConfig& c) {
  static std::string s;
  if (cmd == "front") return "front_cert.json";
  if (cmd == "kappa") return "kappa.json";
  if (cmd == "build") return "multibump_cert.json";
  if (cmd == "mpass") return "mpass_cert.json";
  if (cmd == "spectrum") return (s = "spectrum_" + c.spectrum_wave + ".json").c_str();
  if (cmd == "evolve") return c.mode == "stability" ? "evolve_stability.json" : "evolve_instability.json";
  return "params_cert.json";
}

// Runs one command in its run directory. Solver failures become a failed
// certificate; bad input and missing prerequisites are usage errors.
inline int run_command(const std::string& cmd, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ModelParams m;
  try {
    m = derive_params(cfg.beta, cfg.d, cfg.tau);
  } catch (const std::exception& e) {
    err << "invalid parameters: " << e.what() << "\n";
    return kExitUsage;
  }
  Context ctx{cfg, m, run_directory(cfg), out, err};
  try {
    fs::create_directories(ctx.dir);
    Manifest man(ctx.dir);
    if (cmd != "verify") {
      write_text(ctx.dir / "config.ini", to_ini(cfg));
      man.add("config.ini", "config");
      if (cmd != "params") {
        write_json(ctx.dir / "params.json", params_report(m));
        man.add("params.json", "params");
      }
      man.save();
    }
    try {
      if (cmd == "params") return cmd_params(ctx, man);
      if (cmd == "front") return cmd_front(ctx, man);
      if (cmd == "kappa") return cmd_kappa(ctx, man);
      if (cmd == "build") return cmd_build(ctx, man);
      if (cmd == "mpass") return cmd_mpass(ctx, man);
      if (cmd == "spectrum") return cmd_spectrum(ctx, man);
      if (cmd == "evolve") return cmd_evolve(ctx, man);
      if (cmd == "verify") return cmd_verify(ctx, man);
    } catch (const PrerequisiteError&) {
      throw;
    } catch (const IoError&) {
      throw;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      Certificate cert;
      cert.error(e.what());
      return finish(ctx, man, cmd, certificate_file(cmd, cfg), cert);
    }
    err << "unknown command " << cmd << "\n";
    return kExitUsage;
  } catch (const PrerequisiteError& e) {
    err << "missing prerequisite: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << cmd << ": " << e.what() << "\n";
  }
  return kExitUsage;
}

inline int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  Parser p(cfg);
  try {
    p.app().parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = p.app().exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  return run_command(p.selected(), cfg, out, err);
}

}  // namespace fhn::cli
