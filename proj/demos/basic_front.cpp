// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0
//
// Solves the basic front at (beta, d, tau) = (0.1, 0.05, 1) and writes it as
// front.csv / front.json into the directory given on the command line (default ".").

#include "fhn/fronts.hpp"
#include "fhn/io.hpp"

#include <cstdio>

int main(int argc, char** argv) {
  try {
    const fhn::fs::path out = argc > 1 ? argv[1] : ".";
    const auto m = fhn::derive_params(0.1, 0.05, 1.0);
    const auto s = fhn::solve_front(m, fhn::Grid::symmetric(30.0, 0.01), fhn::Tail::minus, fhn::Tail::plus);
    fhn::write_wave(out, "front", m, s.u, s.v);
    std::printf("gamma %.12g  u+ %.12g  lambda %.6f  omega %.6f\n", m.gamma, m.u_plus, m.spatial.lambda,
                m.spatial.omega);
    std::printf("J %.12g  EL residual %.2e  sup|E| %.2e  center %.6f\n", s.j_value, s.el_residual_sup, s.energy_sup,
                s.center);
    std::printf("tail fit right: lambda %.6f omega %.6f\n", s.right_fit.lambda_hat, s.right_fit.omega_hat);
    std::printf("wrote %s\n", (out / "front.csv").c_str());
    return s.polished ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "basic_front: %s\n", e.what());
    return 2;
  }
}
