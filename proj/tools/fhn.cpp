// Copyright fhn-waves contributors
// SPDX-License-Identifier: Apache-2.0

#include "fhn/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fhn::cli::main(argc, argv, std::cout, std::cerr); }
