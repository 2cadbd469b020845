// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sss::cli::run(argc, argv, std::cout, std::cerr); }
