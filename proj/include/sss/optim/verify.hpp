// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sss::optim {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Classic accelerated iteration vs the momentum form with
/// mu_{t-1} = (t-2)/(t+1), on a seeded 20-D quadratic plus L1 term.
/// `value` is the largest max-abs iterate difference over `iterations`.
CheckResult check_classic_vs_momentum(std::uint64_t seed = 7, int iterations = 100, double tol = 1e-10);

/// Momentum form with fixed mu vs the lookahead form's recovered iterate.
CheckResult check_momentum_vs_lookahead(std::uint64_t seed = 7, int iterations = 100, double mu = 0.9,
                                        double tol = 1e-10);

/// apg_nag_step with eta = 1/L on a seeded 20x50 LASSO, compared against the
/// coordinate-descent reference objective. `value` is the final objective
/// excess; `detail` records the first iteration inside `tol`.
CheckResult check_lasso_agreement(std::uint64_t seed = 11, int max_iterations = 5000, double tol = 1e-6);

/// All three checks with their default arguments.
std::vector<CheckResult> verify_optim_suite();

}  // namespace sss::optim
