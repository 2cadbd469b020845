// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace sss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `sss` tool. Subcommands: train, prune, count,
/// verify-optim, report. Failures print one `error: ...` line to `err` and
/// return kExitUsage (bad input) or kExitNumerical (NaN, non-convergence,
/// failed optimizer checks).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sss::cli
