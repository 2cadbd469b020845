// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/net/counting.hpp"
#include "sss/net/network.hpp"

#include <string>
#include <vector>

namespace sss::net {

/// The architecture left after removing every structure whose factor is
/// exactly 0.0. Channel sites shrink their convolution, group sites shrink
/// the grouped convolution, and a block loses its branch when its block
/// factor or all of its group factors are zero. The result carries no
/// scaling sites.
///
/// A channel site losing every channel is refused with a ValidationError
/// naming the site unless `allow_empty` is set (then the width becomes 0,
/// which only the counters accept).
NetworkSpec prune_spec(const NetworkSpec& spec, const Eigen::VectorXd& lambda, bool allow_empty = false);

struct SiteReport {
  std::string site;
  scaling::Granularity granularity;
  Index survived = 0;
  Index total = 0;
  std::int64_t params_removed = 0;
  std::int64_t flops_removed = 0;
};

/// Survival and exact removal counts. Each site row is charged with what
/// removing that site's zero structures takes away once the sites before it
/// (in scaling-vector order) are already removed, so rows sum to the totals.
struct PruneReport {
  std::vector<SiteReport> sites;
  Counts before;
  Counts after;
  std::vector<NamedCounts> stages_before;
  std::vector<NamedCounts> stages_after;

  /// `site,granularity,survived,params_removed,flops_removed` rows, then one
  /// JSON summary line.
  std::string to_csv() const;
  std::string summary_json() const;
};

PruneReport prune_report(const NetworkSpec& spec, const Eigen::VectorXd& lambda, bool allow_empty = false);

struct PruneResult {
  Network network;
  PruneReport report;
};

/// Graph surgery: builds the pruned architecture and copies the surviving
/// weights, folding nonzero factors into BN affine parameters (or the
/// convolution when there is no BN) and into the last convolution of each
/// residual branch. In eval mode the result computes the same function as
/// `net` with its scaling vector set to `lambda`.
PruneResult prune(const Network& net, const Eigen::VectorXd& lambda);

/// Same architecture as `net` without scaling sites, with every factor
/// (zeros included) folded into the adjacent weights.
Network fold_scaling(const Network& net, const Eigen::VectorXd& lambda);

}  // namespace sss::net
