// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/net/network.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sss::net {

/// Trainable scalars (BN affine included, running buffers and scaling
/// factors excluded) and inference multiply-adds. Only convolutions and
/// fully connected layers cost multiply-adds.
struct Counts {
  std::int64_t params = 0;
  std::int64_t flops = 0;

  Counts& operator+=(const Counts& o) {
    params += o.params;
    flops += o.flops;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct NamedCounts {
  std::string name;
  Counts counts;
};

struct CountBreakdown {
  Counts total;
  std::vector<NamedCounts> stages;  // stage order, classifier last
  std::vector<NamedCounts> units;   // unit names as in Network::units()
  /// Multiply-adds gated by each scaling site: the convolution of a channel
  /// site, the residual branch of a group or block site.
  std::map<std::string, std::int64_t> site_flops;
};

/// Exact integer counts from the network spec alone. Zero widths are allowed and
/// count as nothing, so specs describing fully emptied layers still count.
CountBreakdown count(const NetworkSpec& spec, std::optional<ImageShape> input = {});

std::int64_t count_params(const Network& net);
std::int64_t count_flops(const Network& net, std::optional<ImageShape> input = {});

/// Per-site penalty weights: base_gamma times the site's multiply-add share
/// normalized to mean 1 over all sites, then times any matching
/// penalty override (so an override of 0 exempts a site).
std::map<std::string, double> apply_flops_weighted_penalty(const NetworkSpec& spec, double base_gamma);

/// base_gamma times any matching penalty override, per site.
std::map<std::string, double> uniform_penalty(const NetworkSpec& spec, double base_gamma);

/// Expands per-site weights to one entry per scaling factor.
Eigen::VectorXd expand_penalty(const std::vector<scaling::StructureBinding>& bindings,
                               const std::map<std::string, double>& per_site);

}  // namespace sss::net
