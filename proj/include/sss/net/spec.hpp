// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sss::net {

/// Input image geometry, channels first.
struct ImageShape {
  Index channels = 3;
  Index height = 224;
  Index width = 224;

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Parses "HxWxC" (e.g. "224x224x3").
ImageShape parse_image_shape(const std::string& hxwxc);
std::string format_image_shape(const ImageShape& s);

/// Convolution, optionally followed by batch norm and ReLU. A channel scaling
/// site on this stage sits after the BN (or directly after the convolution
/// when there is no BN) and before the ReLU.
struct ConvStage {
  std::string name;
  Index out = 0;
  Index kernel = 3;
  Index stride = 1;
  Index pad = -1;  // -1: kernel / 2
  Index groups = 1;
  bool bn = true;
  bool relu = true;
  bool bias = false;
  std::optional<Index> in;  // checked against the inferred width when given

  Index padding() const { return pad < 0 ? kernel / 2 : pad; }
};

struct PoolStage {
  enum class Kind { max, avg };
  std::string name;
  Kind kind = Kind::max;
  Index kernel = 2;
  Index stride = 2;
  Index pad = 0;
  bool global = false;
};

/// Standalone BN + ReLU, closing a stack of pre-activation residual blocks.
struct BnReluStage {
  std::string name;
};

enum class BlockKind { basic, bottleneck };

/// A stack of pre-activation residual blocks. Block i (1-based) is named
/// "<name>.b<i>". Blocks whose shortcut changes shape carry a 1x1 projection.
///
/// `keep`, `block_width` and `block_groups` describe already-pruned
/// architectures: a dropped identity block disappears, a dropped projection
/// block keeps only its projection.
struct ResidualStage {
  std::string name;
  BlockKind block = BlockKind::basic;
  Index blocks = 1;
  Index width = 16;  // bottleneck inner width (all groups); basic: unused
  Index out = 16;
  Index stride = 1;
  Index groups = 1;  // cardinality of the bottleneck 3x3 convolution
  std::vector<bool> keep;
  std::vector<Index> block_width;
  std::vector<Index> block_groups;

  bool kept(Index i) const { return keep.empty() || keep[static_cast<std::size_t>(i)]; }
  Index width_of(Index i) const {
    return block_width.empty() ? width : block_width[static_cast<std::size_t>(i)];
  }
  Index groups_of(Index i) const {
    return block_groups.empty() ? groups : block_groups[static_cast<std::size_t>(i)];
  }
};

using Stage = std::variant<ConvStage, PoolStage, BnReluStage, ResidualStage>;

const std::string& stage_name(const Stage& s);

/// Head: optional global average pool (otherwise the features are flattened),
/// hidden fully connected layers with ReLU, then the class logits.
struct ClassifierSpec {
  bool global_pool = false;
  std::vector<Index> hidden;
  Index classes = 10;
  bool bias = true;
};

/// Which stages receive scaling factors. `all` selects every eligible stage;
/// otherwise `names` lists stage names.
struct SiteSelector {
  bool all = false;
  std::vector<std::string> names;

  bool selects(const std::string& stage) const;
  bool empty() const { return !all && names.empty(); }
};

struct ScalingSpec {
  SiteSelector channel;  // conv stages
  SiteSelector group;    // residual stages with grouped bottlenecks
  SiteSelector block;    // residual stages (identity-mapping blocks only)

  bool any() const { return !channel.empty() || !group.empty() || !block.empty(); }
};

/// Declarative network description; the in-memory form of an
/// `sss-spec-v1` file.
struct NetworkSpec {
  std::string name;
  ImageShape input;
  std::vector<Stage> stages;
  ClassifierSpec classifier;
  ScalingSpec scaling;
  /// Site name (or "prefix*") -> penalty multiplier. 0 disables thresholding.
  std::map<std::string, double> penalty_overrides;
};

inline constexpr const char* kSpecFormat = "sss-spec-v1";

NetworkSpec parse_spec(const std::string& text);
NetworkSpec load_spec(const std::string& path);
std::string write_spec(const NetworkSpec& spec);

/// Multiplier from `penalty_overrides` for a site, if one matches. Exact names
/// win over prefix patterns.
std::optional<double> penalty_override(const NetworkSpec& spec, const std::string& site);

}  // namespace sss::net
