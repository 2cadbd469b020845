// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/net/spec.hpp"
#include "sss/nn/layers.hpp"
#include "sss/scaling/scaling.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sss::net {

/// One top-level element of a network: a plain layer sequence, or a residual
/// block computing shortcut(x) + lambda * branch(x).
struct Unit {
  enum class Kind { plain, residual };

  std::string name;
  std::string stage;
  Index block = 0;  // 1-based block index within a residual stage
  Kind kind = Kind::plain;
  std::vector<nn::Layer> layers;       // plain path, or the residual branch
  std::optional<nn::Conv2d> shortcut;  // projection; identity when absent
  bool has_branch = true;              // false: projection-only block
  std::optional<Index> block_factor;   // index into the scaling vector

  std::optional<Tensor> branch_out;  // cached F(x) for the factor gradient
};

struct NetworkGradients {
  std::vector<Tensor> params;  // aligned with Network::parameters()
  Eigen::VectorXd lambda;      // aligned with the scaling vector
};

enum class Materialize { weights, shapes_only };

/// A runnable (or, when built shapes-only, countable) network with its
/// scaling factors.
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, std::vector<Unit> units, scaling::ScalingVector scaling, bool materialized);

  const NetworkSpec& spec() const noexcept { return spec_; }
  const ImageShape& input() const noexcept { return spec_.input; }
  std::vector<Unit>& units() noexcept { return units_; }
  const std::vector<Unit>& units() const noexcept { return units_; }
  scaling::ScalingVector& scaling() noexcept { return scaling_; }
  const scaling::ScalingVector& scaling() const noexcept { return scaling_; }
  Eigen::VectorXd& lambda() noexcept { return scaling_.values(); }
  const Eigen::VectorXd& lambda() const noexcept { return scaling_.values(); }
  bool materialized() const noexcept { return materialized_; }

  /// Logits for an NCHW batch. Caches activations for backward.
  Tensor forward(const Tensor& x, nn::Mode mode);

  /// Reverse pass from d(loss)/d(logits). Requires the immediately preceding
  /// forward to have run with the current scaling vector.
  NetworkGradients backward(const Tensor& grad_logits);

  /// Trainable tensors in a fixed order (unit order; branch layers, then the
  /// projection shortcut). Scaling factors are not included.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;

  /// BatchNorm running statistics, in parameter order.
  std::vector<Tensor*> buffers();
  std::vector<const Tensor*> buffers() const;
  std::vector<std::string> buffer_names() const;

  void clear_caches();

 private:
  NetworkSpec spec_;
  std::vector<Unit> units_;
  scaling::ScalingVector scaling_;
  bool materialized_ = false;
  std::optional<Eigen::VectorXd> forward_lambda_;
};

/// Scaling-vector layout of a spec, in stage order. Within a residual block
/// the group site precedes the block site.
std::vector<scaling::StructureBinding> scaling_layout(const NetworkSpec& spec);

/// Builds the network described by `spec` (optionally at another input size)
/// with all scaling factors at 1. Weights are He-normal initialized from
/// `seed`; BN starts at gamma 1, beta 0.
Network instantiate(const NetworkSpec& spec, std::optional<ImageShape> input = {},
                    Materialize materialize = Materialize::weights, std::uint64_t seed = 0);

/// Reverse pass returning only the scaling-factor gradient; the weight
/// gradients of that pass are discarded.
Eigen::VectorXd gather_lambda_grads(Network& net, const Tensor& grad_logits);

/// Site names, in scaling-vector order, as they appear in bindings.
std::string channel_site(const std::string& stage);
std::string block_site(const std::string& stage, Index block);
std::string group_site(const std::string& stage, Index block);

}  // namespace sss::net
