// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"

#include <span>
#include <vector>

namespace sss::optim {

/// Nesterov momentum state for the network weights.
struct NagWeightState {
  std::vector<Tensor> velocity;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  /// Zero velocity shaped like `params`.
  static NagWeightState zeros_like(std::span<Tensor* const> params, double learning_rate,
                                   double momentum, double weight_decay);
};

/// One Nesterov step in the lookahead-parameter form, in place:
///   g = grad + weight_decay * w
///   v = momentum * v - lr * g
///   w = w + momentum * v - lr * g
/// With momentum 0 this is plain SGD on the decayed gradient.
void nag_weight_step(NagWeightState& state, std::span<Tensor* const> params,
                     std::span<const Tensor> grads);

}  // namespace sss::optim
