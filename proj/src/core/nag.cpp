// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/optim/nag.hpp"

#include "sss/core/errors.hpp"

namespace sss::optim {

NagWeightState NagWeightState::zeros_like(std::span<Tensor* const> params, double learning_rate,
                                          double momentum, double weight_decay) {
  NagWeightState s;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.velocity.reserve(params.size());
  for (const Tensor* p : params) s.velocity.emplace_back(p->shape(), 0.0);
  return s;
}

void nag_weight_step(NagWeightState& state, std::span<Tensor* const> params,
                     std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.velocity.size()) {
    throw ValidationError("nag_weight_step: " + std::to_string(params.size()) + " params, " +
                          std::to_string(grads.size()) + " grads, " +
                          std::to_string(state.velocity.size()) + " velocities");
  }
  if (!(state.learning_rate > 0.0) || state.momentum < 0.0 || state.momentum >= 1.0 ||
      state.weight_decay < 0.0) {
    throw ValidationError("nag_weight_step: need lr > 0, 0 <= momentum < 1, weight_decay >= 0");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i];
    require_same_shape(w, grads[i], "nag_weight_step parameter " + std::to_string(i));
    require_same_shape(w, state.velocity[i], "nag_weight_step velocity " + std::to_string(i));
    const Eigen::VectorXd g = grads[i].values() + state.weight_decay * w.values();
    Eigen::VectorXd& v = state.velocity[i].values();
    v = state.momentum * v - state.learning_rate * g;
    w.values() += state.momentum * v - state.learning_rate * g;
  }
}

}  // namespace sss::optim
