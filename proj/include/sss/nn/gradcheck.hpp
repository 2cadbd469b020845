// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/nn/layers.hpp"

#include <functional>
#include <vector>

namespace sss::nn {

/// Central-difference derivative of a scalar function with respect to every
/// entry of `x`, step `epsilon`.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double epsilon);

/// Compares a layer's analytic backward pass against central differences of
/// the scalar probe <forward(x), R> for a fixed random R. Checks the input,
/// every parameter and, for ChannelScale, the scaling factors it reads.
///
/// Returns max |analytic - numeric| / max(1, |numeric|). The layer is taken by
/// value so running statistics of the caller's copy are left untouched.
double finite_diff_check(Layer layer, const Tensor& input, double epsilon, Mode mode = Mode::train,
                         std::vector<double> lambda = {});

}  // namespace sss::nn
