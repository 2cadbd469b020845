// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sss::scaling {

/// The three prunable structure kinds a scaling factor can gate.
enum class Granularity { channel, group, block };

std::string to_string(Granularity g);
Granularity parse_granularity(const std::string& name);

/// Ties a contiguous slice [offset, offset + length) of the global scaling
/// vector to one site of a network.
struct StructureBinding {
  Granularity granularity = Granularity::channel;
  std::string site;
  Index offset = 0;
  Index length = 0;

  friend bool operator==(const StructureBinding&, const StructureBinding&) = default;
};

/// Throws ValidationError unless the bindings tile [0, total) exactly, in
/// order, with no gaps or overlap.
void validate_partition(const std::vector<StructureBinding>& bindings, Index total);

/// All scaling factors of a network plus the sites they gate.
class ScalingVector {
 public:
  ScalingVector() = default;

  /// All-ones vector sized to the bindings.
  explicit ScalingVector(std::vector<StructureBinding> bindings);

  Index size() const noexcept { return values_.size(); }
  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const std::vector<StructureBinding>& bindings() const noexcept { return bindings_; }

  const StructureBinding& binding(const std::string& site) const;
  auto slice(const StructureBinding& b) const { return values_.segment(b.offset, b.length); }
  auto slice(const StructureBinding& b) { return values_.segment(b.offset, b.length); }

  /// Number of entries that are not bit-exactly zero.
  Index nonzero_count() const;
  Index nonzero_count(Granularity g) const;
  Index count(Granularity g) const;

 private:
  Eigen::VectorXd values_;
  std::vector<StructureBinding> bindings_;
};

/// output[n, c, ...] = factors[c / group_size] * input[n, c, ...]
Tensor scale_channels(const Tensor& input, std::span<const double> factors, Index group_size = 1);

struct ScaleGradients {
  Tensor grad_input;
  Eigen::VectorXd grad_factors;
};

/// Reverse mode of scale_channels. grad_factors[k] sums input * grad_out over
/// every element the factor k multiplies.
ScaleGradients scale_channels_backward(const Tensor& input, std::span<const double> factors,
                                       const Tensor& grad_out, Index group_size = 1);

using Transform = std::function<Tensor(const Tensor&)>;

/// r_out = shortcut + lambda * branch_out.
Tensor residual_combine(const Tensor& shortcut, const Tensor& branch_out, double lambda);

/// r_in + lambda * F(r_in) for an identity-mapping block.
Tensor residual_block_forward(const Tensor& r_in, const Transform& residual, double lambda);

/// d r_out / d lambda contracted with grad_out: <F(r_in), grad_out>.
double residual_lambda_grad(const Tensor& branch_out, const Tensor& grad_out);

/// sum_i lambda_i * T_i(x) over C branch transforms of identical output shape.
Tensor grouped_transform_forward(const Tensor& x, const std::vector<Transform>& transforms,
                                 std::span<const double> lambda);

/// Per-branch factor gradients <T_i(x), grad_out>.
Eigen::VectorXd grouped_lambda_grads(const std::vector<Tensor>& branch_outputs,
                                     const Tensor& grad_out);

}  // namespace sss::scaling
