// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/scaling/scaling.hpp"

#include "sss/core/errors.hpp"

namespace sss::scaling {

std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::channel: return "channel";
    case Granularity::group: return "group";
    case Granularity::block: return "block";
  }
  return "?";
}

Granularity parse_granularity(const std::string& name) {
  if (name == "channel") return Granularity::channel;
  if (name == "group") return Granularity::group;
  if (name == "block") return Granularity::block;
  throw ValidationError("unknown granularity '" + name + "'");
}

void validate_partition(const std::vector<StructureBinding>& bindings, Index total) {
  Index next = 0;
  for (const auto& b : bindings) {
    if (b.length <= 0) throw ValidationError("binding '" + b.site + "' has empty range");
    if (b.offset != next) {
      throw ValidationError("binding '" + b.site + "' starts at " + std::to_string(b.offset) +
                            ", expected " + std::to_string(next) + " (gap or overlap)");
    }
    next += b.length;
  }
  if (next != total) {
    throw ValidationError("bindings cover " + std::to_string(next) + " of " +
                          std::to_string(total) + " scaling factors");
  }
}

ScalingVector::ScalingVector(std::vector<StructureBinding> bindings)
    : bindings_(std::move(bindings)) {
  Index total = 0;
  for (const auto& b : bindings_) total += b.length;
  validate_partition(bindings_, total);
  values_ = Eigen::VectorXd::Ones(total);
}

const StructureBinding& ScalingVector::binding(const std::string& site) const {
  for (const auto& b : bindings_) {
    if (b.site == site) return b;
  }
  throw ValidationError("no scaling site named '" + site + "'");
}

Index ScalingVector::nonzero_count() const { return (values_.array() != 0.0).count(); }

Index ScalingVector::nonzero_count(Granularity g) const {
  Index n = 0;
  for (const auto& b : bindings_) {
    if (b.granularity == g) n += (slice(b).array() != 0.0).count();
  }
  return n;
}

Index ScalingVector::count(Granularity g) const {
  Index n = 0;
  for (const auto& b : bindings_) {
    if (b.granularity == g) n += b.length;
  }
  return n;
}

namespace {
Index check_scaling_input(const Tensor& input, std::span<const double> factors, Index group_size) {
  if (input.rank() < 2) throw ValidationError("channel scaling needs [N, C, ...] input");
  if (group_size <= 0) throw ValidationError("channel scaling group size must be positive");
  const Index channels = input.dim(1);
  if (channels != static_cast<Index>(factors.size()) * group_size) {
    throw ValidationError("channel scaling: " + std::to_string(factors.size()) +
                          " factors x group size " + std::to_string(group_size) +
                          " do not cover " + std::to_string(channels) + " channels");
  }
  return input.size() / (input.dim(0) * channels);
}
}  // namespace

Tensor scale_channels(const Tensor& input, std::span<const double> factors, Index group_size) {
  const Index spatial = check_scaling_input(input, factors, group_size);
  const Index batch = input.dim(0), channels = input.dim(1);
  Tensor out(input.shape());
  for (Index n = 0; n < batch; ++n) {
    for (Index c = 0; c < channels; ++c) {
      const double f = factors[static_cast<std::size_t>(c / group_size)];
      const Index base = (n * channels + c) * spatial;
      out.values().segment(base, spatial) = f * input.values().segment(base, spatial);
    }
  }
  return out;
}

ScaleGradients scale_channels_backward(const Tensor& input, std::span<const double> factors,
                                       const Tensor& grad_out, Index group_size) {
  const Index spatial = check_scaling_input(input, factors, group_size);
  require_same_shape(input, grad_out, "channel scaling backward");
  const Index batch = input.dim(0), channels = input.dim(1);
  ScaleGradients g{Tensor(input.shape()), Eigen::VectorXd::Zero(static_cast<Index>(factors.size()))};
  for (Index n = 0; n < batch; ++n) {
    for (Index c = 0; c < channels; ++c) {
      const Index k = c / group_size;
      const Index base = (n * channels + c) * spatial;
      const auto go = grad_out.values().segment(base, spatial);
      g.grad_input.values().segment(base, spatial) = factors[static_cast<std::size_t>(k)] * go;
      g.grad_factors[k] += go.dot(input.values().segment(base, spatial));
    }
  }
  return g;
}

Tensor residual_combine(const Tensor& shortcut, const Tensor& branch_out, double lambda) {
  require_same_shape(shortcut, branch_out, "residual block (identity vs branch)");
  return Tensor(shortcut.shape(), shortcut.values() + lambda * branch_out.values());
}

Tensor residual_block_forward(const Tensor& r_in, const Transform& residual, double lambda) {
  return residual_combine(r_in, residual(r_in), lambda);
}

double residual_lambda_grad(const Tensor& branch_out, const Tensor& grad_out) {
  require_same_shape(branch_out, grad_out, "residual factor gradient");
  return branch_out.values().dot(grad_out.values());
}

Tensor grouped_transform_forward(const Tensor& x, const std::vector<Transform>& transforms,
                                 std::span<const double> lambda) {
  if (transforms.empty()) throw ValidationError("grouped transform needs at least one branch");
  if (transforms.size() != lambda.size()) {
    throw ValidationError("grouped transform: " + std::to_string(transforms.size()) +
                          " branches but " + std::to_string(lambda.size()) + " factors");
  }
  Tensor sum;
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    Tensor t = transforms[i](x);
    if (i == 0) {
      sum = Tensor(t.shape());
    } else if (t.shape() != sum.shape()) {
      throw ValidationError("grouped transform: branch " + std::to_string(i) + " output " +
                            sss::to_string(t.shape()) + " diverges from " + sss::to_string(sum.shape()));
    }
    sum.values() += lambda[i] * t.values();
  }
  return sum;
}

Eigen::VectorXd grouped_lambda_grads(const std::vector<Tensor>& branch_outputs,
                                     const Tensor& grad_out) {
  Eigen::VectorXd g(static_cast<Index>(branch_outputs.size()));
  for (std::size_t i = 0; i < branch_outputs.size(); ++i) {
    require_same_shape(branch_outputs[i], grad_out, "grouped transform factor gradient");
    g[static_cast<Index>(i)] = branch_outputs[i].values().dot(grad_out.values());
  }
  return g;
}

}  // namespace sss::scaling
