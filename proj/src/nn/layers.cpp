// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/nn/layers.hpp"
#include "sss/scaling/scaling.hpp"

#include <cmath>

namespace sss::nn {

// ReLU: subgradient at exactly 0 is 0.

Tensor ReLU::forward(const Tensor& x, const ForwardContext&) {
  cached_input_ = x;
  return Tensor(x.shape(), x.values().cwiseMax(0.0));
}

GradientBundle ReLU::backward(const Tensor& grad_out) {
  if (!cached_input_) throw StateError("relu: backward called without a cached forward");
  require_same_shape(*cached_input_, grad_out, "relu backward");
  Eigen::VectorXd g = (cached_input_->values().array() > 0.0).select(grad_out.values(), 0.0);
  return {Tensor(grad_out.shape(), std::move(g)), {}};
}

Linear::Linear(Index in, Index out, bool bias, bool allocate) : in_(in), out_(out), bias_(bias) {
  if (in <= 0 || out <= 0) throw ValidationError("linear: feature counts must be positive");
  if (allocate) {
    params_.emplace_back(Shape{out, in});
    if (bias) params_.emplace_back(Shape{out});
  }
}

Tensor Linear::forward(const Tensor& x, const ForwardContext&) {
  if (params_.empty()) throw StateError("linear: layer has no allocated weights");
  if (x.rank() < 2 || x.size() / x.dim(0) != in_) {
    throw ValidationError("linear: expected " + std::to_string(in_) +
                          " features per sample, got input " + to_string(x.shape()));
  }
  const Index n = x.dim(0);
  Tensor y(Shape{n, out_});
  y.matrix(n, out_).noalias() = x.matrix(n, in_) * params_[0].matrix(out_, in_).transpose();
  if (bias_) y.matrix(n, out_).rowwise() += params_[1].values().transpose();
  cached_input_ = x;
  return y;
}

GradientBundle Linear::backward(const Tensor& grad_out) {
  if (!cached_input_) throw StateError("linear: backward called without a cached forward");
  const Tensor& x = *cached_input_;
  const Index n = x.dim(0);
  if (grad_out.shape() != Shape{n, out_}) {
    throw ValidationError("linear: grad_output shape " + to_string(grad_out.shape()) +
                          " does not match [" + std::to_string(n) + "x" + std::to_string(out_) + "]");
  }
  GradientBundle out;
  out.grad_input = Tensor(x.shape());
  const ConstMatrixMap g = grad_out.matrix(n, out_);
  out.grad_input.matrix(n, in_).noalias() = g * params_[0].matrix(out_, in_);
  Tensor gw(Shape{out_, in_});
  gw.matrix(out_, in_).noalias() = g.transpose() * x.matrix(n, in_);
  out.grad_params.push_back(std::move(gw));
  if (bias_) out.grad_params.emplace_back(Shape{out_}, Eigen::VectorXd(g.colwise().sum().transpose()));
  return out;
}

ChannelScale::ChannelScale(Index offset, Index channels, Index group_size)
    : offset_(offset), channels_(channels), group_size_(group_size) {
  if (offset < 0 || channels <= 0 || group_size <= 0 || channels % group_size != 0) {
    throw ValidationError("channel scale: group size " + std::to_string(group_size) +
                          " must divide channel count " + std::to_string(channels));
  }
}

Tensor ChannelScale::forward(const Tensor& x, const ForwardContext& ctx) {
  if (static_cast<Index>(ctx.lambda.size()) < offset_ + factors()) {
    throw ValidationError("channel scale: scaling vector of length " +
                          std::to_string(ctx.lambda.size()) + " does not reach index " +
                          std::to_string(offset_ + factors() - 1));
  }
  const auto slice = ctx.lambda.subspan(static_cast<std::size_t>(offset_),
                                        static_cast<std::size_t>(factors()));
  Tensor y = scaling::scale_channels(x, slice, group_size_);
  cache_ = Cache{x, Eigen::Map<const Eigen::VectorXd>(slice.data(), factors())};
  return y;
}

GradientBundle ChannelScale::backward(const Tensor& grad_out) {
  if (!cache_) throw StateError("channel scale: backward called without a cached forward");
  const std::span<const double> f(cache_->factors.data(), static_cast<std::size_t>(factors()));
  auto g = scaling::scale_channels_backward(cache_->input, f, grad_out, group_size_);
  GradientBundle out{std::move(g.grad_input), {}};
  out.grad_params.emplace_back(Shape{factors()}, std::move(g.grad_factors));
  return out;
}

Tensor forward(Layer& layer, const Tensor& x, const ForwardContext& ctx) {
  return std::visit([&](auto& l) { return l.forward(x, ctx); }, layer);
}

GradientBundle backward(Layer& layer, const Tensor& grad_out) {
  return std::visit([&](auto& l) { return l.backward(grad_out); }, layer);
}

std::vector<Tensor>& params(Layer& layer) {
  return std::visit([](auto& l) -> std::vector<Tensor>& { return l.params(); }, layer);
}

const std::vector<Tensor>& params(const Layer& layer) {
  return std::visit([](const auto& l) -> const std::vector<Tensor>& { return l.params(); }, layer);
}

void clear_cache(Layer& layer) {
  std::visit([](auto& l) { l.clear_cache(); }, layer);
}

std::string kind_name(const Layer& layer) {
  struct Names {
    std::string operator()(const Conv2d&) const { return "conv2d"; }
    std::string operator()(const BatchNorm2d&) const { return "batchnorm"; }
    std::string operator()(const ReLU&) const { return "relu"; }
    std::string operator()(const MaxPool2d&) const { return "maxpool"; }
    std::string operator()(const AvgPool2d&) const { return "avgpool"; }
    std::string operator()(const Linear&) const { return "linear"; }
    std::string operator()(const ChannelScale&) const { return "scale"; }
  };
  return std::visit(Names{}, layer);
}

Shape output_shape(const Layer& layer, const Shape& input) {
  if (const auto* c = std::get_if<Conv2d>(&layer)) return c->output_shape(input);
  if (const auto* m = std::get_if<MaxPool2d>(&layer)) return m->output_shape(input);
  if (const auto* a = std::get_if<AvgPool2d>(&layer)) return a->output_shape(input);
  if (const auto* l = std::get_if<Linear>(&layer)) {
    if (input.size() < 2 || numel(input) / input[0] != l->in()) {
      throw ValidationError("linear: expected " + std::to_string(l->in()) + " features, got " +
                            to_string(input));
    }
    return {input[0], l->out()};
  }
  if (const auto* b = std::get_if<BatchNorm2d>(&layer)) {
    if (input.size() < 2 || input[1] != b->channels()) {
      throw ValidationError("batchnorm: expected " + std::to_string(b->channels()) + " channels, got " +
                            to_string(input));
    }
  }
  if (const auto* s = std::get_if<ChannelScale>(&layer)) {
    if (input.size() < 2 || input[1] != s->channels()) {
      throw ValidationError("channel scale: expected " + std::to_string(s->channels()) +
                            " channels, got " + to_string(input));
    }
  }
  return input;
}

LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw ValidationError("cross entropy: logits must be [batch, classes], got " +
                          to_string(logits.shape()));
  }
  const Index n = logits.dim(0), k = logits.dim(1);
  if (static_cast<Index>(labels.size()) != n) {
    throw ValidationError("cross entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                          std::to_string(n));
  }
  LossResult r{0.0, Tensor(logits.shape())};
  const ConstMatrixMap z = logits.matrix(n, k);
  MatrixMap g = r.grad_logits.matrix(n, k);
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) {
      throw ValidationError("cross entropy: label " + std::to_string(y) + " at sample " +
                            std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    }
    const double m = z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(i).array() - m).exp().matrix();
    const double s = e.sum();
    r.loss += std::log(s) - (z(i, y) - m);
    g.row(i) = e / s;
    g(i, y) -= 1.0;
  }
  r.loss /= static_cast<double>(n);
  g /= static_cast<double>(n);
  return r;
}

}  // namespace sss::nn
