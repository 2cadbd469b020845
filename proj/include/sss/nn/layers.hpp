// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sss::nn {

enum class Mode { train, eval };

/// Per-call inputs shared by every layer. `lambda` is the full scaling
/// vector; only ChannelScale reads it.
struct ForwardContext {
  Mode mode = Mode::train;
  std::span<const double> lambda{};
};

struct GradientBundle {
  Tensor grad_input;
  std::vector<Tensor> grad_params;
};

/// Output extent of a sliding window along one axis; throws if the window
/// does not fit.
Index window_extent(Index in, Index kernel, Index stride, Index pad, const char* layer);

class Conv2d {
 public:
  struct Options {
    Index in = 1;
    Index out = 1;
    Index kernel = 1;
    Index stride = 1;
    Index pad = 0;
    Index groups = 1;
    bool bias = false;
  };

  /// Weight is [out, in / groups, kernel, kernel]; bias (optional) is [out].
  /// With `allocate == false` the layer carries hyperparameters only.
  explicit Conv2d(Options options, bool allocate = true);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);

  const Options& options() const noexcept { return opt_; }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  Tensor& weight() { return params_.at(0); }
  const Tensor& weight() const { return params_.at(0); }
  bool has_bias() const noexcept { return opt_.bias; }

  Shape output_shape(const Shape& input) const;
  void clear_cache() noexcept { cached_input_.reset(); }

 private:
  Options opt_;
  std::vector<Tensor> params_;
  std::optional<Tensor> cached_input_;
};

/// Batch normalization over the channel axis of NCHW (or NC) input.
/// Running statistics are buffers, not trainable parameters.
class BatchNorm2d {
 public:
  explicit BatchNorm2d(Index channels, bool allocate = true, double eps = 1e-5,
                       double momentum = 0.9);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);

  Index channels() const noexcept { return channels_; }
  double eps() const noexcept { return eps_; }
  double momentum() const noexcept { return momentum_; }

  /// [gamma, beta]
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  /// [running_mean, running_var]
  std::vector<Tensor>& buffers() noexcept { return buffers_; }
  const std::vector<Tensor>& buffers() const noexcept { return buffers_; }

  void clear_cache() noexcept { cache_.reset(); }

 private:
  struct Cache {
    Shape input_shape;
    Mode mode;
    Eigen::VectorXd normalized;  // xhat, same layout as input
    Eigen::VectorXd inv_std;     // per channel
  };

  Index channels_;
  double eps_;
  double momentum_;
  std::vector<Tensor> params_;
  std::vector<Tensor> buffers_;
  std::optional<Cache> cache_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  void clear_cache() noexcept { cached_input_.reset(); }

 private:
  std::vector<Tensor> params_;
  std::optional<Tensor> cached_input_;
};

class MaxPool2d {
 public:
  MaxPool2d(Index kernel, Index stride, Index pad = 0);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);
  Index kernel() const noexcept { return kernel_; }
  Index stride() const noexcept { return stride_; }
  Index pad() const noexcept { return pad_; }
  Shape output_shape(const Shape& input) const;
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  void clear_cache() noexcept { cache_.reset(); }

 private:
  struct Cache {
    Shape input_shape;
    std::vector<Index> argmax;  // flat input index per output element
  };
  Index kernel_, stride_, pad_;
  std::vector<Tensor> params_;
  std::optional<Cache> cache_;
};

/// Average pooling without padding. `kernel == 0` means global pooling to 1x1.
class AvgPool2d {
 public:
  explicit AvgPool2d(Index kernel = 0, Index stride = 0);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);
  bool global() const noexcept { return kernel_ == 0; }
  Index kernel() const noexcept { return kernel_; }
  Index stride() const noexcept { return stride_; }
  Shape output_shape(const Shape& input) const;
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  void clear_cache() noexcept { cached_shape_.reset(); }

 private:
  Index kernel_, stride_;
  std::vector<Tensor> params_;
  std::optional<Shape> cached_shape_;
};

/// y = x W^T + b with x flattened to [batch, in]. Weight is [out, in].
class Linear {
 public:
  Linear(Index in, Index out, bool bias = true, bool allocate = true);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);
  Index in() const noexcept { return in_; }
  Index out() const noexcept { return out_; }
  bool has_bias() const noexcept { return bias_; }
  Tensor& weight() { return params_.at(0); }
  const Tensor& weight() const { return params_.at(0); }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  void clear_cache() noexcept { cached_input_.reset(); }

 private:
  Index in_, out_;
  bool bias_;
  std::vector<Tensor> params_;
  std::optional<Tensor> cached_input_;
};

/// Multiplies channel slices by scaling factors read from the context:
/// channel c is scaled by lambda[offset + c / group_size]. group_size 1 is
/// neuron scaling; group_size > 1 scales whole cardinality groups.
///
/// The factors are not owned by the layer, so params() is empty; backward
/// reports the factor gradient as its single grad_params entry.
class ChannelScale {
 public:
  ChannelScale(Index offset, Index channels, Index group_size = 1);

  Tensor forward(const Tensor& x, const ForwardContext& ctx);
  GradientBundle backward(const Tensor& grad_out);

  Index offset() const noexcept { return offset_; }
  Index channels() const noexcept { return channels_; }
  Index group_size() const noexcept { return group_size_; }
  Index factors() const noexcept { return channels_ / group_size_; }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  void clear_cache() noexcept { cache_.reset(); }

 private:
  struct Cache {
    Tensor input;
    Eigen::VectorXd factors;
  };
  Index offset_, channels_, group_size_;
  std::vector<Tensor> params_;
  std::optional<Cache> cache_;
};

using Layer = std::variant<Conv2d, BatchNorm2d, ReLU, MaxPool2d, AvgPool2d, Linear, ChannelScale>;

Tensor forward(Layer& layer, const Tensor& x, const ForwardContext& ctx);
GradientBundle backward(Layer& layer, const Tensor& grad_out);
std::vector<Tensor>& params(Layer& layer);
const std::vector<Tensor>& params(const Layer& layer);
std::string kind_name(const Layer& layer);
void clear_cache(Layer& layer);
/// Output shape for a given input shape, validating compatibility.
Shape output_shape(const Layer& layer, const Shape& input);

/// Mean softmax cross-entropy over the batch and its gradient
/// (softmax - onehot) / batch.
struct LossResult {
  double loss;
  Tensor grad_logits;
};
LossResult cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

}  // namespace sss::nn
