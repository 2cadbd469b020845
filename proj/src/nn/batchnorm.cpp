// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/nn/layers.hpp"

#include <cmath>

namespace sss::nn {

namespace {
// Channel count and per-channel spatial extent for [N, C, ...] input.
struct Layout {
  Index batch, channels, spatial;
};

Layout layout_of(const Shape& s, Index channels) {
  if (s.size() < 2 || s[1] != channels) {
    throw ValidationError("batchnorm: expected input [N, " + std::to_string(channels) +
                          ", ...], got " + to_string(s));
  }
  Index spatial = 1;
  for (std::size_t i = 2; i < s.size(); ++i) spatial *= s[i];
  return {s[0], s[1], spatial};
}
}  // namespace

BatchNorm2d::BatchNorm2d(Index channels, bool allocate, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  if (channels <= 0) throw ValidationError("batchnorm: channel count must be positive");
  if (allocate) {
    params_.emplace_back(Shape{channels}, 1.0);
    params_.emplace_back(Shape{channels}, 0.0);
    buffers_.emplace_back(Shape{channels}, 0.0);
    buffers_.emplace_back(Shape{channels}, 1.0);
  }
}

Tensor BatchNorm2d::forward(const Tensor& x, const ForwardContext& ctx) {
  if (params_.empty()) throw StateError("batchnorm: layer has no allocated parameters");
  const Layout l = layout_of(x.shape(), channels_);
  const Index m = l.batch * l.spatial;
  const Eigen::VectorXd& gamma = params_[0].values();
  const Eigen::VectorXd& beta = params_[1].values();

  Cache cache{x.shape(), ctx.mode, Eigen::VectorXd(x.size()), Eigen::VectorXd(channels_)};
  Tensor y(x.shape());
  for (Index c = 0; c < channels_; ++c) {
    double mean, var;
    if (ctx.mode == Mode::train) {
      double sum = 0.0;
      for (Index n = 0; n < l.batch; ++n) {
        const double* p = x.data() + (n * channels_ + c) * l.spatial;
        for (Index i = 0; i < l.spatial; ++i) sum += p[i];
      }
      mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (Index n = 0; n < l.batch; ++n) {
        const double* p = x.data() + (n * channels_ + c) * l.spatial;
        for (Index i = 0; i < l.spatial; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / static_cast<double>(m);
      const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
      buffers_[0][c] = momentum_ * buffers_[0][c] + (1.0 - momentum_) * mean;
      buffers_[1][c] = momentum_ * buffers_[1][c] + (1.0 - momentum_) * unbiased;
    } else {
      mean = buffers_[0][c];
      var = buffers_[1][c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    cache.inv_std[c] = inv_std;
    for (Index n = 0; n < l.batch; ++n) {
      const Index base = (n * channels_ + c) * l.spatial;
      for (Index i = 0; i < l.spatial; ++i) {
        const double xhat = (x[base + i] - mean) * inv_std;
        cache.normalized[base + i] = xhat;
        y[base + i] = gamma[c] * xhat + beta[c];
      }
    }
  }
  cache_ = std::move(cache);
  return y;
}

GradientBundle BatchNorm2d::backward(const Tensor& grad_out) {
  if (!cache_) throw StateError("batchnorm: backward called without a cached forward");
  if (grad_out.shape() != cache_->input_shape) {
    throw ValidationError("batchnorm: grad_output shape " + to_string(grad_out.shape()) +
                          " does not match input " + to_string(cache_->input_shape));
  }
  const Layout l = layout_of(cache_->input_shape, channels_);
  const double m = static_cast<double>(l.batch * l.spatial);
  const Eigen::VectorXd& gamma = params_[0].values();
  const Eigen::VectorXd& xhat = cache_->normalized;

  GradientBundle out;
  out.grad_input = Tensor(cache_->input_shape);
  Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(channels_);
  Eigen::VectorXd dbeta = Eigen::VectorXd::Zero(channels_);
  for (Index c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (Index n = 0; n < l.batch; ++n) {
      const Index base = (n * channels_ + c) * l.spatial;
      for (Index i = 0; i < l.spatial; ++i) {
        sum_g += grad_out[base + i];
        sum_gx += grad_out[base + i] * xhat[base + i];
      }
    }
    dgamma[c] = sum_gx;
    dbeta[c] = sum_g;
    const double scale = gamma[c] * cache_->inv_std[c];
    for (Index n = 0; n < l.batch; ++n) {
      const Index base = (n * channels_ + c) * l.spatial;
      for (Index i = 0; i < l.spatial; ++i) {
        if (cache_->mode == Mode::train) {
          out.grad_input[base + i] =
              scale * (grad_out[base + i] - sum_g / m - xhat[base + i] * sum_gx / m);
        } else {
          out.grad_input[base + i] = scale * grad_out[base + i];
        }
      }
    }
  }
  out.grad_params.emplace_back(Shape{channels_}, std::move(dgamma));
  out.grad_params.emplace_back(Shape{channels_}, std::move(dbeta));
  return out;
}

}  // namespace sss::nn
