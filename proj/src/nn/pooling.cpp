// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/nn/layers.hpp"

#include <limits>

namespace sss::nn {

namespace {
void require_rank4(const Shape& s, const char* layer) {
  if (s.size() != 4) {
    throw ValidationError(std::string(layer) + ": expected NCHW input, got " + to_string(s));
  }
}
}  // namespace

MaxPool2d::MaxPool2d(Index kernel, Index stride, Index pad)
    : kernel_(kernel), stride_(stride), pad_(pad) {
  if (kernel <= 0 || stride <= 0 || pad < 0 || pad >= kernel) {
    throw ValidationError("maxpool: need kernel > 0, stride > 0 and 0 <= pad < kernel");
  }
}

Shape MaxPool2d::output_shape(const Shape& input) const {
  require_rank4(input, "maxpool");
  return {input[0], input[1], window_extent(input[2], kernel_, stride_, pad_, "maxpool"),
          window_extent(input[3], kernel_, stride_, pad_, "maxpool")};
}

Tensor MaxPool2d::forward(const Tensor& x, const ForwardContext&) {
  const Shape os = output_shape(x.shape());
  const Index h = x.dim(2), w = x.dim(3), ho = os[2], wo = os[3];
  Tensor y(os);
  Cache cache{x.shape(), std::vector<Index>(static_cast<std::size_t>(y.size()))};
  for (Index plane = 0; plane < os[0] * os[1]; ++plane) {
    const Index in_base = plane * h * w;
    for (Index oy = 0; oy < ho; ++oy) {
      for (Index ox = 0; ox < wo; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        Index best_idx = -1;
        for (Index ky = 0; ky < kernel_; ++ky) {
          const Index iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= h) continue;
          for (Index kx = 0; kx < kernel_; ++kx) {
            const Index ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= w) continue;
            const double v = x[in_base + iy * w + ix];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = in_base + iy * w + ix;
            }
          }
        }
        const Index o = (plane * ho + oy) * wo + ox;
        y[o] = best;
        cache.argmax[static_cast<std::size_t>(o)] = best_idx;
      }
    }
  }
  cache_ = std::move(cache);
  return y;
}

GradientBundle MaxPool2d::backward(const Tensor& grad_out) {
  if (!cache_) throw StateError("maxpool: backward called without a cached forward");
  if (grad_out.shape() != output_shape(cache_->input_shape)) {
    throw ValidationError("maxpool: grad_output shape mismatch " + to_string(grad_out.shape()));
  }
  GradientBundle out{Tensor(cache_->input_shape), {}};
  for (Index o = 0; o < grad_out.size(); ++o) {
    out.grad_input[cache_->argmax[static_cast<std::size_t>(o)]] += grad_out[o];
  }
  return out;
}

AvgPool2d::AvgPool2d(Index kernel, Index stride) : kernel_(kernel), stride_(stride) {
  if (kernel < 0 || (kernel > 0 && stride <= 0)) {
    throw ValidationError("avgpool: kernel must be 0 (global) or positive with positive stride");
  }
}

Shape AvgPool2d::output_shape(const Shape& input) const {
  require_rank4(input, "avgpool");
  if (global()) return {input[0], input[1], 1, 1};
  return {input[0], input[1], window_extent(input[2], kernel_, stride_, 0, "avgpool"),
          window_extent(input[3], kernel_, stride_, 0, "avgpool")};
}

Tensor AvgPool2d::forward(const Tensor& x, const ForwardContext&) {
  const Shape os = output_shape(x.shape());
  const Index h = x.dim(2), w = x.dim(3);
  const Index kh = global() ? h : kernel_, kw = global() ? w : kernel_;
  const Index sh = global() ? h : stride_, sw = global() ? w : stride_;
  const double inv = 1.0 / static_cast<double>(kh * kw);
  Tensor y(os);
  for (Index plane = 0; plane < os[0] * os[1]; ++plane) {
    for (Index oy = 0; oy < os[2]; ++oy) {
      for (Index ox = 0; ox < os[3]; ++ox) {
        double sum = 0.0;
        for (Index ky = 0; ky < kh; ++ky) {
          for (Index kx = 0; kx < kw; ++kx) sum += x[(plane * h + oy * sh + ky) * w + ox * sw + kx];
        }
        y[(plane * os[2] + oy) * os[3] + ox] = sum * inv;
      }
    }
  }
  cached_shape_ = x.shape();
  return y;
}

GradientBundle AvgPool2d::backward(const Tensor& grad_out) {
  if (!cached_shape_) throw StateError("avgpool: backward called without a cached forward");
  const Shape& is = *cached_shape_;
  const Shape os = output_shape(is);
  if (grad_out.shape() != os) {
    throw ValidationError("avgpool: grad_output shape mismatch " + to_string(grad_out.shape()));
  }
  const Index h = is[2], w = is[3];
  const Index kh = global() ? h : kernel_, kw = global() ? w : kernel_;
  const Index sh = global() ? h : stride_, sw = global() ? w : stride_;
  const double inv = 1.0 / static_cast<double>(kh * kw);
  GradientBundle out{Tensor(is), {}};
  for (Index plane = 0; plane < os[0] * os[1]; ++plane) {
    for (Index oy = 0; oy < os[2]; ++oy) {
      for (Index ox = 0; ox < os[3]; ++ox) {
        const double g = grad_out[(plane * os[2] + oy) * os[3] + ox] * inv;
        for (Index ky = 0; ky < kh; ++ky) {
          for (Index kx = 0; kx < kw; ++kx) out.grad_input[(plane * h + oy * sh + ky) * w + ox * sw + kx] += g;
        }
      }
    }
  }
  return out;
}

}  // namespace sss::nn
