// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/nn/layers.hpp"

#include <utility>

namespace sss::nn {

Index window_extent(Index in, Index kernel, Index stride, Index pad, const char* layer) {
  if (kernel <= 0 || stride <= 0 || pad < 0) {
    throw ValidationError(std::string(layer) + ": kernel and stride must be positive");
  }
  const Index span = in + 2 * pad - kernel;
  if (span < 0) {
    throw ValidationError(std::string(layer) + ": kernel " + std::to_string(kernel) +
                          " does not fit input extent " + std::to_string(in) + " with padding " +
                          std::to_string(pad));
  }
  return span / stride + 1;
}

namespace {

// Unfolds one NCHW sample into [C * k * k, Ho * Wo] columns. Rows are ordered
// (c, ky, kx), matching the weight layout [out, in/g, k, k].
void im2col(const double* x, Index c, Index h, Index w, Index k, Index stride, Index pad, Index ho,
            Index wo, RowMatrix& cols) {
  cols.resize(c * k * k, ho * wo);
  for (Index ci = 0; ci < c; ++ci) {
    const double* plane = x + ci * h * w;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((ci * k + ky) * k + kx) * ho * wo;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride - pad + ky;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride - pad + kx;
            row[oy * wo + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? plane[iy * w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const RowMatrix& cols, Index c, Index h, Index w, Index k, Index stride, Index pad,
            Index ho, Index wo, double* x) {
  for (Index ci = 0; ci < c; ++ci) {
    double* plane = x + ci * h * w;
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const double* row = cols.data() + ((ci * k + ky) * k + kx) * ho * wo;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) plane[iy * w + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Conv2d::Conv2d(Options options, bool allocate) : opt_(options) {
  if (opt_.in <= 0 || opt_.out <= 0 || opt_.kernel <= 0 || opt_.stride <= 0 || opt_.pad < 0 ||
      opt_.groups <= 0) {
    throw ValidationError("conv2d: channel counts, kernel, stride and groups must be positive");
  }
  if (opt_.in % opt_.groups != 0 || opt_.out % opt_.groups != 0) {
    throw ValidationError("conv2d: group count " + std::to_string(opt_.groups) +
                          " must divide input channels " + std::to_string(opt_.in) +
                          " and output channels " + std::to_string(opt_.out));
  }
  if (allocate) {
    params_.emplace_back(Shape{opt_.out, opt_.in / opt_.groups, opt_.kernel, opt_.kernel});
    if (opt_.bias) params_.emplace_back(Shape{opt_.out});
  }
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 4 || input[1] != opt_.in) {
    throw ValidationError("conv2d: expected input [N, " + std::to_string(opt_.in) +
                          ", H, W], got " + to_string(input));
  }
  return {input[0], opt_.out, window_extent(input[2], opt_.kernel, opt_.stride, opt_.pad, "conv2d"),
          window_extent(input[3], opt_.kernel, opt_.stride, opt_.pad, "conv2d")};
}

Tensor Conv2d::forward(const Tensor& x, const ForwardContext&) {
  if (params_.empty()) throw StateError("conv2d: layer has no allocated weights");
  const Shape out_shape = output_shape(x.shape());
  const Index n = out_shape[0], h = x.dim(2), w = x.dim(3), ho = out_shape[2], wo = out_shape[3];
  const Index k = opt_.kernel, g = opt_.groups;
  const Index cin_g = opt_.in / g, cout_g = opt_.out / g, patch = cin_g * k * k;

  Tensor y(out_shape);
  const ConstMatrixMap weight = std::as_const(params_[0]).matrix(opt_.out, patch);
  RowMatrix cols;
  for (Index s = 0; s < n; ++s) {
    im2col(x.data() + s * opt_.in * h * w, opt_.in, h, w, k, opt_.stride, opt_.pad, ho, wo, cols);
    MatrixMap ys(y.data() + s * opt_.out * ho * wo, opt_.out, ho * wo);
    for (Index gi = 0; gi < g; ++gi) {
      ys.middleRows(gi * cout_g, cout_g).noalias() =
          weight.middleRows(gi * cout_g, cout_g) * cols.middleRows(gi * patch, patch);
    }
    if (opt_.bias) ys.colwise() += params_[1].values();
  }
  cached_input_ = x;
  return y;
}

GradientBundle Conv2d::backward(const Tensor& grad_out) {
  if (!cached_input_) throw StateError("conv2d: backward called without a cached forward");
  const Tensor& x = *cached_input_;
  const Shape out_shape = output_shape(x.shape());
  if (grad_out.shape() != out_shape) {
    throw ValidationError("conv2d: grad_output shape " + to_string(grad_out.shape()) +
                          " does not match output " + to_string(out_shape));
  }
  const Index n = out_shape[0], h = x.dim(2), w = x.dim(3), ho = out_shape[2], wo = out_shape[3];
  const Index k = opt_.kernel, g = opt_.groups;
  const Index cin_g = opt_.in / g, cout_g = opt_.out / g, patch = cin_g * k * k;

  GradientBundle out;
  out.grad_input = Tensor(x.shape());
  Tensor grad_w(params_[0].shape());
  MatrixMap gw = grad_w.matrix(opt_.out, patch);
  const ConstMatrixMap weight = std::as_const(params_[0]).matrix(opt_.out, patch);
  Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(opt_.out);

  RowMatrix cols, grad_cols(opt_.in * k * k, ho * wo);
  for (Index s = 0; s < n; ++s) {
    im2col(x.data() + s * opt_.in * h * w, opt_.in, h, w, k, opt_.stride, opt_.pad, ho, wo, cols);
    const ConstMatrixMap gs(grad_out.data() + s * opt_.out * ho * wo, opt_.out, ho * wo);
    for (Index gi = 0; gi < g; ++gi) {
      gw.middleRows(gi * cout_g, cout_g).noalias() +=
          gs.middleRows(gi * cout_g, cout_g) * cols.middleRows(gi * patch, patch).transpose();
      grad_cols.middleRows(gi * patch, patch).noalias() =
          weight.middleRows(gi * cout_g, cout_g).transpose() * gs.middleRows(gi * cout_g, cout_g);
    }
    if (opt_.bias) grad_b += gs.rowwise().sum();
    col2im(grad_cols, opt_.in, h, w, k, opt_.stride, opt_.pad, ho, wo,
           out.grad_input.data() + s * opt_.in * h * w);
  }
  out.grad_params.push_back(std::move(grad_w));
  if (opt_.bias) out.grad_params.emplace_back(Shape{opt_.out}, std::move(grad_b));
  return out;
}

}  // namespace sss::nn
