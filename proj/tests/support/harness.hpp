// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit tests and the acceptance suite.

#pragma once

#include "sss/net/network.hpp"
#include "sss/net/prune.hpp"
#include "sss/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sss::testing {

#ifndef SSS_SOURCE_DIR
#define SSS_SOURCE_DIR "."
#endif

inline std::string source_path(const std::string& rel) { return std::string(SSS_SOURCE_DIR) + "/" + rel; }

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

inline std::vector<int> random_labels(Index n, Index classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int& y : out) y = pick(rng);
  return out;
}

inline Tensor batch_for(const net::Network& net, Index n, std::mt19937_64& rng) {
  const auto& in = net.input();
  return random_tensor({n, in.channels, in.height, in.width}, rng);
}

/// Non-trivial BN affine parameters and running statistics.
inline void randomize_batchnorm(net::Network& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.5, 1.5);
  std::normal_distribution<double> normal(0.0, 0.3);
  auto touch = [&](nn::Layer& l) {
    if (auto* bn = std::get_if<nn::BatchNorm2d>(&l)) {
      for (Index c = 0; c < bn->channels(); ++c) {
        bn->params()[0][c] = pos(rng);
        bn->params()[1][c] = normal(rng);
        bn->buffers()[0][c] = normal(rng);
        bn->buffers()[1][c] = pos(rng);
      }
    }
  };
  for (auto& u : net.units()) {
    for (auto& l : u.layers) touch(l);
  }
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  return (a.values() - b.values()).lpNorm<Eigen::Infinity>();
}

/// Largest |analytic - numeric| / max(1, |numeric|) over the scaling vector,
/// for the mean cross-entropy of a train-mode forward pass.
inline double lambda_gradient_error(net::Network& net, const Tensor& x, const std::vector<int>& labels,
                                    double epsilon = 1e-6) {
  const Eigen::VectorXd lambda0 = net.lambda();
  const Tensor logits = net.forward(x, nn::Mode::train);
  const auto loss = nn::cross_entropy_loss(logits, labels);
  const Eigen::VectorXd analytic = net.backward(loss.grad_logits).lambda;
  auto f = [&](const Eigen::VectorXd& l) {
    net.lambda() = l;
    const double v = nn::cross_entropy_loss(net.forward(x, nn::Mode::train), labels).loss;
    net.lambda() = lambda0;
    return v;
  };
  const Eigen::VectorXd numeric = nn::central_difference(f, lambda0, epsilon);
  net.clear_caches();
  double worst = 0.0;
  for (Index i = 0; i < numeric.size(); ++i) {
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(numeric[i])));
  }
  return worst;
}

/// Random nonzero factors in +-[0.5, 1.5] with roughly `zero_fraction` set
/// to exact zero. The first factor of every channel site stays nonzero.
inline Eigen::VectorXd random_lambda(const net::Network& net, std::mt19937_64& rng, double zero_fraction) {
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution zero(zero_fraction), neg(0.3);
  Eigen::VectorXd l(net.lambda().size());
  for (Index i = 0; i < l.size(); ++i) l[i] = zero(rng) ? 0.0 : (neg(rng) ? -mag(rng) : mag(rng));
  for (const auto& b : net.scaling().bindings()) {
    if (b.granularity == scaling::Granularity::channel && l[b.offset] == 0.0) l[b.offset] = mag(rng);
  }
  return l;
}

struct Equivalence {
  double pruned = 0.0;  // max |masked - pruned|
  double folded = 0.0;  // max |masked - folded|
  std::int64_t flops_before = 0;
  std::int64_t flops_after = 0;
};

/// Eval-mode logits of the masked network (`net` at `lambda`) against its
/// pruned and folded counterparts.
inline Equivalence masking_equivalence(net::Network net, const Eigen::VectorXd& lambda, const Tensor& x) {
  net.lambda() = lambda;
  const Tensor masked = net.forward(x, nn::Mode::eval);
  net::PruneResult pr = net::prune(net, lambda);
  net::Network folded = net::fold_scaling(net, lambda);
  Equivalence e;
  e.pruned = max_abs_diff(masked, pr.network.forward(x, nn::Mode::eval));
  e.folded = max_abs_diff(masked, folded.forward(x, nn::Mode::eval));
  e.flops_before = pr.report.before.flops;
  e.flops_after = pr.report.after.flops;
  return e;
}

// Small architectures covering each scaling granularity.

inline const char* kChannelNet = R"(format: sss-spec-v1
name: channel-net
input: 8x8x3
stages:
  - conv: {name: c1, out: 6, kernel: 3}
  - conv: {name: c2, out: 8, kernel: 3, bn: false, bias: true}
  - maxpool: {name: p1, kernel: 2, stride: 2}
  - conv: {name: c3, out: 10, kernel: 3, stride: 2}
classifier: {pool: flatten, hidden: [12], classes: 5}
scaling:
  channel: all
)";

inline const char* kGroupNet = R"(format: sss-spec-v1
name: group-net
input: 8x8x3
stages:
  - conv: {name: conv1, out: 16, kernel: 3, bn: false, relu: false}
  - residual: {name: s1, block: bottleneck, blocks: 2, width: 16, out: 32, stride: 1, groups: 4}
  - residual: {name: s2, block: bottleneck, blocks: 2, width: 32, out: 64, stride: 2, groups: 8}
  - bnrelu: {name: post}
classifier: {pool: global, classes: 5}
scaling:
  group: all
)";

inline const char* kBlockNet = R"(format: sss-spec-v1
name: block-net
input: 8x8x3
stages:
  - conv: {name: conv1, out: 8, kernel: 3, bn: false, relu: false}
  - residual: {name: s1, block: basic, blocks: 3, out: 8, stride: 1}
  - residual: {name: s2, block: basic, blocks: 2, out: 16, stride: 2}
  - bnrelu: {name: post}
classifier: {pool: global, classes: 5}
scaling:
  block: all
)";

inline const char* kBlockGroupNet = R"(format: sss-spec-v1
name: block-group-net
input: 8x8x3
stages:
  - conv: {name: conv1, out: 16, kernel: 3, bn: false, relu: false}
  - residual: {name: s1, block: bottleneck, blocks: 3, width: 16, out: 32, stride: 1, groups: 4}
  - residual: {name: s2, block: bottleneck, blocks: 2, width: 32, out: 64, stride: 2, groups: 8}
  - bnrelu: {name: post}
classifier: {pool: global, classes: 5}
scaling:
  group: all
  block: all
)";

}  // namespace sss::testing
