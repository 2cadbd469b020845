// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/nn/gradcheck.hpp"
#include "sss/scaling/scaling.hpp"

#include "support/harness.hpp"

#include <gtest/gtest.h>

namespace sss::scaling {
namespace {

using sss::testing::random_tensor;

TEST(ScaleChannels, OnesAreIdentityAndZeroSilencesAChannel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({2, 3, 2, 2}, rng);
  const std::vector<double> ones(3, 1.0);
  EXPECT_EQ(scale_channels(x, ones), x);
  const Tensor y = scale_channels(x, std::vector<double>{1.0, 0.0, 1.0});
  for (Index n = 0; n < 2; ++n)
    for (Index i = 0; i < 4; ++i) EXPECT_EQ(y[(n * 3 + 1) * 4 + i], 0.0);
}

TEST(ScaleChannels, FactorGradientIsChannelInnerProduct) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({2, 4, 3, 3}, rng), g = random_tensor({2, 4, 3, 3}, rng);
  const std::vector<double> f{0.5, -1.0, 2.0, 0.0};
  const auto grads = scale_channels_backward(x, f, g);
  for (Index k = 0; k < 4; ++k) {
    double expected = 0.0;
    for (Index n = 0; n < 2; ++n)
      for (Index i = 0; i < 9; ++i) expected += x[(n * 4 + k) * 9 + i] * g[(n * 4 + k) * 9 + i];
    EXPECT_NEAR(grads.grad_factors[k], expected, 1e-12);
  }
  auto obj = [&](const Eigen::VectorXd& v) {
    return scale_channels(x, std::vector<double>(v.data(), v.data() + v.size())).values().dot(g.values());
  };
  const Eigen::VectorXd numeric = nn::central_difference(obj, Eigen::Map<const Eigen::VectorXd>(f.data(), 4), 1e-6);
  EXPECT_LT((numeric - grads.grad_factors).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(ResidualBlock, ZeroFactorIsBitIdenticalIdentity) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({2, 3, 4, 4}, rng);
  auto f = [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().sin() * 1e3)); };
  EXPECT_EQ(residual_block_forward(x, f, 0.0), x);
  EXPECT_EQ(residual_block_forward(x, f, 1.0), Tensor(x.shape(), Eigen::VectorXd(x.values() + f(x).values())));
}

TEST(ResidualBlock, FactorGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({2, 3, 4, 4}, rng), g = random_tensor({2, 3, 4, 4}, rng);
  auto f = [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().tanh())); };
  auto obj = [&](const Eigen::VectorXd& l) { return residual_block_forward(x, f, l[0]).values().dot(g.values()); };
  const double numeric = nn::central_difference(obj, Eigen::VectorXd::Constant(1, 0.4), 1e-6)[0];
  EXPECT_NEAR(residual_lambda_grad(f(x), g), numeric, 1e-6);
}

TEST(GroupedTransform, DegenerateCases) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({1, 2, 3, 3}, rng);
  auto twice = [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(2.0 * t.values())); };
  auto square = [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().square())); };
  EXPECT_EQ(grouped_transform_forward(x, {twice}, std::vector<double>{1.0}), twice(x));
  const Tensor z = grouped_transform_forward(x, {twice, square}, std::vector<double>{0.0, 0.0});
  EXPECT_TRUE((z.values().array() == 0.0).all());
  EXPECT_THROW(grouped_transform_forward(x, {twice}, std::vector<double>{1.0, 1.0}), ValidationError);
}

TEST(GroupedTransform, FactorGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({1, 2, 3, 3}, rng), g = random_tensor({1, 2, 3, 3}, rng);
  const std::vector<Transform> ts{
      [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().sin())); },
      [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().cube())); },
      [](const Tensor& t) { return Tensor(t.shape(), Eigen::VectorXd(t.values().array().exp())); },
  };
  std::vector<Tensor> outs;
  for (const auto& t : ts) outs.push_back(t(x));
  const Eigen::VectorXd analytic = grouped_lambda_grads(outs, g);
  auto obj = [&](const Eigen::VectorXd& l) {
    return grouped_transform_forward(x, ts, std::vector<double>(l.data(), l.data() + l.size())).values().dot(g.values());
  };
  const Eigen::VectorXd numeric = nn::central_difference(obj, Eigen::Vector3d(0.3, -1.0, 0.0), 1e-6);
  EXPECT_LT((numeric - analytic).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(ScalingVector, LayoutAndCounts) {
  ScalingVector s({{Granularity::channel, "a", 0, 3}, {Granularity::block, "b", 3, 1}, {Granularity::group, "c", 4, 2}});
  EXPECT_EQ(s.size(), 6);
  EXPECT_EQ(s.nonzero_count(), 6);
  s.values()[1] = 0.0;
  s.values()[3] = -0.0;
  EXPECT_EQ(s.nonzero_count(), 4);
  EXPECT_EQ(s.nonzero_count(Granularity::channel), 2);
  EXPECT_EQ(s.nonzero_count(Granularity::block), 0);
  EXPECT_EQ(s.count(Granularity::group), 2);
  EXPECT_EQ(s.binding("c").offset, 4);
  EXPECT_THROW(s.binding("missing"), ValidationError);
}

TEST(ScalingVector, PartitionMustBeContiguous) {
  EXPECT_THROW(ScalingVector({{Granularity::channel, "a", 0, 3}, {Granularity::channel, "b", 4, 1}}), ValidationError);
  EXPECT_THROW(ScalingVector({{Granularity::channel, "a", 0, 0}}), ValidationError);
  EXPECT_THROW(validate_partition({{Granularity::channel, "a", 0, 3}}, 4), ValidationError);
  EXPECT_EQ(parse_granularity("group"), Granularity::group);
  EXPECT_THROW(parse_granularity("layer"), ValidationError);
}

}  // namespace
}  // namespace sss::scaling
