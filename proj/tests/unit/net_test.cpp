// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/net/counting.hpp"
#include "sss/net/network.hpp"
#include "sss/net/prune.hpp"

#include "support/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

namespace sss::net {
namespace {

using sss::testing::source_path;

const char* kToyAt8 = R"(format: sss-spec-v1
name: toy8
input: 8x8x1
stages:
  - conv: {name: conv1, out: 8, kernel: 3}
  - maxpool: {name: pool1, kernel: 2, stride: 2}
  - conv: {name: conv2, out: 16, kernel: 3}
classifier: {pool: flatten, classes: 10}
scaling:
  channel: all
)";

int count_layers(const Network& net, const std::string& kind) {
  int n = 0;
  for (const auto& u : net.units()) {
    for (const auto& l : u.layers) n += nn::kind_name(l) == kind;
    if (kind == "conv2d" && u.shortcut) ++n;
  }
  return n;
}

TEST(Spec, ShippedSpecsRoundTrip) {
  for (const auto& e : std::filesystem::directory_iterator(source_path("specs"))) {
    const NetworkSpec a = load_spec(e.path().string());
    const std::string text = write_spec(a);
    EXPECT_EQ(write_spec(parse_spec(text)), text) << e.path();
    EXPECT_EQ(count(parse_spec(text)).total, count(a).total) << e.path();
  }
}

TEST(Spec, RejectsUnknownKeysAndBadShapes) {
  EXPECT_THROW(parse_spec("format: sss-spec-v1\nname: x\ninput: 8x8x1\nstages: []\nclassifier: {classes: 2}\nbogus: 1\n"),
               ValidationError);
  EXPECT_THROW(parse_spec("format: sss-spec-v2\nname: x\ninput: 8x8x1\nstages: []\nclassifier: {classes: 2}\n"),
               ValidationError);
  EXPECT_THROW(parse_image_shape("8x8"), ValidationError);
  EXPECT_EQ(parse_image_shape("32x24x3"), (ImageShape{3, 32, 24}));
}

TEST(Spec, NamedIneligibleSiteIsAnErrorButAllSkipsIt) {
  const std::string base = R"(format: sss-spec-v1
name: g
input: 8x8x4
stages:
  - conv: {name: a, out: 8, kernel: 3}
  - conv: {name: b, out: 8, kernel: 3, groups: 2}
  - conv: {name: c, out: 6, kernel: 1}
classifier: {pool: global, classes: 3}
scaling:
)";
  EXPECT_THROW(instantiate(parse_spec(base + "  channel: [a]\n")), ValidationError);
  const Network net = instantiate(parse_spec(base + "  channel: all\n"));
  ASSERT_EQ(net.scaling().bindings().size(), 1u);
  EXPECT_EQ(net.scaling().bindings()[0].site, "c");
  EXPECT_THROW(instantiate(parse_spec(base + "  channel: [b]\n")), ValidationError);
  EXPECT_THROW(instantiate(parse_spec(base + "  channel: [nope]\n")), ValidationError);
}

TEST(Instantiate, CifarVggAt224HasThirteenConvsAndOneLinear) {
  const Network net = instantiate(load_spec(source_path("specs/vgg16_cifar.sss")), ImageShape{3, 224, 224},
                                  Materialize::shapes_only);
  EXPECT_EQ(count_layers(net, "conv2d"), 13);
  EXPECT_EQ(count_layers(net, "linear"), 1);
}

TEST(Instantiate, ResNet20HasNineTwoConvBlocks) {
  const Network net = instantiate(load_spec(source_path("specs/resnet20.sss")));
  int blocks = 0;
  for (const auto& u : net.units()) {
    if (u.kind != Unit::Kind::residual) continue;
    ++blocks;
    int convs = 0;
    for (const auto& l : u.layers) convs += std::holds_alternative<nn::Conv2d>(l);
    EXPECT_EQ(convs, 2) << u.name;
  }
  EXPECT_EQ(blocks, 9);
}

TEST(Instantiate, ToyScalingVectorCoversBothConvs) {
  const Network net = instantiate(parse_spec(kToyAt8));
  EXPECT_EQ(net.lambda().size(), 24);
  EXPECT_TRUE((net.lambda().array() == 1.0).all());
}

TEST(Instantiate, SeedDeterminesWeights) {
  const NetworkSpec spec = parse_spec(kToyAt8);
  const Network a = instantiate(spec, {}, Materialize::weights, 3), b = instantiate(spec, {}, Materialize::weights, 3);
  const Network c = instantiate(spec, {}, Materialize::weights, 4);
  EXPECT_EQ(*a.parameters()[0], *b.parameters()[0]);
  EXPECT_FALSE(*a.parameters()[0] == *c.parameters()[0]);
}

TEST(Network, ForwardRequiresDeclaredInputShape) {
  Network net = instantiate(parse_spec(kToyAt8));
  EXPECT_THROW(net.forward(Tensor({1, 1, 9, 8}), nn::Mode::eval), ValidationError);
  EXPECT_THROW(net.backward(Tensor({1, 10})), StateError);
}

TEST(Network, BackwardAfterLambdaChangeIsRefused) {
  Network net = instantiate(parse_spec(kToyAt8));
  const Tensor logits = net.forward(Tensor({2, 1, 8, 8}, 0.5), nn::Mode::train);
  net.lambda()[0] = 0.5;
  EXPECT_THROW(net.backward(logits), StateError);
}

TEST(Network, LambdaGradientIsDeterministicAndZeroWithoutDownstreamSignal) {
  std::mt19937_64 rng(5);
  Network net = instantiate(parse_spec(testing::kBlockGroupNet), {}, Materialize::weights, 1);
  const Tensor x = testing::batch_for(net, 3, rng);
  net.forward(x, nn::Mode::train);
  const Eigen::VectorXd a = gather_lambda_grads(net, Tensor({3, 5}, 1.0 / 3.0));
  net.forward(x, nn::Mode::train);
  const Eigen::VectorXd b = gather_lambda_grads(net, Tensor({3, 5}, 1.0 / 3.0));
  EXPECT_EQ(a, b);
  net.forward(x, nn::Mode::train);
  const Eigen::VectorXd z = gather_lambda_grads(net, Tensor({3, 5}));
  EXPECT_TRUE((z.array() == 0.0).all());
}

TEST(Network, FullLambdaGradientOnTwoBlockNet) {
  const char* two_block = R"(format: sss-spec-v1
name: two-block
input: 6x6x2
stages:
  - conv: {name: conv1, out: 8, kernel: 3}
  - residual: {name: s1, block: bottleneck, blocks: 2, width: 8, out: 8, stride: 1, groups: 2}
  - bnrelu: {name: post}
classifier: {pool: global, classes: 4}
scaling:
  channel: all
  group: all
  block: all
)";
  std::mt19937_64 rng(6);
  Network net = instantiate(parse_spec(two_block), {}, Materialize::weights, 2);
  testing::randomize_batchnorm(net, rng);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (Index i = 0; i < net.lambda().size(); ++i) net.lambda()[i] = u(rng);
  const Tensor x = testing::batch_for(net, 4, rng);
  EXPECT_LT(testing::lambda_gradient_error(net, x, testing::random_labels(4, 4, rng)), 1e-5);
}

// Independent arithmetic for pre-activation ResNet-20 on 32x32x3.
TEST(Count, ResNet20MatchesHandArithmetic) {
  auto conv = [](std::int64_t in, std::int64_t out, std::int64_t k) { return in * out * k * k; };
  std::int64_t params = conv(3, 16, 3), flops = conv(3, 16, 3) * 32 * 32;
  std::int64_t in = 16, side = 32;
  for (std::int64_t out : {16, 32, 64}) {
    for (int b = 0; b < 3; ++b) {
      const bool down = b == 0 && out != 16;
      const std::int64_t s = down ? side / 2 : side;
      params += 2 * in + conv(in, out, 3) + 2 * out + conv(out, out, 3);
      flops += (conv(in, out, 3) + conv(out, out, 3)) * s * s;
      if (in != out) {
        params += conv(in, out, 1);
        flops += conv(in, out, 1) * s * s;
      }
      in = out;
      side = s;
    }
  }
  params += 2 * 64 + 64 * 10 + 10;
  flops += 64 * 10;
  const Counts c = count(load_spec(source_path("specs/resnet20.sss"))).total;
  EXPECT_EQ(c.params, params);
  EXPECT_EQ(c.flops, flops);
  EXPECT_EQ(c.params, 272282);
}

TEST(Count, NetworkAndSpecCountsAgree) {
  const NetworkSpec spec = parse_spec(kToyAt8);
  const Network net = instantiate(spec);
  std::int64_t params = 0;
  for (const Tensor* p : net.parameters()) params += p->size();
  EXPECT_EQ(count_params(net), params);
  EXPECT_EQ(count_flops(net), 8 * 9 * 64 + 16 * 8 * 9 * 16 + 16 * 16 * 10);
}

TEST(Count, VggFullyConnectedPortion) {
  const auto c = count(load_spec(source_path("specs/vgg16.sss")));
  const auto& head = c.stages.back();
  ASSERT_EQ(head.name, "classifier");
  EXPECT_NEAR(static_cast<double>(head.counts.params), 123e6, 0.01 * 123e6);
}

TEST(Penalty, FlopsWeightedSharesHaveMeanOne) {
  const NetworkSpec spec = parse_spec(R"(format: sss-spec-v1
name: two
input: 4x4x1
stages:
  - conv: {name: c1, out: 2, kernel: 3}
  - conv: {name: c2, out: 3, kernel: 1}
classifier: {pool: global, classes: 2}
scaling:
  channel: all
)");
  const auto w = apply_flops_weighted_penalty(spec, 1.0);
  EXPECT_DOUBLE_EQ(w.at("c1"), 1.5);
  EXPECT_DOUBLE_EQ(w.at("c2"), 0.5);
  const auto g = expand_penalty(scaling_layout(spec), w);
  ASSERT_EQ(g.size(), 5);
  EXPECT_EQ(g[1], 1.5);
  EXPECT_EQ(g[2], 0.5);
}

TEST(Penalty, UniformCostGivesEqualWeights) {
  const NetworkSpec spec = parse_spec(R"(format: sss-spec-v1
name: eq
input: 4x4x2
stages:
  - conv: {name: c1, out: 2, kernel: 3}
  - conv: {name: c2, out: 2, kernel: 3}
classifier: {pool: global, classes: 2}
scaling:
  channel: all
)");
  const auto w = apply_flops_weighted_penalty(spec, 0.25);
  EXPECT_DOUBLE_EQ(w.at("c1"), 0.25);
  EXPECT_DOUBLE_EQ(w.at("c2"), 0.25);
}

TEST(Penalty, VggConvFiveIsExempt) {
  const NetworkSpec spec = load_spec(source_path("specs/vgg16.sss"));
  for (auto f : {&apply_flops_weighted_penalty, &uniform_penalty}) {
    for (const auto& [site, g] : (*f)(spec, 1e-3)) {
      if (site.rfind("conv5_", 0) == 0) EXPECT_EQ(g, 0.0) << site;
      else EXPECT_GT(g, 0.0) << site;
    }
  }
}

class PruneTest : public ::testing::Test {
 protected:
  PruneTest() : net(instantiate(parse_spec(kToyAt8), {}, Materialize::weights, 3)) {
    testing::randomize_batchnorm(net, rng);
  }
  std::mt19937_64 rng{12};
  Network net;
};

TEST_F(PruneTest, HalfOfConv1ShrinksBothConvs) {
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(24);
  for (int k = 0; k < 8; k += 2) lambda[k] = 0.0;
  const Tensor x = testing::batch_for(net, 20, rng);
  PruneResult r = prune(net, lambda);
  const auto& c1 = std::get<ConvStage>(r.network.spec().stages[0]);
  EXPECT_EQ(c1.out, 4);
  const auto& conv2 = std::get<nn::Conv2d>(r.network.units()[2].layers[0]);
  EXPECT_EQ(conv2.options().in, 4);
  const auto e = testing::masking_equivalence(net, lambda, x);
  EXPECT_LE(e.pruned, 1e-12);
  EXPECT_LE(e.folded, 1e-12);
}

TEST_F(PruneTest, AllOnesIsANoOp) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(24);
  const Tensor x = testing::batch_for(net, 5, rng);
  PruneResult r = prune(net, ones);
  EXPECT_EQ(r.report.before, r.report.after);
  for (const auto& s : r.report.sites) {
    EXPECT_EQ(s.params_removed, 0);
    EXPECT_EQ(s.survived, s.total);
  }
  EXPECT_EQ(net.forward(x, nn::Mode::eval), r.network.forward(x, nn::Mode::eval));
}

TEST_F(PruneTest, PruningIsIdempotent) {
  Eigen::VectorXd lambda = testing::random_lambda(net, rng, 0.4);
  PruneResult once = prune(net, lambda);
  PruneResult twice = prune(once.network, Eigen::VectorXd());
  EXPECT_EQ(write_spec(once.network.spec()), write_spec(twice.network.spec()));
  const Tensor x = testing::batch_for(net, 5, rng);
  EXPECT_EQ(once.network.forward(x, nn::Mode::eval), twice.network.forward(x, nn::Mode::eval));
}

TEST_F(PruneTest, ReportRowsSumToTotalsAndMatchTheCounter) {
  Eigen::VectorXd lambda = testing::random_lambda(net, rng, 0.5);
  PruneResult r = prune(net, lambda);
  std::int64_t dp = 0, df = 0;
  for (const auto& s : r.report.sites) {
    dp += s.params_removed;
    df += s.flops_removed;
  }
  EXPECT_EQ(dp, r.report.before.params - r.report.after.params);
  EXPECT_EQ(df, r.report.before.flops - r.report.after.flops);
  EXPECT_EQ(r.report.after, count(r.network.spec()).total);
  EXPECT_EQ(count_params(r.network), r.report.after.params);
  std::int64_t stored = 0;
  for (const Tensor* p : r.network.parameters()) stored += p->size();
  EXPECT_EQ(stored, r.report.after.params);
  const std::string csv = r.report.to_csv();
  EXPECT_EQ(csv.rfind("site,granularity,survived,params_removed,flops_removed\n", 0), 0u);
}

TEST_F(PruneTest, EmptyChannelSiteIsRefusedByName) {
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(24);
  lambda.head(8).setZero();
  try {
    prune(net, lambda);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("conv1"), std::string::npos);
  }
  EXPECT_EQ(prune_spec(net.spec(), lambda, true).stages.size(), 3u);
  EXPECT_THROW(prune(net, Eigen::VectorXd::Ones(23)), ValidationError);
}

TEST(Prune, DroppedBlocksAndGroups) {
  std::mt19937_64 rng(13);
  Network net = instantiate(parse_spec(testing::kBlockGroupNet), {}, Materialize::weights, 4);
  testing::randomize_batchnorm(net, rng);
  Eigen::VectorXd lambda = testing::random_lambda(net, rng, 0.0);
  const auto& sv = net.scaling();
  lambda[sv.binding("s1.b2").offset] = 0.0;
  lambda.segment(sv.binding("s1.b3.groups").offset, 4).setZero();
  lambda.segment(sv.binding("s2.b1.groups").offset, 8).setZero();
  const NetworkSpec pruned = prune_spec(net.spec(), lambda);
  const auto& s1 = std::get<ResidualStage>(pruned.stages[1]);
  const auto& s2 = std::get<ResidualStage>(pruned.stages[2]);
  EXPECT_EQ(s1.keep, (std::vector<bool>{true, false, false}));
  EXPECT_EQ(s2.keep, (std::vector<bool>{false, true}));
  const Network p = instantiate(pruned);
  int projection_only = 0;
  for (const auto& u : p.units()) projection_only += u.kind == Unit::Kind::residual && !u.has_branch;
  EXPECT_EQ(projection_only, 1);
  const auto e = testing::masking_equivalence(net, lambda, testing::batch_for(net, 10, rng));
  EXPECT_LE(e.pruned, 1e-12);
  EXPECT_LE(e.folded, 1e-12);
}

}  // namespace
}  // namespace sss::net
