// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Each criterion prints detail lines followed by one
// "criterion N ...: PASS|FAIL" line. Exit status is nonzero if any selected
// criterion fails.

#include "sss/net/counting.hpp"
#include "sss/net/prune.hpp"
#include "sss/optim/verify.hpp"
#include "sss/train/trainer.hpp"

#include "support/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

namespace {

using namespace sss;
using sss::testing::source_path;

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& line) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
  }
};

std::string num(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Published figures: parameters and multiply-adds for the ImageNet models.
struct Published {
  const char* model;
  const char* spec;
  double params;
  double flops;
};
constexpr Published kPublished[] = {
    {"VGG16", "specs/vgg16.sss", 138.3e6, 30.97e9},
    {"ResNet-50", "specs/resnet50.sss", 25.5e6, 4.089e9},
    {"ResNeXt-50", "specs/resnext50.sss", 25.0e6, 4.230e9},
    {"ResNet-26", "specs/resnet26.sss", 15.6e6, 2.329e9},
    {"ResNet-32", "specs/resnet32.sss", 18.6e6, 2.818e9},
    {"ResNet-41", "specs/resnet41.sss", 25.3e6, 3.473e9},
};
constexpr double kCountTolerance = 0.01;

Outcome counter_reproduction() {
  Outcome o;
  for (const auto& p : kPublished) {
    const auto c = net::count(net::load_spec(source_path(p.spec)), net::ImageShape{3, 224, 224}).total;
    const double ep = rel(static_cast<double>(c.params), p.params);
    const double ef = rel(static_cast<double>(c.flops), p.flops);
    o.check(ep <= kCountTolerance, std::string(p.model) + " params " + std::to_string(c.params) + " vs " +
                                       num(p.params) + " (rel " + num(ep, "%.4f") + ")");
    o.check(ef <= kCountTolerance, std::string(p.model) + " multiply-adds " + std::to_string(c.flops) + " vs " +
                                       num(p.flops) + " (rel " + num(ef, "%.4f") + ")");
  }
  return o;
}

Outcome vgg_conv5_share() {
  constexpr double kConv5 = 2.77e9, kShare = 0.09, kTol = 0.02;
  Outcome o;
  const auto c = net::count(net::load_spec(source_path("specs/vgg16.sss")), net::ImageShape{3, 224, 224});
  std::int64_t conv5 = 0;
  for (const auto& s : c.stages) {
    if (s.name.rfind("conv5_", 0) == 0) conv5 += s.counts.flops;
  }
  const double share = static_cast<double>(conv5) / static_cast<double>(c.total.flops);
  o.check(rel(static_cast<double>(conv5), kConv5) <= kTol,
          "conv5 multiply-adds " + std::to_string(conv5) + " vs " + num(kConv5) + " (rel " +
              num(rel(static_cast<double>(conv5), kConv5), "%.4f") + ")");
  o.check(rel(share, kShare) <= kTol,
          "conv5 share " + num(share, "%.4f") + " vs " + num(kShare) + " (rel " + num(rel(share, kShare), "%.4f") + ")");
  return o;
}

Outcome optimizer_forms() {
  Outcome o;
  for (const auto& r : {optim::check_classic_vs_momentum(), optim::check_momentum_vs_lookahead()}) {
    o.check(r.pass, r.name + ": max abs " + num(r.value, "%.3e") + " <= " + num(r.tolerance, "%.0e") + " (" +
                        r.detail + ")");
  }
  return o;
}

Outcome convex_oracle() {
  Outcome o;
  const auto r = optim::check_lasso_agreement(11, 5000, 1e-6);
  o.check(r.pass, r.name + ": objective excess " + num(r.value, "%.3e") + " <= 1e-06 (" + r.detail + ")");
  return o;
}

Outcome gradient_suite() {
  constexpr double kLayerTol = 1e-4, kNetTol = 1e-5, kEps = 1e-6;
  Outcome o;
  std::mt19937_64 rng(2024);
  auto layer = [&](const std::string& name, nn::Layer l, const Shape& in, nn::Mode mode = nn::Mode::train,
                   std::vector<double> lambda = {}) {
    const double err = nn::finite_diff_check(std::move(l), testing::random_tensor(in, rng), kEps, mode, lambda);
    o.check(err < kLayerTol, name + ": rel err " + num(err, "%.2e"));
  };
  auto conv = [](Index in, Index out, Index k, Index stride, Index pad, Index groups, bool bias) {
    nn::Conv2d c({in, out, k, stride, pad, groups, bias});
    std::mt19937_64 r(in * 131 + out);
    for (auto& p : c.params()) p = testing::random_tensor(p.shape(), r, 0.5);
    return c;
  };
  layer("conv2d 3x3", conv(3, 4, 3, 1, 1, 1, false), {2, 3, 5, 5});
  layer("conv2d strided with bias", conv(3, 4, 3, 2, 1, 1, true), {2, 3, 7, 7});
  layer("conv2d grouped", conv(4, 6, 3, 1, 1, 2, false), {2, 4, 5, 5});
  layer("conv2d 1x1", conv(5, 3, 1, 1, 0, 1, false), {2, 5, 4, 4});
  nn::BatchNorm2d bn(3);
  for (auto& p : bn.params()) p = testing::random_tensor(p.shape(), rng, 0.5);
  layer("batchnorm train", bn, {4, 3, 3, 3});
  bn.buffers()[1].values().setConstant(1.7);
  layer("batchnorm eval", bn, {4, 3, 3, 3}, nn::Mode::eval);
  layer("relu", nn::ReLU{}, {2, 3, 4, 4});
  layer("maxpool 2/2", nn::MaxPool2d(2, 2), {2, 3, 6, 6});
  layer("maxpool 3/2 pad 1", nn::MaxPool2d(3, 2, 1), {2, 3, 7, 7});
  layer("avgpool 2/2", nn::AvgPool2d(2, 2), {2, 3, 6, 6});
  layer("avgpool global", nn::AvgPool2d(), {2, 3, 5, 5});
  nn::Linear lin(12, 5);
  for (auto& p : lin.params()) p = testing::random_tensor(p.shape(), rng, 0.5);
  layer("linear", lin, {3, 3, 2, 2});
  layer("scale channel granularity", nn::ChannelScale(2, 4, 1), {2, 4, 3, 3}, nn::Mode::train,
        {0.3, -1.0, 0.7, 1.2, -0.4, 0.0, 2.0});
  layer("scale group granularity", nn::ChannelScale(1, 6, 2), {2, 6, 3, 3}, nn::Mode::train,
        {9.0, 0.5, -1.5, 0.8});

  {
    const Tensor s = testing::random_tensor({2, 3, 4, 4}, rng), f = testing::random_tensor({2, 3, 4, 4}, rng);
    const Tensor probe = testing::random_tensor({2, 3, 4, 4}, rng);
    const double lambda = 0.7;
    auto obj = [&](const Eigen::VectorXd& l) { return scaling::residual_combine(s, f, l[0]).values().dot(probe.values()); };
    const double numeric = nn::central_difference(obj, Eigen::VectorXd::Constant(1, lambda), kEps)[0];
    const double err = std::abs(scaling::residual_lambda_grad(f, probe) - numeric) / std::max(1.0, std::abs(numeric));
    o.check(err < kLayerTol, "scale block granularity: rel err " + num(err, "%.2e"));
  }

  auto full = [&](const std::string& name, const net::NetworkSpec& spec, Index batch, double zero_fraction) {
    net::Network net = net::instantiate(spec, {}, net::Materialize::weights, 5);
    testing::randomize_batchnorm(net, rng);
    net.lambda() = testing::random_lambda(net, rng, zero_fraction);
    const Tensor x = testing::batch_for(net, batch, rng);
    const auto labels = testing::random_labels(batch, spec.classifier.classes, rng);
    const double err = testing::lambda_gradient_error(net, x, labels, kEps);
    o.check(err < kNetTol, name + " full-network lambda gradient (" + std::to_string(net.lambda().size()) +
                               " factors): rel err " + num(err, "%.2e"));
  };
  full("toy MNIST net", net::load_spec(source_path("specs/toy_mnist.sss")), 4, 0.0);
  // Channel factors feed a ReLU, so an exact zero sits on its kink; zeros are
  // only drawn where the factor enters linearly.
  full("channel net", net::parse_spec(testing::kChannelNet), 3, 0.0);
  full("group net", net::parse_spec(testing::kGroupNet), 3, 0.2);
  full("block net", net::parse_spec(testing::kBlockNet), 3, 0.2);
  full("block+group net", net::parse_spec(testing::kBlockGroupNet), 3, 0.2);
  return o;
}

struct RecipeRun {
  train::TrainConfig config;
  net::NetworkSpec spec;
  std::unique_ptr<train::Trainer> trainer;
};

RecipeRun run_recipe(const std::string& recipe, const std::function<void(const train::Trainer&)>& on_epoch = {}) {
  RecipeRun r;
  r.config = train::load_train_config(source_path(recipe));
  r.spec = net::load_spec(r.config.spec);
  auto [tr, te] = train::load_datasets(r.config.dataset);
  r.trainer = std::make_unique<train::Trainer>(r.config, r.spec, std::move(tr), std::move(te));
  r.trainer->run([&](const train::Trainer& t, const train::EpochRecord&) {
    if (on_epoch) on_epoch(t);
  });
  return r;
}

Tensor logits_over(net::Network& net, const train::Dataset& data) {
  std::vector<Index> idx(static_cast<std::size_t>(data.size()));
  for (Index i = 0; i < data.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  const Tensor out = net.forward(data.batch(idx), nn::Mode::eval);
  net.clear_caches();
  return out;
}

Outcome exact_zero_sparsification() {
  constexpr double kZeroFraction = 0.20, kLogitTol = 1e-12, kControlTol = 0.005;
  Outcome o;
  const RecipeRun sparse = run_recipe("recipes/mnist_sparse.yaml");
  const Eigen::VectorXd lambda = sparse.trainer->lambda();
  const auto& net0 = sparse.trainer->network();
  Index channel_total = 0, channel_zero = 0;
  for (const auto& b : net0.scaling().bindings()) {
    if (b.granularity != scaling::Granularity::channel) continue;
    channel_total += b.length;
    channel_zero += (lambda.segment(b.offset, b.length).array() == 0.0).count();
  }
  const double frac = static_cast<double>(channel_zero) / static_cast<double>(channel_total);
  o.check(frac >= kZeroFraction, "exact zeros " + std::to_string(channel_zero) + "/" + std::to_string(channel_total) +
                                     " channel factors (" + num(frac, "%.3f") + " >= 0.20)");

  net::Network masked = net0;
  masked.lambda() = lambda;
  try {
    net::PruneResult pr = net::prune(masked, lambda);
    o.check(pr.report.after.flops < pr.report.before.flops,
            "pruned multiply-adds " + std::to_string(pr.report.after.flops) + " < " +
                std::to_string(pr.report.before.flops));
    const auto test = train::load_datasets(sparse.config.dataset).second;
    const double diff = testing::max_abs_diff(logits_over(masked, test), logits_over(pr.network, test));
    o.check(diff <= kLogitTol, "masked vs pruned logits over " + std::to_string(test.size()) +
                                   " test samples: max abs " + num(diff, "%.3e") + " <= 1e-12");
  } catch (const std::exception& e) {
    o.check(false, std::string("pruning failed: ") + e.what());
  }

  const RecipeRun control = run_recipe("recipes/mnist_control.yaml");
  const RecipeRun baseline = run_recipe("recipes/mnist_baseline.yaml");
  const double ec = control.trainer->metrics().back().test_error;
  const double eb = baseline.trainer->metrics().back().test_error;
  o.check(std::abs(ec - eb) <= kControlTol, "gamma=0 control error " + num(ec, "%.4f") + " vs no-scaling baseline " +
                                                num(eb, "%.4f") + " (|diff| <= 0.005)");
  o.check(control.trainer->lambda().cwiseEqual(0.0).count() == 0, "gamma=0 control keeps every factor nonzero");
  return o;
}

Outcome prune_equivalence() {
  constexpr double kTol = 1e-12;
  Outcome o;
  std::mt19937_64 rng(77);
  struct Case {
    const char* name;
    const char* spec;
    std::map<std::string, bool> zero_sites;  // sites forced entirely to zero
  };
  const Case cases[] = {
      {"channel", testing::kChannelNet, {}},
      {"group", testing::kGroupNet, {{"s1.b2.groups", true}, {"s2.b1.groups", true}}},
      {"block", testing::kBlockNet, {{"s1.b2", true}}},
      {"block+group", testing::kBlockGroupNet, {{"s1.b3", true}, {"s2.b1.groups", true}}},
  };
  for (const auto& c : cases) {
    net::Network net = net::instantiate(net::parse_spec(c.spec), {}, net::Materialize::weights, 9);
    testing::randomize_batchnorm(net, rng);
    Eigen::VectorXd lambda = testing::random_lambda(net, rng, 0.35);
    for (const auto& b : net.scaling().bindings()) {
      if (c.zero_sites.count(b.site)) lambda.segment(b.offset, b.length).setZero();
    }
    const Tensor x = testing::batch_for(net, 100, rng);
    const auto e = testing::masking_equivalence(net, lambda, x);
    o.check(e.pruned <= kTol && e.folded <= kTol && e.flops_after < e.flops_before,
            std::string(c.name) + ": masked vs pruned " + num(e.pruned, "%.3e") + ", masked vs folded " +
                num(e.folded, "%.3e") + " over 100 inputs; multiply-adds " + std::to_string(e.flops_before) +
                " -> " + std::to_string(e.flops_after));
  }
  return o;
}

Outcome determinism_and_resume() {
  Outcome o;
  const std::string recipe = "recipes/mnist_sparse.yaml";
  const auto dir = std::filesystem::temp_directory_path() / ("sss_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::vector<std::string> ckpts;
  const RecipeRun a = run_recipe(recipe, [&](const train::Trainer& t) {
    const auto path = (dir / ("epoch" + std::to_string(t.epoch()) + ".ckpt")).string();
    train::save_checkpoint(t.checkpoint(), path);
    ckpts.push_back(path);
  });
  const RecipeRun b = run_recipe(recipe);
  const std::string csv_a = train::metrics_csv(a.trainer->metrics());
  const std::string final_a = train::serialize_checkpoint(a.trainer->checkpoint());
  o.check(csv_a == train::metrics_csv(b.trainer->metrics()), "two seeded runs give byte-identical metrics CSV");
  o.check(final_a == train::serialize_checkpoint(b.trainer->checkpoint()),
          "two seeded runs give byte-identical final checkpoints");

  for (std::size_t k = 0; k + 1 < ckpts.size(); ++k) {
    const train::Checkpoint ck = train::load_checkpoint(ckpts[k]);
    auto [tr, te] = train::load_datasets(a.config.dataset);
    train::Trainer t = train::Trainer::resume(ck, std::move(tr), std::move(te));
    t.run();
    const bool same = train::metrics_csv(t.metrics()) == csv_a && train::serialize_checkpoint(t.checkpoint()) == final_a;
    o.check(same, "resume after epoch " + std::to_string(ck.epoch) + " matches the uninterrupted run bit-for-bit");
  }
  std::filesystem::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sss acceptance suite"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion number(s) to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "counter reproduction", 1.0, counter_reproduction},
      {2, "VGG16 conv5 share", 1.0, vgg_conv5_share},
      {3, "optimizer-form equivalence", 1.0, optimizer_forms},
      {4, "convex oracle agreement", 5.0, convex_oracle},
      {5, "gradient suite", 30.0, gradient_suite},
      {6, "exact-zero sparsification", 600.0, exact_zero_sparsification},
      {7, "prune/mask/fold equivalence", 30.0, prune_equivalence},
      {8, "determinism and checkpoint round-trip", 1200.0, determinism_and_resume},
  };

  bool all_pass = true;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < c.budget_seconds, "runtime " + num(secs, "%.2f") + " s < " + num(c.budget_seconds, "%.0f") + " s");
    for (const auto& l : o.lines) std::cout << "  " << l << "\n";
    std::cout << "criterion " << c.id << " " << c.title << ": " << (o.pass ? "PASS" : "FAIL") << "\n" << std::flush;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
