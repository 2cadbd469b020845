// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/cli/cli.hpp"
#include "sss/net/counting.hpp"
#include "sss/net/spec.hpp"
#include "sss/train/metrics.hpp"
#include "support/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace sss::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sss");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("sss_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write_config(double gamma, int epochs) {
    const std::string path = (dir / "run.yaml").string();
    std::ofstream(path) << "format: sss-train-v1\n"
                        << "spec: " << testing::source_path("specs/toy_mnist.sss") << "\n"
                        << "dataset: {kind: mnist, path: " << testing::source_path("data/mnist-subset")
                        << ", train_limit: 100, test_limit: 50}\n"
                        << "batch_size: 25\nepochs: " << epochs << "\nlr: 0.01\n"
                        << "sparse: {gamma: " << gamma << ", eta: 0.01, mu: 0.9}\nseed: 3\n";
    return path;
  }

  fs::path dir;
};

TEST_F(CliTest, NoArgumentsIsUsageError) {
  const Result r = invoke({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error:", 0), 0u) << r.err;
}

TEST_F(CliTest, HelpSucceeds) {
  const Result r = invoke({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("count"), std::string::npos);
}

TEST_F(CliTest, UnknownOptionIsUsageError) {
  const Result r = invoke({"count", "--bogus"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
}

TEST_F(CliTest, CountPrintsLibraryTotals) {
  const std::string spec = testing::source_path("specs/resnet20.sss");
  const Result r = invoke({"count", "--spec", spec});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto c = net::count(net::load_spec(spec));
  EXPECT_NE(r.out.find("params=" + std::to_string(c.total.params) + "\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("flops_madd=" + std::to_string(c.total.flops) + "\n"), std::string::npos) << r.out;
}

TEST_F(CliTest, CountHonoursInputShapeAndStages) {
  const std::string spec = testing::source_path("specs/toy_mnist.sss");
  const Result r = invoke({"count", "--spec", spec, "--input-shape", "14x14x1", "--stages"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto c = net::count(net::load_spec(spec), net::ImageShape{1, 14, 14});
  EXPECT_NE(r.out.find("flops_madd=" + std::to_string(c.total.flops) + "\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("stage conv1 "), std::string::npos) << r.out;
}

TEST_F(CliTest, MissingSpecIsValidationError) {
  const Result r = invoke({"count", "--spec", (dir / "absent.sss").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error:", 0), 0u) << r.err;
}

TEST_F(CliTest, VerifyOptimPasses) {
  const Result r = invoke({"verify-optim"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, TrainRejectsConfigAndResumeTogether) {
  const Result r = invoke({"train", "--config", write_config(0.0, 1), "--resume", "x", "--out",
                           (dir / "o").string()});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(CliTest, TrainStopResumeAndPrune) {
  const std::string cfg = write_config(0.0, 2);
  const std::string out = (dir / "run").string();
  Result r = invoke({"train", "--config", cfg, "--out", out, "--stop-after", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("epoch 1 "), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("epoch 2 "), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(fs::path(out) / "config.yaml"));
  EXPECT_EQ(train::parse_metrics_csv(slurp(fs::path(out) / "metrics.csv")).size(), 1u);

  r = invoke({"train", "--resume", out + "/checkpoint.ckpt", "--out", out});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("epoch 2 "), std::string::npos) << r.out;
  const auto metrics = train::parse_metrics_csv(slurp(fs::path(out) / "metrics.csv"));
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics.back().nonzero_lambda, 24);

  const std::string pruned = (dir / "pruned.ckpt").string();
  r = invoke({"prune", "--checkpoint", out + "/checkpoint.ckpt", "--out", pruned});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(pruned));
  std::istringstream report(slurp(pruned + ".report.csv"));
  std::string line;
  std::getline(report, line);
  EXPECT_EQ(line, "site,granularity,survived,params_removed,flops_removed");
  for (int row = 0; row < 2; ++row) {
    ASSERT_TRUE(std::getline(report, line));
    EXPECT_EQ(line.substr(line.size() - 4), ",0,0") << line;
  }
  ASSERT_TRUE(std::getline(report, line));
  EXPECT_NE(line.find("\"params_removed\":0,"), std::string::npos) << line;
  EXPECT_FALSE(std::getline(report, line));

  const std::string csv = (dir / "curve.csv").string();
  r = invoke({"report", "--metrics", out + "/metrics.csv", "--out", csv});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(csv), train::error_vs_flops_csv(metrics));
}

TEST_F(CliTest, PruneRejectsCorruptCheckpoint) {
  const std::string bad = (dir / "bad.ckpt").string();
  std::ofstream(bad) << "not a checkpoint at all";
  const Result r = invoke({"prune", "--checkpoint", bad, "--out", (dir / "p").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error: validation:", 0), 0u) << r.err;
}

}  // namespace
}  // namespace sss::cli
