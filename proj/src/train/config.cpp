// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/train/config.hpp"

#include "sss/core/errors.hpp"
#include "sss/train/metrics.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sss::train {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("train config: " + what); };
  if (spec.empty()) fail("spec path is required");
  if (dataset.path.empty()) fail("dataset path is required");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (epochs <= 0) fail("epochs must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] <= 0 || milestones[i] >= epochs) fail("milestones must lie in (0, epochs)");
    if (i > 0 && milestones[i] <= milestones[i - 1]) fail("milestones must be strictly increasing");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (!(sparse.gamma >= 0.0) || !std::isfinite(sparse.gamma)) fail("sparse.gamma must be non-negative");
  if (!(sparse.eta > 0.0) || !std::isfinite(sparse.eta)) fail("sparse.eta must be positive");
  if (!(sparse.mu >= 0.0 && sparse.mu < 1.0)) fail("sparse.mu must lie in [0, 1)");
  if (eval_every <= 0) fail("eval_every must be positive");
  for (double s : dataset.std) {
    if (!(s > 0.0)) fail("dataset.std entries must be positive");
  }
}

double TrainConfig::lr_at(std::int64_t epoch) const {
  double r = lr;
  for (auto m : milestones) {
    if (epoch >= m) r /= 10.0;
  }
  return r;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("train config " + where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) fail(where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (const YAML::Node v = node[key]) {
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(where, std::string("bad value for '") + key + "'");
    }
  }
}

void read_triple(const YAML::Node& node, const char* key, std::array<double, 3>& out, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (!v.IsSequence() || v.size() != 3) fail(where, std::string("'") + key + "' must list 3 values");
  for (std::size_t i = 0; i < 3; ++i) out[i] = v[i].as<double>();
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("train config: malformed document: ") + e.what());
  }
  check_keys(root, {"format", "spec", "dataset", "batch_size", "epochs", "lr", "milestones", "momentum",
                    "weight_decay", "sparse", "scaling", "seed", "augmentation", "eval_every", "order"},
             "document");
  std::string format;
  read(root, "format", format, "document");
  if (format != kTrainFormat) fail("document", std::string("format header must be '") + kTrainFormat + "'");

  TrainConfig c;
  read(root, "spec", c.spec, "document");
  const YAML::Node ds = root["dataset"];
  if (!ds) fail("document", "missing dataset");
  check_keys(ds, {"kind", "path", "train_limit", "test_limit", "mean", "std"}, "dataset");
  std::string kind = "mnist";
  read(ds, "kind", kind, "dataset");
  if (kind == "mnist") c.dataset.kind = DatasetConfig::Kind::mnist;
  else if (kind == "cifar10") c.dataset.kind = DatasetConfig::Kind::cifar10;
  else fail("dataset", "kind must be 'mnist' or 'cifar10'");
  read(ds, "path", c.dataset.path, "dataset");
  read(ds, "train_limit", c.dataset.train_limit, "dataset");
  read(ds, "test_limit", c.dataset.test_limit, "dataset");
  read_triple(ds, "mean", c.dataset.mean, "dataset");
  read_triple(ds, "std", c.dataset.std, "dataset");

  read(root, "batch_size", c.batch_size, "document");
  read(root, "epochs", c.epochs, "document");
  read(root, "lr", c.lr, "document");
  read(root, "milestones", c.milestones, "document");
  read(root, "momentum", c.momentum, "document");
  read(root, "weight_decay", c.weight_decay, "document");
  if (const YAML::Node sp = root["sparse"]) {
    check_keys(sp, {"gamma", "eta", "mu", "penalty"}, "sparse");
    read(sp, "gamma", c.sparse.gamma, "sparse");
    read(sp, "eta", c.sparse.eta, "sparse");
    read(sp, "mu", c.sparse.mu, "sparse");
    std::string penalty = "uniform";
    read(sp, "penalty", penalty, "sparse");
    if (penalty == "uniform") c.sparse.penalty = SparseConfig::Penalty::uniform;
    else if (penalty == "flops") c.sparse.penalty = SparseConfig::Penalty::flops;
    else fail("sparse", "penalty must be 'uniform' or 'flops'");
  }
  read(root, "scaling", c.scaling, "document");
  read(root, "seed", c.seed, "document");
  read(root, "augmentation", c.augmentation, "document");
  read(root, "eval_every", c.eval_every, "document");
  std::string order = "weights_first";
  read(root, "order", order, "document");
  if (order == "weights_first") c.order = TrainConfig::Order::weights_first;
  else if (order == "lambda_first") c.order = TrainConfig::Order::lambda_first;
  else fail("document", "order must be 'weights_first' or 'lambda_first'");
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open train config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  TrainConfig c = parse_train_config(ss.str());
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.spec);
  resolve(c.dataset.path);
  return c;
}

std::string write_train_config(const TrainConfig& c) {
  auto numbers = [](const std::array<double, 3>& v) {
    return std::vector<std::string>{format_double(v[0]), format_double(v[1]), format_double(v[2])};
  };
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << kTrainFormat;
  out << YAML::Key << "spec" << YAML::Value << c.spec;
  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << (c.dataset.kind == DatasetConfig::Kind::mnist ? "mnist" : "cifar10");
  out << YAML::Key << "path" << YAML::Value << c.dataset.path;
  out << YAML::Key << "train_limit" << YAML::Value << c.dataset.train_limit;
  out << YAML::Key << "test_limit" << YAML::Value << c.dataset.test_limit;
  out << YAML::Key << "mean" << YAML::Value << YAML::Flow << numbers(c.dataset.mean);
  out << YAML::Key << "std" << YAML::Value << YAML::Flow << numbers(c.dataset.std);
  out << YAML::EndMap;
  out << YAML::Key << "batch_size" << YAML::Value << c.batch_size;
  out << YAML::Key << "epochs" << YAML::Value << c.epochs;
  out << YAML::Key << "lr" << YAML::Value << format_double(c.lr);
  out << YAML::Key << "milestones" << YAML::Value << YAML::Flow << c.milestones;
  out << YAML::Key << "momentum" << YAML::Value << format_double(c.momentum);
  out << YAML::Key << "weight_decay" << YAML::Value << format_double(c.weight_decay);
  out << YAML::Key << "sparse" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gamma" << YAML::Value << format_double(c.sparse.gamma);
  out << YAML::Key << "eta" << YAML::Value << format_double(c.sparse.eta);
  out << YAML::Key << "mu" << YAML::Value << format_double(c.sparse.mu);
  out << YAML::Key << "penalty" << YAML::Value
      << (c.sparse.penalty == SparseConfig::Penalty::uniform ? "uniform" : "flops");
  out << YAML::EndMap;
  out << YAML::Key << "scaling" << YAML::Value << c.scaling;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "augmentation" << YAML::Value << c.augmentation;
  out << YAML::Key << "eval_every" << YAML::Value << c.eval_every;
  out << YAML::Key << "order" << YAML::Value
      << (c.order == TrainConfig::Order::weights_first ? "weights_first" : "lambda_first");
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace sss::train
