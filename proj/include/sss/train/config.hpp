// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sss::train {

struct DatasetConfig {
  enum class Kind { mnist, cifar10 };
  Kind kind = Kind::mnist;
  std::string path;
  std::int64_t train_limit = -1;  // -1: all samples
  std::int64_t test_limit = -1;
  std::array<double, 3> mean{0.4914, 0.4822, 0.4465};  // cifar10 only
  std::array<double, 3> std{0.2470, 0.2435, 0.2616};
};

struct SparseConfig {
  enum class Penalty { uniform, flops };
  double gamma = 0.0;  // base penalty
  double eta = 0.01;
  double mu = 0.9;
  Penalty penalty = Penalty::uniform;
};

struct TrainConfig {
  enum class Order { weights_first, lambda_first };

  std::string spec;  // path, relative to the config file's directory
  DatasetConfig dataset;
  std::int64_t batch_size = 64;
  std::int64_t epochs = 10;
  double lr = 0.1;
  std::vector<std::int64_t> milestones;  // lr divided by 10 from each of these epochs on
  double momentum = 0.9;
  double weight_decay = 1e-4;
  SparseConfig sparse;
  bool scaling = true;  // false: train the network spec with its scaling sites removed
  std::uint64_t seed = 1;
  bool augmentation = false;
  std::int64_t eval_every = 1;
  Order order = Order::weights_first;

  /// Throws ValidationError on out-of-range values.
  void validate() const;
  /// Learning rate in effect during the 0-based `epoch`.
  double lr_at(std::int64_t epoch) const;
};

inline constexpr const char* kTrainFormat = "sss-train-v1";

TrainConfig parse_train_config(const std::string& text);
/// Relative spec and dataset paths are resolved against the file's directory.
TrainConfig load_train_config(const std::string& path);
/// Every field written out, defaults included.
std::string write_train_config(const TrainConfig& config);

}  // namespace sss::train
