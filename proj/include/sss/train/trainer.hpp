// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/net/network.hpp"
#include "sss/optim/apg.hpp"
#include "sss/optim/nag.hpp"
#include "sss/train/checkpoint.hpp"
#include "sss/train/config.hpp"
#include "sss/train/data.hpp"
#include "sss/train/metrics.hpp"

#include <functional>
#include <random>

namespace sss::train {

/// Eval-mode error of `net` (at its current scaling vector) on `data`.
double evaluate(net::Network& net, const Dataset& data, Index batch_size = 500);

/// Loads the train and test splits a config points at, honouring limits.
std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& config);

/// The network spec actually trained: scaling sites removed when the config turns
/// scaling off.
net::NetworkSpec training_spec(const net::NetworkSpec& spec, const TrainConfig& config);

/// Joint training of the weights (Nesterov momentum with weight decay) and
/// the scaling factors (proximal lookahead updates). Each iteration runs one
/// forward/backward pass with the network evaluated at lambda', then updates
/// both from that pass.
class Trainer {
 public:
  Trainer(TrainConfig config, const net::NetworkSpec& spec, Dataset train, Dataset test);

  /// Continues the run a "train" checkpoint was taken from.
  static Trainer resume(const Checkpoint& ckpt, Dataset train, Dataset test);

  EpochRecord run_epoch();
  /// Runs until `config().epochs` (or `stop_after` more epochs, if given).
  void run(const std::function<void(const Trainer&, const EpochRecord&)>& on_epoch = {},
           std::int64_t stop_after = -1);

  bool finished() const noexcept { return epoch_ >= config_.epochs; }
  std::int64_t epoch() const noexcept { return epoch_; }
  const TrainConfig& config() const noexcept { return config_; }
  net::Network& network() noexcept { return net_; }
  const net::Network& network() const noexcept { return net_; }
  const optim::ApgState& apg() const noexcept { return apg_; }
  const optim::SparseRegConfig& sparse() const noexcept { return sparse_; }
  const optim::NagWeightState& nag() const noexcept { return nag_; }
  const std::vector<EpochRecord>& metrics() const noexcept { return metrics_; }

  /// lambda = lambda' - mu * v, the iterate that pruning and metrics use.
  Eigen::VectorXd lambda() const;

  Checkpoint checkpoint() const;

 private:
  Trainer(TrainConfig config, net::Network net, Dataset train, Dataset test);
  void step(std::span<const Index> batch, double& loss_sum);

  TrainConfig config_;
  net::Network net_;
  Dataset train_;
  Dataset test_;
  optim::SparseRegConfig sparse_;
  optim::ApgState apg_;
  optim::NagWeightState nag_;
  std::mt19937_64 rng_;
  std::int64_t epoch_ = 0;
  std::vector<EpochRecord> metrics_;
};

/// Network stored in a checkpoint, weights and buffers restored. For "train"
/// checkpoints the scaling vector is set to the recovered lambda.
net::Network restore_network(const Checkpoint& ckpt);

/// Recovered lambda of a "train" checkpoint (empty for "model" ones).
Eigen::VectorXd checkpoint_lambda(const Checkpoint& ckpt);

/// "model" checkpoint holding just `net`.
Checkpoint model_checkpoint(const net::Network& net);

}  // namespace sss::train
