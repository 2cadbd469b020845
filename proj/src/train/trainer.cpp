// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/train/trainer.hpp"

#include "sss/core/errors.hpp"
#include "sss/net/counting.hpp"
#include "sss/net/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sss::train {

double evaluate(net::Network& net, const Dataset& data, Index batch_size) {
  if (data.size() == 0) throw ValidationError("evaluate: empty dataset");
  Index wrong = 0;
  std::vector<Index> idx;
  for (Index start = 0; start < data.size(); start += batch_size) {
    const Index end = std::min(data.size(), start + batch_size);
    idx.resize(static_cast<std::size_t>(end - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = net.forward(data.batch(idx), nn::Mode::eval);
    const auto labels = data.batch_labels(idx);
    wrong += static_cast<Index>(std::llround(error_rate(logits, labels) * static_cast<double>(idx.size())));
  }
  net.clear_caches();
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& c) {
  Dataset train, test;
  if (c.kind == DatasetConfig::Kind::mnist) {
    train = load_mnist_dir(c.path, true);
    test = load_mnist_dir(c.path, false);
  } else {
    train = load_cifar10_dir(c.path, true, c.mean, c.std);
    test = load_cifar10_dir(c.path, false, c.mean, c.std);
  }
  if (c.train_limit >= 0) train.truncate(c.train_limit);
  if (c.test_limit >= 0) test.truncate(c.test_limit);
  return {std::move(train), std::move(test)};
}

net::NetworkSpec training_spec(const net::NetworkSpec& spec, const TrainConfig& config) {
  net::NetworkSpec s = spec;
  if (!config.scaling) s.scaling = {};
  return s;
}

namespace {

constexpr std::uint64_t kDataStream = 0xda7a5eedULL;

optim::SparseRegConfig sparse_config(const TrainConfig& c, const net::Network& net) {
  const auto per_site = c.sparse.penalty == SparseConfig::Penalty::flops
                            ? net::apply_flops_weighted_penalty(net.spec(), c.sparse.gamma)
                            : net::uniform_penalty(net.spec(), c.sparse.gamma);
  optim::SparseRegConfig s{net::expand_penalty(net.scaling().bindings(), per_site), c.sparse.eta, c.sparse.mu};
  s.validate(net.lambda().size());
  return s;
}

void require_finite_named(const std::vector<Tensor*>& tensors, const std::vector<std::string>& names,
                          const std::string& what) {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!tensors[i]->all_finite()) throw NumericalError("non-finite values in " + what + " '" + names[i] + "'");
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, const net::NetworkSpec& spec, Dataset train, Dataset test)
    : Trainer(config, net::instantiate(training_spec(spec, config), {}, net::Materialize::weights, config.seed),
              std::move(train), std::move(test)) {}

Trainer::Trainer(TrainConfig config, net::Network net, Dataset train, Dataset test)
    : config_(std::move(config)),
      net_(std::move(net)),
      train_(std::move(train)),
      test_(std::move(test)),
      rng_(config_.seed ^ kDataStream) {
  config_.validate();
  const auto& in = net_.spec().input;
  for (const Dataset* d : {&train_, &test_}) {
    if (!(d->shape == in)) {
      throw ValidationError("train: dataset images are " + net::format_image_shape(d->shape) +
                            " but the network expects " + net::format_image_shape(in));
    }
    if (d->size() == 0) throw ValidationError("train: empty dataset split");
  }
  sparse_ = sparse_config(config_, net_);
  apg_ = optim::ApgState::start(net_.lambda());
  nag_ = optim::NagWeightState::zeros_like(net_.parameters(), config_.lr, config_.momentum, config_.weight_decay);
}

Eigen::VectorXd Trainer::lambda() const { return optim::recovered_lambda(apg_, sparse_.mu); }

void Trainer::step(std::span<const Index> batch, double& loss_sum) {
  Tensor x = augment(train_.batch(batch), rng_, config_.augmentation);
  const auto labels = train_.batch_labels(batch);
  net_.lambda() = apg_.lambda_prime;
  const Tensor logits = net_.forward(x, nn::Mode::train);
  auto params = net_.parameters();
  if (!logits.all_finite()) {
    require_finite_named(params, net_.parameter_names(), "parameter");
    throw NumericalError("non-finite values in 'logits' at epoch " + std::to_string(epoch_ + 1));
  }
  const auto loss = nn::cross_entropy_loss(logits, labels);
  if (!std::isfinite(loss.loss)) throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch_ + 1));
  auto grads = net_.backward(loss.grad_logits);
  for (std::size_t i = 0; i < grads.params.size(); ++i) {
    if (!grads.params[i].all_finite()) {
      throw NumericalError("non-finite values in gradient of '" + net_.parameter_names()[i] + "'");
    }
  }
  if (!grads.lambda.allFinite()) throw NumericalError("non-finite values in the scaling-factor gradient");

  auto update_weights = [&] { optim::nag_weight_step(nag_, params, grads.params); };
  auto update_lambda = [&] {
    if (apg_.lambda_prime.size() > 0) apg_ = optim::apg_nag_update(apg_, grads.lambda, sparse_);
  };
  if (config_.order == TrainConfig::Order::weights_first) {
    update_weights();
    update_lambda();
  } else {
    update_lambda();
    update_weights();
  }
  loss_sum += loss.loss * static_cast<double>(batch.size());
}

EpochRecord Trainer::run_epoch() {
  if (finished()) throw StateError("train: all configured epochs are done");
  nag_.learning_rate = config_.lr_at(epoch_);
  std::vector<Index> order(static_cast<std::size_t>(train_.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng_);
  double loss_sum = 0.0;
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t len = std::min(bs, order.size() - start);
    step(std::span<const Index>(order.data() + start, len), loss_sum);
  }
  net_.clear_caches();
  ++epoch_;

  EpochRecord r;
  r.epoch = epoch_;
  r.train_loss = loss_sum / static_cast<double>(train_.size());
  const Eigen::VectorXd lam = lambda();
  r.nonzero_lambda = (lam.array() != 0.0).count();
  const auto counts = net::count(net::prune_spec(net_.spec(), lam, true)).total;
  r.params_if_pruned = counts.params;
  r.flops_if_pruned = counts.flops;
  r.test_error = std::nan("");
  if (epoch_ % config_.eval_every == 0 || finished()) {
    net_.lambda() = lam;
    r.test_error = evaluate(net_, test_);
  }
  net_.lambda() = apg_.lambda_prime;
  double wsq = 0.0;
  for (const Tensor* p : std::as_const(net_).parameters()) wsq += p->values().squaredNorm();
  r.objective = r.train_loss + 0.5 * config_.weight_decay * wsq + sparse_.gamma.dot(lam.cwiseAbs());
  if (!std::isfinite(r.objective)) throw NumericalError("non-finite objective at epoch " + std::to_string(epoch_));
  metrics_.push_back(r);
  return r;
}

void Trainer::run(const std::function<void(const Trainer&, const EpochRecord&)>& on_epoch,
                  std::int64_t stop_after) {
  std::int64_t done = 0;
  while (!finished() && (stop_after < 0 || done < stop_after)) {
    const EpochRecord r = run_epoch();
    ++done;
    if (on_epoch) on_epoch(*this, r);
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.kind = "train";
  c.spec_text = net::write_spec(net_.spec());
  c.config_text = write_train_config(config_);
  c.epoch = epoch_;
  c.apg_iteration = apg_.iteration;
  std::ostringstream rs;
  rs << rng_;
  c.rng_state = rs.str();
  const auto params = net_.parameters();
  const auto names = net_.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) c.tensors.push_back({"param/" + names[i], *params[i]});
  const auto buffers = net_.buffers();
  const auto bnames = net_.buffer_names();
  for (std::size_t i = 0; i < buffers.size(); ++i) c.tensors.push_back({"buffer/" + bnames[i], *buffers[i]});
  for (std::size_t i = 0; i < nag_.velocity.size(); ++i) c.tensors.push_back({"nag/" + names[i], nag_.velocity[i]});
  if (apg_.lambda_prime.size() > 0) {
    const Index s = apg_.lambda_prime.size();
    c.tensors.push_back({"apg/lambda_prime", Tensor(Shape{s}, apg_.lambda_prime)});
    c.tensors.push_back({"apg/velocity", Tensor(Shape{s}, apg_.velocity)});
  }
  c.metrics = metrics_;
  return c;
}

namespace {

void restore_weights(net::Network& net, const Checkpoint& ckpt) {
  auto copy = [&](const std::vector<Tensor*>& dst, const std::vector<std::string>& names, const char* prefix) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const Tensor& src = ckpt.get(prefix + names[i]);
      if (src.shape() != dst[i]->shape()) {
        throw ValidationError("checkpoint: tensor '" + names[i] + "' has shape " + to_string(src.shape()) +
                              ", expected " + to_string(dst[i]->shape()));
      }
      *dst[i] = src;
    }
  };
  copy(net.parameters(), net.parameter_names(), "param/");
  copy(net.buffers(), net.buffer_names(), "buffer/");
}

}  // namespace

Trainer Trainer::resume(const Checkpoint& ckpt, Dataset train, Dataset test) {
  if (ckpt.kind != "train") throw ValidationError("checkpoint: a '" + ckpt.kind + "' checkpoint cannot resume training");
  const TrainConfig config = parse_train_config(ckpt.config_text);
  net::Network net = net::instantiate(net::parse_spec(ckpt.spec_text));
  restore_weights(net, ckpt);
  Trainer t(config, std::move(net), std::move(train), std::move(test));
  const auto names = t.net_.parameter_names();
  for (std::size_t i = 0; i < names.size(); ++i) t.nag_.velocity[i] = ckpt.get("nag/" + names[i]);
  if (t.apg_.lambda_prime.size() > 0) {
    t.apg_.lambda_prime = ckpt.get("apg/lambda_prime").values();
    t.apg_.velocity = ckpt.get("apg/velocity").values();
    if (t.apg_.lambda_prime.size() != t.net_.lambda().size()) {
      throw ValidationError("checkpoint: scaling state does not match the network");
    }
  }
  t.apg_.iteration = ckpt.apg_iteration;
  std::istringstream rs(ckpt.rng_state);
  rs >> t.rng_;
  if (!rs) throw ValidationError("checkpoint: unreadable rng state");
  t.epoch_ = ckpt.epoch;
  t.metrics_ = ckpt.metrics;
  t.net_.lambda() = t.apg_.lambda_prime;
  return t;
}

Eigen::VectorXd checkpoint_lambda(const Checkpoint& ckpt) {
  if (ckpt.kind != "train" || !ckpt.find("apg/lambda_prime")) return {};
  const TrainConfig config = parse_train_config(ckpt.config_text);
  optim::ApgState s;
  s.lambda_prime = ckpt.get("apg/lambda_prime").values();
  s.velocity = ckpt.get("apg/velocity").values();
  return optim::recovered_lambda(s, config.sparse.mu);
}

net::Network restore_network(const Checkpoint& ckpt) {
  net::Network net = net::instantiate(net::parse_spec(ckpt.spec_text));
  restore_weights(net, ckpt);
  const Eigen::VectorXd lam = checkpoint_lambda(ckpt);
  if (lam.size() > 0) {
    if (lam.size() != net.lambda().size()) throw ValidationError("checkpoint: scaling state does not match the network");
    net.lambda() = lam;
  }
  return net;
}

Checkpoint model_checkpoint(const net::Network& net) {
  Checkpoint c;
  c.kind = "model";
  c.spec_text = net::write_spec(net.spec());
  const auto params = net.parameters();
  const auto names = net.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) c.tensors.push_back({"param/" + names[i], *params[i]});
  const auto buffers = net.buffers();
  const auto bnames = net.buffer_names();
  for (std::size_t i = 0; i < buffers.size(); ++i) c.tensors.push_back({"buffer/" + bnames[i], *buffers[i]});
  return c;
}

}  // namespace sss::train
