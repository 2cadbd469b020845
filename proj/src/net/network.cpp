// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/net/network.hpp"

#include "sss/core/errors.hpp"

#include <cmath>
#include <random>
#include <set>

namespace sss::net {

std::string channel_site(const std::string& stage) { return stage; }

std::string block_site(const std::string& stage, Index block) {
  return stage + ".b" + std::to_string(block);
}

std::string group_site(const std::string& stage, Index block) {
  return block_site(stage, block) + ".groups";
}

namespace {

using scaling::Granularity;
using scaling::StructureBinding;

bool needs_projection(Index in, Index out, Index stride) { return stride != 1 || in != out; }

// A channel site must feed something that can drop input channels: an
// ungrouped convolution (possibly behind pooling) or the classifier.
bool channel_consumer_ok(const NetworkSpec& spec, std::size_t stage) {
  for (std::size_t j = stage + 1; j < spec.stages.size(); ++j) {
    const Stage& s = spec.stages[j];
    if (std::holds_alternative<PoolStage>(s)) continue;
    if (const auto* c = std::get_if<ConvStage>(&s)) return c->groups == 1;
    return false;
  }
  return true;
}

void check_names(const NetworkSpec& spec) {
  std::set<std::string> seen;
  for (const auto& s : spec.stages) {
    const auto& n = stage_name(s);
    if (n.empty()) throw ValidationError("spec: every stage needs a name");
    if (n == "classifier") throw ValidationError("spec: 'classifier' is a reserved stage name");
    if (!seen.insert(n).second) throw ValidationError("spec: duplicate stage name '" + n + "'");
  }
  auto check = [&](const SiteSelector& sel, const char* what) {
    for (const auto& n : sel.names) {
      if (!seen.count(n)) {
        throw ValidationError(std::string("spec: ") + what + " scaling names unknown stage '" + n + "'");
      }
    }
  };
  check(spec.scaling.channel, "channel");
  check(spec.scaling.group, "group");
  check(spec.scaling.block, "block");
}

void check_residual(const ResidualStage& r) {
  const std::string w = "residual stage '" + r.name + "'";
  if (r.blocks <= 0 || r.out <= 0 || r.stride <= 0) {
    throw ValidationError(w + ": blocks, out and stride must be positive");
  }
  for (Index i = 0; i < r.blocks; ++i) {
    if (r.block == BlockKind::basic) {
      if (r.groups_of(i) != 1) throw ValidationError(w + ": basic blocks are not grouped");
      continue;
    }
    const Index width = r.width_of(i), groups = r.groups_of(i);
    if (width <= 0 || groups <= 0 || width % groups != 0) {
      throw ValidationError(w + ": block " + std::to_string(i + 1) + " width " + std::to_string(width) +
                            " must be a positive multiple of its " + std::to_string(groups) + " groups");
    }
  }
}

}  // namespace

std::vector<StructureBinding> scaling_layout(const NetworkSpec& spec) {
  check_names(spec);
  std::vector<StructureBinding> out;
  Index offset = 0;
  auto add = [&](Granularity g, std::string site, Index length) {
    out.push_back({g, std::move(site), offset, length});
    offset += length;
  };
  Index channels = spec.input.channels;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const Stage& stage = spec.stages[i];
    if (const auto* c = std::get_if<ConvStage>(&stage)) {
      if (spec.scaling.channel.selects(c->name)) {
        const bool named = !spec.scaling.channel.all;
        const bool ok = c->groups == 1 && channel_consumer_ok(spec, i);
        if (ok) {
          add(Granularity::channel, channel_site(c->name), c->out);
        } else if (named) {
          throw ValidationError("spec: channel scaling site '" + c->name +
                                "' must be an ungrouped convolution feeding an ungrouped convolution "
                                "or the classifier");
        }
      }
      channels = c->out;
    } else if (const auto* r = std::get_if<ResidualStage>(&stage)) {
      check_residual(*r);
      const bool group_sel = spec.scaling.group.selects(r->name);
      const bool block_sel = spec.scaling.block.selects(r->name);
      if (group_sel && r->block != BlockKind::bottleneck && !spec.scaling.group.all) {
        throw ValidationError("spec: group scaling site '" + r->name + "' is not a bottleneck stage");
      }
      Index in = channels;
      for (Index b = 0; b < r->blocks; ++b) {
        const Index stride = b == 0 ? r->stride : 1;
        const bool projection = needs_projection(in, r->out, stride);
        if (r->kept(b)) {
          if (group_sel && r->block == BlockKind::bottleneck) {
            add(Granularity::group, group_site(r->name, b + 1), r->groups_of(b));
          }
          if (block_sel && !projection) add(Granularity::block, block_site(r->name, b + 1), 1);
        }
        in = r->out;
      }
      channels = r->out;
    } else {
      const std::string& n = stage_name(stage);
      if ((!spec.scaling.channel.all && spec.scaling.channel.selects(n)) ||
          (!spec.scaling.group.all && spec.scaling.group.selects(n)) ||
          (!spec.scaling.block.all && spec.scaling.block.selects(n))) {
        throw ValidationError("spec: stage '" + n + "' carries no scalable structure");
      }
    }
  }
  return out;
}

Network::Network(NetworkSpec spec, std::vector<Unit> units, scaling::ScalingVector scaling,
                 bool materialized)
    : spec_(std::move(spec)),
      units_(std::move(units)),
      scaling_(std::move(scaling)),
      materialized_(materialized) {}

namespace {

class Builder {
 public:
  Builder(const NetworkSpec& spec, bool allocate, std::uint64_t seed)
      : spec_(spec), allocate_(allocate), rng_(seed) {}

  std::vector<Unit> build(const std::vector<StructureBinding>& bindings) {
    for (const auto& b : bindings) sites_[b.site] = b;
    shape_ = {1, spec_.input.channels, spec_.input.height, spec_.input.width};
    for (const Stage& stage : spec_.stages) {
      if (const auto* c = std::get_if<ConvStage>(&stage)) conv_stage(*c);
      else if (const auto* p = std::get_if<PoolStage>(&stage)) pool_stage(*p);
      else if (const auto* b = std::get_if<BnReluStage>(&stage)) bnrelu_stage(*b);
      else residual_stage(std::get<ResidualStage>(stage));
    }
    classifier();
    return std::move(units_);
  }

 private:
  nn::Conv2d conv(nn::Conv2d::Options o) {
    nn::Conv2d layer(o, allocate_);
    if (allocate_) {
      const double fan_in = static_cast<double>(o.in / o.groups * o.kernel * o.kernel);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (Index i = 0; i < layer.weight().size(); ++i) layer.weight()[i] = dist(rng_);
    }
    return layer;
  }

  nn::Linear linear(Index in, Index out, bool bias) {
    nn::Linear layer(in, out, bias, allocate_);
    if (allocate_) {
      std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(in)));
      for (Index i = 0; i < layer.weight().size(); ++i) layer.weight()[i] = dist(rng_);
    }
    return layer;
  }

  nn::BatchNorm2d bn(Index channels) { return nn::BatchNorm2d(channels, allocate_); }

  // Appends a layer to `u`, advancing the running shape.
  void push(Unit& u, nn::Layer layer) {
    shape_ = nn::output_shape(layer, shape_);
    u.layers.push_back(std::move(layer));
  }

  void conv_stage(const ConvStage& c) {
    if (c.out <= 0) throw ValidationError("conv stage '" + c.name + "': out must be positive");
    if (c.in && *c.in != shape_[1]) {
      throw ValidationError("conv stage '" + c.name + "': declares " + std::to_string(*c.in) +
                            " input channels but receives " + std::to_string(shape_[1]));
    }
    if (shape_[1] % c.groups != 0 || c.out % c.groups != 0) {
      throw ValidationError("conv stage '" + c.name + "': groups " + std::to_string(c.groups) +
                            " must divide input " + std::to_string(shape_[1]) + " and output " +
                            std::to_string(c.out));
    }
    Unit u;
    u.name = u.stage = c.name;
    push(u, conv({shape_[1], c.out, c.kernel, c.stride, c.padding(), c.groups, c.bias}));
    if (c.bn) push(u, bn(c.out));
    if (auto it = sites_.find(channel_site(c.name)); it != sites_.end()) {
      push(u, nn::ChannelScale(it->second.offset, c.out, 1));
    }
    if (c.relu) push(u, nn::ReLU{});
    units_.push_back(std::move(u));
  }

  void pool_stage(const PoolStage& p) {
    Unit u;
    u.name = u.stage = p.name;
    if (p.global) push(u, nn::AvgPool2d(0));
    else if (p.kind == PoolStage::Kind::max) push(u, nn::MaxPool2d(p.kernel, p.stride, p.pad));
    else {
      if (p.pad != 0) throw ValidationError("pool stage '" + p.name + "': average pooling takes no padding");
      push(u, nn::AvgPool2d(p.kernel, p.stride));
    }
    units_.push_back(std::move(u));
  }

  void bnrelu_stage(const BnReluStage& b) {
    Unit u;
    u.name = u.stage = b.name;
    push(u, bn(shape_[1]));
    push(u, nn::ReLU{});
    units_.push_back(std::move(u));
  }

  void residual_stage(const ResidualStage& r) {
    for (Index b = 0; b < r.blocks; ++b) {
      const Index in = shape_[1];
      const Index stride = b == 0 ? r.stride : 1;
      const bool projection = needs_projection(in, r.out, stride);
      if (!r.kept(b) && !projection) continue;

      Unit u;
      u.name = block_site(r.name, b + 1);
      u.stage = r.name;
      u.block = b + 1;
      u.kind = Unit::Kind::residual;
      const Shape in_shape = shape_;
      if (projection) {
        u.shortcut.emplace(conv({in, r.out, 1, stride, 0, 1, false}));
      }
      if (r.kept(b)) {
        push(u, bn(in));
        push(u, nn::ReLU{});
        if (r.block == BlockKind::basic) {
          push(u, conv({in, r.out, 3, stride, 1, 1, false}));
          push(u, bn(r.out));
          push(u, nn::ReLU{});
          push(u, conv({r.out, r.out, 3, 1, 1, 1, false}));
        } else {
          const Index w = r.width_of(b), g = r.groups_of(b);
          push(u, conv({in, w, 1, 1, 0, 1, false}));
          push(u, bn(w));
          push(u, nn::ReLU{});
          push(u, conv({w, w, 3, stride, 1, g, false}));
          push(u, bn(w));
          push(u, nn::ReLU{});
          if (auto it = sites_.find(group_site(r.name, b + 1)); it != sites_.end()) {
            push(u, nn::ChannelScale(it->second.offset, w, w / g));
          }
          push(u, conv({w, r.out, 1, 1, 0, 1, false}));
        }
        if (auto it = sites_.find(block_site(r.name, b + 1)); it != sites_.end()) {
          u.block_factor = it->second.offset;
        }
      } else {
        u.has_branch = false;
      }
      if (u.shortcut) {
        const Shape s = u.shortcut->output_shape(in_shape);
        if (u.has_branch && s != shape_) {
          throw ValidationError("block '" + u.name + "': projection output " + to_string(s) +
                                " does not match branch output " + to_string(shape_));
        }
        shape_ = s;
      }
      units_.push_back(std::move(u));
    }
  }

  void classifier() {
    const ClassifierSpec& c = spec_.classifier;
    if (c.classes <= 0) throw ValidationError("classifier: classes must be positive");
    Unit u;
    u.name = u.stage = "classifier";
    if (c.global_pool) push(u, nn::AvgPool2d(0));
    Index features = numel(shape_) / shape_[0];
    for (Index h : c.hidden) {
      if (h <= 0) throw ValidationError("classifier: hidden widths must be positive");
      push(u, linear(features, h, c.bias));
      push(u, nn::ReLU{});
      features = h;
    }
    push(u, linear(features, c.classes, c.bias));
    units_.push_back(std::move(u));
  }

  const NetworkSpec& spec_;
  bool allocate_;
  std::mt19937_64 rng_;
  std::map<std::string, StructureBinding> sites_;
  Shape shape_;
  std::vector<Unit> units_;
};

}  // namespace

Network instantiate(const NetworkSpec& spec, std::optional<ImageShape> input, Materialize materialize,
                    std::uint64_t seed) {
  NetworkSpec s = spec;
  if (input) s.input = *input;
  if (s.input.channels <= 0 || s.input.height <= 0 || s.input.width <= 0) {
    throw ValidationError("input shape must have positive extents");
  }
  auto bindings = scaling_layout(s);
  const bool allocate = materialize == Materialize::weights;
  Builder builder(s, allocate, seed);
  auto units = builder.build(bindings);
  return Network(std::move(s), std::move(units), scaling::ScalingVector(std::move(bindings)), allocate);
}

Tensor Network::forward(const Tensor& x, nn::Mode mode) {
  if (!materialized_) throw StateError("network: shapes-only network cannot run forward");
  const Shape expect{x.rank() == 4 ? x.dim(0) : 0, spec_.input.channels, spec_.input.height,
                     spec_.input.width};
  if (x.rank() != 4 || x.shape() != expect) {
    throw ValidationError("network: expected input [N, " + std::to_string(spec_.input.channels) + ", " +
                          std::to_string(spec_.input.height) + ", " + std::to_string(spec_.input.width) +
                          "], got " + to_string(x.shape()));
  }
  const Eigen::VectorXd& lam = scaling_.values();
  const nn::ForwardContext ctx{mode, std::span<const double>(lam.data(), static_cast<std::size_t>(lam.size()))};
  forward_lambda_.reset();
  Tensor h = x;
  for (Unit& u : units_) {
    if (u.kind == Unit::Kind::plain) {
      for (auto& layer : u.layers) h = nn::forward(layer, h, ctx);
      continue;
    }
    Tensor s = u.shortcut ? u.shortcut->forward(h, ctx) : h;
    if (!u.has_branch) {
      h = std::move(s);
      continue;
    }
    Tensor f = h;
    for (auto& layer : u.layers) f = nn::forward(layer, f, ctx);
    const double factor = u.block_factor ? lam[*u.block_factor] : 1.0;
    h = scaling::residual_combine(s, f, factor);
    u.branch_out = std::move(f);
  }
  forward_lambda_ = lam;
  return h;
}

NetworkGradients Network::backward(const Tensor& grad_logits) {
  if (!forward_lambda_) throw StateError("network: backward called without a cached forward");
  const Eigen::VectorXd& lam = scaling_.values();
  if (lam.size() != forward_lambda_->size() || lam != *forward_lambda_) {
    throw StateError("network: scaling vector changed since the cached forward");
  }
  NetworkGradients out;
  out.lambda = Eigen::VectorXd::Zero(lam.size());
  std::vector<std::vector<Tensor>> per_unit(units_.size());

  auto run_layers = [&](std::vector<nn::Layer>& layers, Tensor g, std::vector<Tensor>& grads) {
    std::vector<std::vector<Tensor>> per_layer(layers.size());
    for (std::size_t k = layers.size(); k-- > 0;) {
      auto bundle = nn::backward(layers[k], g);
      if (const auto* sc = std::get_if<nn::ChannelScale>(&layers[k])) {
        out.lambda.segment(sc->offset(), sc->factors()) += bundle.grad_params.at(0).values();
      } else {
        per_layer[k] = std::move(bundle.grad_params);
      }
      g = std::move(bundle.grad_input);
    }
    for (auto& v : per_layer) {
      for (auto& t : v) grads.push_back(std::move(t));
    }
    return g;
  };

  Tensor g = grad_logits;
  for (std::size_t i = units_.size(); i-- > 0;) {
    Unit& u = units_[i];
    if (u.kind == Unit::Kind::plain) {
      g = run_layers(u.layers, std::move(g), per_unit[i]);
      continue;
    }
    Tensor gin;
    std::vector<Tensor> shortcut_grads;
    if (u.shortcut) {
      auto bundle = u.shortcut->backward(g);
      gin = std::move(bundle.grad_input);
      shortcut_grads = std::move(bundle.grad_params);
    } else {
      gin = g;
    }
    if (u.has_branch) {
      if (!u.branch_out) throw StateError("network: block '" + u.name + "' has no cached branch output");
      double factor = 1.0;
      if (u.block_factor) {
        factor = lam[*u.block_factor];
        out.lambda[*u.block_factor] += scaling::residual_lambda_grad(*u.branch_out, g);
      }
      Tensor gb(g.shape(), Eigen::VectorXd(factor * g.values()));
      Tensor gx = run_layers(u.layers, std::move(gb), per_unit[i]);
      gin.values() += gx.values();
    }
    for (auto& t : shortcut_grads) per_unit[i].push_back(std::move(t));
    g = std::move(gin);
  }
  for (auto& v : per_unit) {
    for (auto& t : v) out.params.push_back(std::move(t));
  }
  forward_lambda_.reset();
  return out;
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (Unit& u : units_) {
    for (auto& layer : u.layers) {
      for (auto& t : nn::params(layer)) out.push_back(&t);
    }
    if (u.shortcut) {
      for (auto& t : u.shortcut->params()) out.push_back(&t);
    }
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (const Unit& u : units_) {
    for (const auto& layer : u.layers) {
      for (const auto& t : nn::params(layer)) out.push_back(&t);
    }
    if (u.shortcut) {
      for (const auto& t : u.shortcut->params()) out.push_back(&t);
    }
  }
  return out;
}

namespace {

void layer_param_names(const nn::Layer& layer, const std::string& prefix, std::vector<std::string>& out) {
  if (std::holds_alternative<nn::BatchNorm2d>(layer)) {
    if (nn::params(layer).empty()) return;
    out.push_back(prefix + ".gamma");
    out.push_back(prefix + ".beta");
    return;
  }
  const auto& p = nn::params(layer);
  if (!p.empty()) out.push_back(prefix + ".weight");
  if (p.size() > 1) out.push_back(prefix + ".bias");
}

}  // namespace

std::vector<std::string> Network::parameter_names() const {
  std::vector<std::string> out;
  for (const Unit& u : units_) {
    for (std::size_t k = 0; k < u.layers.size(); ++k) {
      layer_param_names(u.layers[k], u.name + "." + std::to_string(k) + "." + nn::kind_name(u.layers[k]), out);
    }
    if (u.shortcut) layer_param_names(nn::Layer(*u.shortcut), u.name + ".shortcut", out);
  }
  return out;
}

std::vector<Tensor*> Network::buffers() {
  std::vector<Tensor*> out;
  for (Unit& u : units_) {
    for (auto& layer : u.layers) {
      if (auto* b = std::get_if<nn::BatchNorm2d>(&layer)) {
        for (auto& t : b->buffers()) out.push_back(&t);
      }
    }
  }
  return out;
}

std::vector<const Tensor*> Network::buffers() const {
  std::vector<const Tensor*> out;
  for (const Unit& u : units_) {
    for (const auto& layer : u.layers) {
      if (const auto* b = std::get_if<nn::BatchNorm2d>(&layer)) {
        for (const auto& t : b->buffers()) out.push_back(&t);
      }
    }
  }
  return out;
}

std::vector<std::string> Network::buffer_names() const {
  std::vector<std::string> out;
  for (const Unit& u : units_) {
    for (std::size_t k = 0; k < u.layers.size(); ++k) {
      if (const auto* b = std::get_if<nn::BatchNorm2d>(&u.layers[k]); b && !b->buffers().empty()) {
        const std::string prefix = u.name + "." + std::to_string(k) + ".batchnorm";
        out.push_back(prefix + ".running_mean");
        out.push_back(prefix + ".running_var");
      }
    }
  }
  return out;
}

void Network::clear_caches() {
  for (Unit& u : units_) {
    for (auto& layer : u.layers) nn::clear_cache(layer);
    if (u.shortcut) u.shortcut->clear_cache();
    u.branch_out.reset();
  }
  forward_lambda_.reset();
}

Eigen::VectorXd gather_lambda_grads(Network& net, const Tensor& grad_logits) {
  return net.backward(grad_logits).lambda;
}

}  // namespace sss::net
