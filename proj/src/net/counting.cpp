// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/net/counting.hpp"

#include "sss/core/errors.hpp"

#include <set>

namespace sss::net {

namespace {

struct Map {
  Index c, h, w;
};

Counts conv_cost(Index in, Index out, Index kernel, Index groups, bool bias, Index ho, Index wo) {
  if (groups <= 0) throw ValidationError("count: groups must be positive");
  const std::int64_t weights = static_cast<std::int64_t>(out) * (in / groups) * kernel * kernel;
  return {weights + (bias ? out : 0), weights * ho * wo};
}

Counts bn_cost(Index channels) { return {2 * static_cast<std::int64_t>(channels), 0}; }

class Counter {
 public:
  explicit Counter(const NetworkSpec& spec) : spec_(spec) {}

  CountBreakdown run() {
    for (const auto& b : scaling_layout(spec_)) sites_.insert(b.site);
    Map m{spec_.input.channels, spec_.input.height, spec_.input.width};
    for (const Stage& stage : spec_.stages) {
      Counts stage_total;
      if (const auto* c = std::get_if<ConvStage>(&stage)) {
        const Index ho = nn::window_extent(m.h, c->kernel, c->stride, c->padding(), "conv2d");
        const Index wo = nn::window_extent(m.w, c->kernel, c->stride, c->padding(), "conv2d");
        Counts u = conv_cost(m.c, c->out, c->kernel, c->groups, c->bias, ho, wo);
        if (sites_.count(channel_site(c->name))) out_.site_flops[channel_site(c->name)] = u.flops;
        if (c->bn) u += bn_cost(c->out);
        m = {c->out, ho, wo};
        unit(c->name, u, stage_total);
      } else if (const auto* p = std::get_if<PoolStage>(&stage)) {
        if (p->global) {
          m.h = m.w = 1;
        } else {
          m.h = nn::window_extent(m.h, p->kernel, p->stride, p->pad, "pool");
          m.w = nn::window_extent(m.w, p->kernel, p->stride, p->pad, "pool");
        }
        unit(p->name, {}, stage_total);
      } else if (const auto* b = std::get_if<BnReluStage>(&stage)) {
        unit(b->name, bn_cost(m.c), stage_total);
      } else {
        m = residual(std::get<ResidualStage>(stage), m, stage_total);
      }
      out_.stages.push_back({stage_name(stage), stage_total});
      out_.total += stage_total;
    }
    Counts head;
    Index features = spec_.classifier.global_pool ? m.c : m.c * m.h * m.w;
    auto linear = [&](Index in, Index out) {
      const std::int64_t w = static_cast<std::int64_t>(in) * out;
      head += Counts{w + (spec_.classifier.bias ? out : 0), w};
    };
    for (Index hdim : spec_.classifier.hidden) {
      linear(features, hdim);
      features = hdim;
    }
    linear(features, spec_.classifier.classes);
    out_.units.push_back({"classifier", head});
    out_.stages.push_back({"classifier", head});
    out_.total += head;
    return std::move(out_);
  }

 private:
  void unit(const std::string& name, const Counts& c, Counts& stage_total) {
    out_.units.push_back({name, c});
    stage_total += c;
  }

  Map residual(const ResidualStage& r, Map m, Counts& stage_total) {
    for (Index b = 0; b < r.blocks; ++b) {
      const Index stride = b == 0 ? r.stride : 1;
      const bool projection = stride != 1 || m.c != r.out;
      if (!r.kept(b) && !projection) continue;
      const Index ho = nn::window_extent(m.h, 3, stride, 1, "residual block");
      const Index wo = nn::window_extent(m.w, 3, stride, 1, "residual block");
      Counts branch;
      if (r.kept(b)) {
        branch += bn_cost(m.c);
        if (r.block == BlockKind::basic) {
          branch += conv_cost(m.c, r.out, 3, 1, false, ho, wo);
          branch += bn_cost(r.out);
          branch += conv_cost(r.out, r.out, 3, 1, false, ho, wo);
        } else {
          const Index w = r.width_of(b), g = r.groups_of(b);
          branch += conv_cost(m.c, w, 1, 1, false, m.h, m.w);
          branch += bn_cost(w);
          branch += conv_cost(w, w, 3, g, false, ho, wo);
          branch += bn_cost(w);
          branch += conv_cost(w, r.out, 1, 1, false, ho, wo);
        }
      }
      const std::string name = block_site(r.name, b + 1);
      if (sites_.count(group_site(r.name, b + 1))) out_.site_flops[group_site(r.name, b + 1)] = branch.flops;
      if (sites_.count(name)) out_.site_flops[name] = branch.flops;
      Counts u = branch;
      if (projection) u += conv_cost(m.c, r.out, 1, 1, false, ho, wo);
      unit(name, u, stage_total);
      m = {r.out, ho, wo};
    }
    return m;
  }

  const NetworkSpec& spec_;
  std::set<std::string> sites_;
  CountBreakdown out_;
};

}  // namespace

CountBreakdown count(const NetworkSpec& spec, std::optional<ImageShape> input) {
  if (!input) return Counter(spec).run();
  NetworkSpec s = spec;
  s.input = *input;
  return Counter(s).run();
}

std::int64_t count_params(const Network& net) { return count(net.spec()).total.params; }

std::int64_t count_flops(const Network& net, std::optional<ImageShape> input) {
  return count(net.spec(), input).total.flops;
}

std::map<std::string, double> uniform_penalty(const NetworkSpec& spec, double base_gamma) {
  if (!(base_gamma >= 0.0)) throw ValidationError("penalty: base gamma must be non-negative");
  std::map<std::string, double> out;
  for (const auto& b : scaling_layout(spec)) {
    out[b.site] = base_gamma * penalty_override(spec, b.site).value_or(1.0);
  }
  return out;
}

std::map<std::string, double> apply_flops_weighted_penalty(const NetworkSpec& spec, double base_gamma) {
  if (!(base_gamma >= 0.0)) throw ValidationError("penalty: base gamma must be non-negative");
  const auto bindings = scaling_layout(spec);
  std::map<std::string, double> out;
  if (bindings.empty()) return out;
  const CountBreakdown counts = count(spec);
  double mean = 0.0;
  for (const auto& b : bindings) mean += static_cast<double>(counts.site_flops.at(b.site));
  mean /= static_cast<double>(bindings.size());
  for (const auto& b : bindings) {
    const double share = mean > 0.0 ? static_cast<double>(counts.site_flops.at(b.site)) / mean : 1.0;
    out[b.site] = base_gamma * share * penalty_override(spec, b.site).value_or(1.0);
  }
  return out;
}

Eigen::VectorXd expand_penalty(const std::vector<scaling::StructureBinding>& bindings,
                               const std::map<std::string, double>& per_site) {
  Index total = 0;
  for (const auto& b : bindings) total += b.length;
  Eigen::VectorXd gamma(total);
  for (const auto& b : bindings) {
    const auto it = per_site.find(b.site);
    if (it == per_site.end()) throw ValidationError("penalty: no weight for site '" + b.site + "'");
    gamma.segment(b.offset, b.length).setConstant(it->second);
  }
  return gamma;
}

}  // namespace sss::net
