// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/net/prune.hpp"

#include "sss/core/errors.hpp"

#include <json.hpp>

#include <map>
#include <numeric>
#include <sstream>

namespace sss::net {

namespace {

using scaling::Granularity;
using scaling::StructureBinding;

std::vector<Index> survivors(const Eigen::VectorXd& lambda, const StructureBinding& b) {
  std::vector<Index> out;
  for (Index i = 0; i < b.length; ++i) {
    if (lambda[b.offset + i] != 0.0) out.push_back(i);
  }
  return out;
}

std::vector<Index> iota(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

std::map<std::string, StructureBinding> by_site(const std::vector<StructureBinding>& bindings) {
  std::map<std::string, StructureBinding> m;
  for (const auto& b : bindings) m[b.site] = b;
  return m;
}

void check_lambda(const std::vector<StructureBinding>& bindings, const Eigen::VectorXd& lambda) {
  Index total = 0;
  for (const auto& b : bindings) total += b.length;
  if (lambda.size() != total) {
    throw ValidationError("prune: scaling vector has " + std::to_string(lambda.size()) +
                          " entries, the network has " + std::to_string(total));
  }
  if (!lambda.allFinite()) throw NumericalError("prune: scaling vector is not finite");
}

}  // namespace

NetworkSpec prune_spec(const NetworkSpec& spec, const Eigen::VectorXd& lambda, bool allow_empty) {
  const auto bindings = scaling_layout(spec);
  check_lambda(bindings, lambda);
  const auto sites = by_site(bindings);
  auto find = [&](const std::string& site) -> const StructureBinding* {
    const auto it = sites.find(site);
    return it == sites.end() ? nullptr : &it->second;
  };

  NetworkSpec out = spec;
  out.scaling = {};
  for (Stage& stage : out.stages) {
    if (auto* c = std::get_if<ConvStage>(&stage)) {
      c->in.reset();
      if (const auto* b = find(channel_site(c->name))) {
        const auto kept = static_cast<Index>(survivors(lambda, *b).size());
        if (kept == 0 && !allow_empty) {
          throw ValidationError("prune: site '" + b->site + "' would lose all of its " +
                                std::to_string(b->length) + " channels");
        }
        c->out = kept;
      }
    } else if (auto* r = std::get_if<ResidualStage>(&stage)) {
      const auto n = static_cast<std::size_t>(r->blocks);
      std::vector<bool> keep(n);
      std::vector<Index> width(n), groups(n);
      for (Index i = 0; i < r->blocks; ++i) {
        const auto k = static_cast<std::size_t>(i);
        keep[k] = r->kept(i);
        width[k] = r->width_of(i);
        groups[k] = r->groups_of(i);
        if (!keep[k]) continue;
        if (const auto* g = find(group_site(r->name, i + 1))) {
          const auto kg = static_cast<Index>(survivors(lambda, *g).size());
          if (kg == 0) {
            keep[k] = false;
          } else {
            width[k] = width[k] / groups[k] * kg;
            groups[k] = kg;
          }
        }
        if (const auto* b = find(block_site(r->name, i + 1)); b && lambda[b->offset] == 0.0) keep[k] = false;
      }
      auto all_equal = [](const std::vector<Index>& v, Index x) {
        return std::all_of(v.begin(), v.end(), [x](Index e) { return e == x; });
      };
      r->keep = std::all_of(keep.begin(), keep.end(), [](bool k) { return k; }) ? std::vector<bool>{} : keep;
      r->block_width = all_equal(width, r->width) ? std::vector<Index>{} : width;
      r->block_groups = all_equal(groups, r->groups) ? std::vector<Index>{} : groups;
    }
  }
  return out;
}

PruneReport prune_report(const NetworkSpec& spec, const Eigen::VectorXd& lambda, bool allow_empty) {
  const auto bindings = scaling_layout(spec);
  check_lambda(bindings, lambda);
  PruneReport report;
  const CountBreakdown before = count(spec);
  report.before = before.total;
  report.stages_before = before.stages;

  Eigen::VectorXd partial = Eigen::VectorXd::Ones(lambda.size());
  Counts prev = before.total;
  for (const auto& b : bindings) {
    partial.segment(b.offset, b.length) = lambda.segment(b.offset, b.length);
    const Counts cur = count(prune_spec(spec, partial, allow_empty)).total;
    SiteReport row;
    row.site = b.site;
    row.granularity = b.granularity;
    row.total = b.length;
    row.survived = static_cast<Index>(survivors(lambda, b).size());
    row.params_removed = prev.params - cur.params;
    row.flops_removed = prev.flops - cur.flops;
    report.sites.push_back(row);
    prev = cur;
  }
  const CountBreakdown after = count(prune_spec(spec, lambda, allow_empty));
  report.after = after.total;
  report.stages_after = after.stages;
  return report;
}

std::string PruneReport::summary_json() const {
  nlohmann::ordered_json j;
  j["params_before"] = before.params;
  j["params_after"] = after.params;
  j["params_removed"] = before.params - after.params;
  j["flops_before"] = before.flops;
  j["flops_after"] = after.flops;
  j["flops_removed"] = before.flops - after.flops;
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& s : stages_before) {
    nlohmann::ordered_json e;
    e["stage"] = s.name;
    e["params_before"] = s.counts.params;
    e["flops_before"] = s.counts.flops;
    Counts a;
    for (const auto& t : stages_after) {
      if (t.name == s.name) a = t.counts;
    }
    e["params_after"] = a.params;
    e["flops_after"] = a.flops;
    stages.push_back(e);
  }
  j["stages"] = stages;
  return j.dump();
}

std::string PruneReport::to_csv() const {
  std::ostringstream os;
  os << "site,granularity,survived,params_removed,flops_removed\n";
  for (const auto& s : sites) {
    os << s.site << ',' << scaling::to_string(s.granularity) << ',' << s.survived << '/' << s.total << ','
       << s.params_removed << ',' << s.flops_removed << '\n';
  }
  os << summary_json() << '\n';
  return os.str();
}

namespace {

template <typename L>
L& nth(std::vector<nn::Layer>& layers, int k) {
  for (auto& l : layers) {
    if (auto* p = std::get_if<L>(&l); p && k-- == 0) return *p;
  }
  throw StateError("prune: unit layout does not match its spec");
}

template <typename L>
const L& nth(const std::vector<nn::Layer>& layers, int k) {
  for (const auto& l : layers) {
    if (const auto* p = std::get_if<L>(&l); p && k-- == 0) return *p;
  }
  throw StateError("prune: unit layout does not match its spec");
}

// dst.weight[o, i, :, :] = src.weight[rows[o], cols[i], :, :]
void copy_conv(const nn::Conv2d& src, nn::Conv2d& dst, const std::vector<Index>& rows,
               const std::vector<Index>& cols) {
  const Shape& s = src.weight().shape();
  const Index kk = s[2] * s[3];
  const auto nr = static_cast<Index>(rows.size()), nc = static_cast<Index>(cols.size());
  if (dst.weight().shape() != Shape{nr, nc, s[2], s[3]}) {
    throw StateError("prune: convolution shape mismatch during surgery");
  }
  for (Index o = 0; o < nr; ++o) {
    for (Index i = 0; i < nc; ++i) {
      const double* from = src.weight().data() + (rows[o] * s[1] + cols[i]) * kk;
      std::copy(from, from + kk, dst.weight().data() + (o * nc + i) * kk);
    }
  }
  if (src.has_bias()) {
    for (Index o = 0; o < nr; ++o) dst.params()[1][o] = src.params()[1][rows[o]];
  }
}

void copy_bn(const nn::BatchNorm2d& src, nn::BatchNorm2d& dst, const std::vector<Index>& idx) {
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      dst.params()[t][static_cast<Index>(k)] = src.params()[t][idx[k]];
      dst.buffers()[t][static_cast<Index>(k)] = src.buffers()[t][idx[k]];
    }
  }
}

class Surgeon {
 public:
  Surgeon(const Network& src, Network& dst, const Eigen::VectorXd& lambda, bool keep_all)
      : src_(src), dst_(dst), lambda_(lambda), keep_all_(keep_all), sites_(by_site(src.scaling().bindings())) {
    for (Unit& u : dst_.units()) dst_units_[u.name] = &u;
  }

  void run() {
    alive_ = iota(src_.spec().input.channels);
    channels_ = src_.spec().input.channels;
    std::map<std::string, const Stage*> stages;
    for (const Stage& s : src_.spec().stages) stages[stage_name(s)] = &s;
    for (const Unit& u : src_.units()) {
      if (u.name == "classifier") {
        classifier(u);
        continue;
      }
      const Stage& stage = *stages.at(u.stage);
      if (const auto* c = std::get_if<ConvStage>(&stage)) conv_unit(*c, u);
      else if (std::holds_alternative<BnReluStage>(stage)) bnrelu_unit(u);
      else if (const auto* r = std::get_if<ResidualStage>(&stage)) block_unit(*r, u);
    }
  }

 private:
  Unit& target(const std::string& name) {
    const auto it = dst_units_.find(name);
    if (it == dst_units_.end()) throw StateError("prune: unit '" + name + "' missing from pruned network");
    return *it->second;
  }

  std::vector<Index> kept(const StructureBinding& b) const {
    return keep_all_ ? iota(b.length) : survivors(lambda_, b);
  }

  const StructureBinding* site(const std::string& name) const {
    const auto it = sites_.find(name);
    return it == sites_.end() ? nullptr : &it->second;
  }

  void conv_unit(const ConvStage& c, const Unit& u) {
    Unit& p = target(u.name);
    const auto& sc = nth<nn::Conv2d>(u.layers, 0);
    auto& pc = nth<nn::Conv2d>(p.layers, 0);
    std::vector<Index> rows = iota(c.out);
    Eigen::VectorXd factor = Eigen::VectorXd::Ones(c.out);
    if (const auto* b = site(channel_site(c.name))) {
      rows = kept(*b);
      factor = lambda_.segment(b->offset, b->length);
    }
    const std::vector<Index> cols = c.groups == 1 ? alive_ : iota(channels_ / c.groups);
    if (c.groups != 1 && static_cast<Index>(alive_.size()) != channels_) {
      throw StateError("prune: grouped convolution '" + c.name + "' lost input channels");
    }
    copy_conv(sc, pc, rows, cols);
    if (c.bn) {
      const auto& sb = nth<nn::BatchNorm2d>(u.layers, 0);
      auto& pb = nth<nn::BatchNorm2d>(p.layers, 0);
      copy_bn(sb, pb, rows);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double f = factor[rows[k]];
        pb.params()[0][static_cast<Index>(k)] *= f;
        pb.params()[1][static_cast<Index>(k)] *= f;
      }
    } else {
      const Index per_row = pc.weight().size() / std::max<Index>(1, pc.weight().dim(0));
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double f = factor[rows[k]];
        pc.weight().values().segment(static_cast<Index>(k) * per_row, per_row) *= f;
        if (pc.has_bias()) pc.params()[1][static_cast<Index>(k)] *= f;
      }
    }
    alive_ = rows;
    channels_ = c.out;
  }

  void bnrelu_unit(const Unit& u) {
    Unit& p = target(u.name);
    copy_bn(nth<nn::BatchNorm2d>(u.layers, 0), nth<nn::BatchNorm2d>(p.layers, 0), alive_);
  }

  void block_unit(const ResidualStage& r, const Unit& u) {
    if (static_cast<Index>(alive_.size()) != channels_) {
      throw StateError("prune: residual block '" + u.name + "' lost input channels");
    }
    alive_ = iota(r.out);
    channels_ = r.out;
    const auto it = dst_units_.find(u.name);
    if (it == dst_units_.end()) return;  // dropped identity block
    Unit& p = *it->second;
    if (u.shortcut) {
      const Index in = u.shortcut->options().in;
      copy_conv(*u.shortcut, *p.shortcut, iota(r.out), iota(in));
    }
    if (!p.has_branch) return;

    const double block = u.block_factor ? lambda_[*u.block_factor] : 1.0;
    const auto& s0 = nth<nn::BatchNorm2d>(u.layers, 0);
    copy_bn(s0, nth<nn::BatchNorm2d>(p.layers, 0), iota(s0.channels()));
    if (r.block == BlockKind::basic) {
      const auto& c1 = nth<nn::Conv2d>(u.layers, 0);
      copy_conv(c1, nth<nn::Conv2d>(p.layers, 0), iota(c1.options().out), iota(c1.options().in));
      const auto& b1 = nth<nn::BatchNorm2d>(u.layers, 1);
      copy_bn(b1, nth<nn::BatchNorm2d>(p.layers, 1), iota(b1.channels()));
      const auto& c2 = nth<nn::Conv2d>(u.layers, 1);
      auto& d2 = nth<nn::Conv2d>(p.layers, 1);
      copy_conv(c2, d2, iota(c2.options().out), iota(c2.options().in));
      d2.weight().values() *= block;
      return;
    }

    const auto& c1 = nth<nn::Conv2d>(u.layers, 0);
    const auto& c2 = nth<nn::Conv2d>(u.layers, 1);
    const auto& c3 = nth<nn::Conv2d>(u.layers, 2);
    const Index w = c2.options().out, g = c2.options().groups, gs = w / g;
    Eigen::VectorXd scale = Eigen::VectorXd::Constant(w, block);
    std::vector<Index> channels = iota(w);
    if (const auto* b = site(group_site(u.stage, u.block))) {
      channels.clear();
      for (Index k : kept(*b)) {
        for (Index j = 0; j < gs; ++j) channels.push_back(k * gs + j);
      }
      for (Index ch = 0; ch < w; ++ch) scale[ch] *= lambda_[b->offset + ch / gs];
    }
    copy_conv(c1, nth<nn::Conv2d>(p.layers, 0), channels, iota(c1.options().in));
    copy_bn(nth<nn::BatchNorm2d>(u.layers, 1), nth<nn::BatchNorm2d>(p.layers, 1), channels);
    copy_conv(c2, nth<nn::Conv2d>(p.layers, 1), channels, iota(gs));
    copy_bn(nth<nn::BatchNorm2d>(u.layers, 2), nth<nn::BatchNorm2d>(p.layers, 2), channels);
    auto& d3 = nth<nn::Conv2d>(p.layers, 2);
    copy_conv(c3, d3, iota(c3.options().out), channels);
    const auto cols = static_cast<Index>(channels.size());
    MatrixMap m = d3.weight().matrix(c3.options().out, cols);
    for (Index k = 0; k < cols; ++k) m.col(k) *= scale[channels[static_cast<std::size_t>(k)]];
  }

  void classifier(const Unit& u) {
    Unit& p = target(u.name);
    const bool global = src_.spec().classifier.global_pool;
    int k = 0;
    for (const auto& layer : u.layers) {
      const auto* sl = std::get_if<nn::Linear>(&layer);
      if (!sl) continue;
      auto& dl = nth<nn::Linear>(p.layers, k);
      if (k++ == 0) {
        const Index per = global ? 1 : sl->in() / channels_;
        std::vector<Index> cols;
        for (Index c : alive_) {
          for (Index j = 0; j < per; ++j) cols.push_back(c * per + j);
        }
        const ConstMatrixMap from = sl->weight().matrix(sl->out(), sl->in());
        MatrixMap to = dl.weight().matrix(dl.out(), dl.in());
        for (std::size_t j = 0; j < cols.size(); ++j) to.col(static_cast<Index>(j)) = from.col(cols[j]);
      } else {
        dl.weight() = sl->weight();
      }
      if (sl->has_bias()) dl.params()[1] = sl->params()[1];
    }
  }

  const Network& src_;
  Network& dst_;
  const Eigen::VectorXd& lambda_;
  bool keep_all_;
  std::map<std::string, StructureBinding> sites_;
  std::map<std::string, Unit*> dst_units_;
  std::vector<Index> alive_;
  Index channels_ = 0;
};

}  // namespace

PruneResult prune(const Network& net, const Eigen::VectorXd& lambda) {
  if (!net.materialized()) throw StateError("prune: network has no weights");
  PruneResult result{instantiate(prune_spec(net.spec(), lambda), net.spec().input), prune_report(net.spec(), lambda)};
  Surgeon(net, result.network, lambda, false).run();
  return result;
}

Network fold_scaling(const Network& net, const Eigen::VectorXd& lambda) {
  if (!net.materialized()) throw StateError("fold: network has no weights");
  check_lambda(net.scaling().bindings(), lambda);
  Network out = instantiate(prune_spec(net.spec(), Eigen::VectorXd::Ones(lambda.size())), net.spec().input);
  Surgeon(net, out, lambda, true).run();
  return out;
}

}  // namespace sss::net
