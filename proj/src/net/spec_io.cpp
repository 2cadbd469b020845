// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/errors.hpp"
#include "sss/net/spec.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace sss::net {

ImageShape parse_image_shape(const std::string& hxwxc) {
  ImageShape s;
  char x1 = 0, x2 = 0;
  long long h = 0, w = 0, c = 0;
  std::istringstream is(hxwxc);
  if (!(is >> h >> x1 >> w >> x2 >> c) || x1 != 'x' || x2 != 'x' || !is.eof() || h <= 0 || w <= 0 ||
      c <= 0) {
    throw ValidationError("input shape must look like HxWxC with positive extents, got '" + hxwxc + "'");
  }
  s.height = h;
  s.width = w;
  s.channels = c;
  return s;
}

std::string format_image_shape(const ImageShape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

const std::string& stage_name(const Stage& s) {
  return std::visit([](const auto& st) -> const std::string& { return st.name; }, s);
}

bool SiteSelector::selects(const std::string& stage) const {
  if (all) return true;
  for (const auto& n : names) {
    if (n == stage) return true;
  }
  return false;
}

std::optional<double> penalty_override(const NetworkSpec& spec, const std::string& site) {
  if (auto it = spec.penalty_overrides.find(site); it != spec.penalty_overrides.end()) return it->second;
  std::optional<double> best;
  std::size_t best_len = 0;
  for (const auto& [key, value] : spec.penalty_overrides) {
    if (key.empty() || key.back() != '*') continue;
    const std::string prefix = key.substr(0, key.size() - 1);
    if (site.compare(0, prefix.size(), prefix) == 0 && (!best || prefix.size() > best_len)) {
      best = value;
      best_len = prefix.size();
    }
  }
  return best;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("spec " + where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) fail(where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T get(const YAML::Node& node, const char* key, const std::string& where, std::optional<T> fallback = {}) {
  const YAML::Node v = node[key];
  if (!v) {
    if (fallback) return *fallback;
    fail(where, std::string("missing key '") + key + "'");
  }
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    fail(where, std::string("bad value for '") + key + "'");
  }
}

Index get_index(const YAML::Node& node, const char* key, const std::string& where,
                std::optional<Index> fallback = {}) {
  return static_cast<Index>(get<long long>(node, key, where,
                                           fallback ? std::optional<long long>(*fallback) : std::nullopt));
}

std::vector<bool> parse_keep(const std::string& s, const std::string& where) {
  std::vector<bool> keep;
  for (char c : s) {
    if (c == '1') keep.push_back(true);
    else if (c == '0') keep.push_back(false);
    else fail(where, "keep mask may only contain 0 and 1");
  }
  return keep;
}

std::vector<Index> parse_index_list(const YAML::Node& n, const std::string& where) {
  if (!n) return {};
  if (!n.IsSequence()) fail(where, "expected a list of integers");
  std::vector<Index> out;
  for (const auto& e : n) out.push_back(static_cast<Index>(e.as<long long>()));
  return out;
}

SiteSelector parse_selector(const YAML::Node& n, const std::string& where) {
  SiteSelector s;
  if (!n || n.IsNull()) return s;
  if (n.IsScalar()) {
    const auto v = n.as<std::string>();
    if (v == "all") s.all = true;
    else if (v != "none") fail(where, "expected 'all', 'none' or a list of stage names");
    return s;
  }
  if (!n.IsSequence()) fail(where, "expected 'all', 'none' or a list of stage names");
  for (const auto& e : n) s.names.push_back(e.as<std::string>());
  return s;
}

Stage parse_stage(const YAML::Node& node, std::size_t index) {
  const std::string where = "stage " + std::to_string(index);
  if (!node.IsMap() || node.size() != 1) fail(where, "each stage is a single-key mapping {kind: {...}}");
  const auto kind = node.begin()->first.as<std::string>();
  const YAML::Node body = node.begin()->second;
  const std::string w = where + " (" + kind + ")";
  if (kind == "conv") {
    check_keys(body, {"name", "out", "kernel", "stride", "pad", "groups", "bn", "relu", "bias", "in"}, w);
    ConvStage s;
    s.name = get<std::string>(body, "name", w);
    s.out = get_index(body, "out", w);
    s.kernel = get_index(body, "kernel", w, 3);
    s.stride = get_index(body, "stride", w, 1);
    s.pad = get_index(body, "pad", w, -1);
    s.groups = get_index(body, "groups", w, 1);
    s.bn = get<bool>(body, "bn", w, true);
    s.relu = get<bool>(body, "relu", w, true);
    s.bias = get<bool>(body, "bias", w, false);
    if (body["in"]) s.in = get_index(body, "in", w);
    return s;
  }
  if (kind == "maxpool" || kind == "avgpool") {
    check_keys(body, {"name", "kernel", "stride", "pad", "global"}, w);
    PoolStage s;
    s.kind = kind == "maxpool" ? PoolStage::Kind::max : PoolStage::Kind::avg;
    s.name = get<std::string>(body, "name", w, std::string(kind) + std::to_string(index));
    s.global = get<bool>(body, "global", w, false);
    s.kernel = get_index(body, "kernel", w, s.global ? 0 : 2);
    s.stride = get_index(body, "stride", w, s.kernel);
    s.pad = get_index(body, "pad", w, 0);
    if (s.global && s.kind == PoolStage::Kind::max) fail(w, "global pooling is average pooling");
    return s;
  }
  if (kind == "bnrelu") {
    check_keys(body, {"name"}, w);
    return BnReluStage{get<std::string>(body, "name", w)};
  }
  if (kind == "residual") {
    check_keys(body, {"name", "block", "blocks", "width", "out", "stride", "groups", "keep",
                      "block_width", "block_groups"},
               w);
    ResidualStage s;
    s.name = get<std::string>(body, "name", w);
    const auto block = get<std::string>(body, "block", w, std::string("basic"));
    if (block == "basic") s.block = BlockKind::basic;
    else if (block == "bottleneck") s.block = BlockKind::bottleneck;
    else fail(w, "block must be 'basic' or 'bottleneck'");
    s.blocks = get_index(body, "blocks", w);
    s.out = get_index(body, "out", w);
    s.width = get_index(body, "width", w, s.out);
    s.stride = get_index(body, "stride", w, 1);
    s.groups = get_index(body, "groups", w, 1);
    if (body["keep"]) s.keep = parse_keep(get<std::string>(body, "keep", w), w);
    s.block_width = parse_index_list(body["block_width"], w);
    s.block_groups = parse_index_list(body["block_groups"], w);
    const auto n = static_cast<std::size_t>(s.blocks);
    if (!s.keep.empty() && s.keep.size() != n) fail(w, "keep mask length must equal blocks");
    if (!s.block_width.empty() && s.block_width.size() != n) fail(w, "block_width length must equal blocks");
    if (!s.block_groups.empty() && s.block_groups.size() != n) fail(w, "block_groups length must equal blocks");
    return s;
  }
  fail(where, "unknown stage kind '" + kind + "'");
}

}  // namespace

NetworkSpec parse_spec(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("spec: malformed document: ") + e.what());
  }
  check_keys(root, {"format", "name", "input", "stages", "classifier", "scaling", "penalty_overrides"},
             "document");
  if (get<std::string>(root, "format", "document") != kSpecFormat) {
    fail("document", std::string("format header must be '") + kSpecFormat + "'");
  }
  NetworkSpec spec;
  spec.name = get<std::string>(root, "name", "document", std::string("network"));
  spec.input = parse_image_shape(get<std::string>(root, "input", "document", std::string("224x224x3")));
  const YAML::Node stages = root["stages"];
  if (!stages || !stages.IsSequence() || stages.size() == 0) fail("document", "stages must be a non-empty list");
  for (std::size_t i = 0; i < stages.size(); ++i) spec.stages.push_back(parse_stage(stages[i], i));

  const YAML::Node cls = root["classifier"];
  if (!cls) fail("document", "missing classifier");
  check_keys(cls, {"pool", "hidden", "classes", "bias"}, "classifier");
  const auto pool = get<std::string>(cls, "pool", "classifier", std::string("flatten"));
  if (pool != "global" && pool != "flatten") fail("classifier", "pool must be 'global' or 'flatten'");
  spec.classifier.global_pool = pool == "global";
  spec.classifier.hidden = parse_index_list(cls["hidden"], "classifier");
  spec.classifier.classes = get_index(cls, "classes", "classifier");
  spec.classifier.bias = get<bool>(cls, "bias", "classifier", true);

  if (const YAML::Node sc = root["scaling"]) {
    check_keys(sc, {"channel", "group", "block"}, "scaling");
    spec.scaling.channel = parse_selector(sc["channel"], "scaling.channel");
    spec.scaling.group = parse_selector(sc["group"], "scaling.group");
    spec.scaling.block = parse_selector(sc["block"], "scaling.block");
  }
  if (const YAML::Node po = root["penalty_overrides"]) {
    if (!po.IsMap()) fail("penalty_overrides", "expected a mapping of site -> multiplier");
    for (const auto& kv : po) {
      const double v = kv.second.as<double>();
      if (!(v >= 0.0)) fail("penalty_overrides", "multipliers must be non-negative");
      spec.penalty_overrides[kv.first.as<std::string>()] = v;
    }
  }
  return spec;
}

NetworkSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

namespace {

void emit_selector(YAML::Emitter& out, const char* key, const SiteSelector& s) {
  out << YAML::Key << key << YAML::Value;
  if (s.all) out << "all";
  else if (s.names.empty()) out << "none";
  else out << YAML::Flow << s.names;
}

std::string keep_string(const std::vector<bool>& keep) {
  std::string s;
  for (bool k : keep) s += k ? '1' : '0';
  return s;
}

std::vector<long long> as_ll(const std::vector<Index>& v) { return {v.begin(), v.end()}; }

}  // namespace

std::string write_spec(const NetworkSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << kSpecFormat;
  out << YAML::Key << "name" << YAML::Value << spec.name;
  out << YAML::Key << "input" << YAML::Value << format_image_shape(spec.input);
  out << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
  for (const auto& stage : spec.stages) {
    out << YAML::BeginMap;
    if (const auto* c = std::get_if<ConvStage>(&stage)) {
      out << YAML::Key << "conv" << YAML::Value << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << c->name << YAML::Key << "out" << YAML::Value
          << static_cast<long long>(c->out) << YAML::Key << "kernel" << YAML::Value
          << static_cast<long long>(c->kernel) << YAML::Key << "stride" << YAML::Value
          << static_cast<long long>(c->stride) << YAML::Key << "pad" << YAML::Value
          << static_cast<long long>(c->padding()) << YAML::Key << "groups" << YAML::Value
          << static_cast<long long>(c->groups) << YAML::Key << "bn" << YAML::Value << c->bn << YAML::Key
          << "relu" << YAML::Value << c->relu << YAML::Key << "bias" << YAML::Value << c->bias;
      out << YAML::EndMap;
    } else if (const auto* p = std::get_if<PoolStage>(&stage)) {
      out << YAML::Key << (p->kind == PoolStage::Kind::max ? "maxpool" : "avgpool") << YAML::Value
          << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << p->name;
      if (p->global) {
        out << YAML::Key << "global" << YAML::Value << true;
      } else {
        out << YAML::Key << "kernel" << YAML::Value << static_cast<long long>(p->kernel) << YAML::Key
            << "stride" << YAML::Value << static_cast<long long>(p->stride) << YAML::Key << "pad"
            << YAML::Value << static_cast<long long>(p->pad);
      }
      out << YAML::EndMap;
    } else if (const auto* b = std::get_if<BnReluStage>(&stage)) {
      out << YAML::Key << "bnrelu" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "name"
          << YAML::Value << b->name << YAML::EndMap;
    } else {
      const auto& r = std::get<ResidualStage>(stage);
      out << YAML::Key << "residual" << YAML::Value << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << r.name << YAML::Key << "block" << YAML::Value
          << (r.block == BlockKind::basic ? "basic" : "bottleneck") << YAML::Key << "blocks" << YAML::Value
          << static_cast<long long>(r.blocks) << YAML::Key << "width" << YAML::Value
          << static_cast<long long>(r.width) << YAML::Key << "out" << YAML::Value
          << static_cast<long long>(r.out) << YAML::Key << "stride" << YAML::Value
          << static_cast<long long>(r.stride) << YAML::Key << "groups" << YAML::Value
          << static_cast<long long>(r.groups);
      if (!r.keep.empty()) out << YAML::Key << "keep" << YAML::Value << YAML::DoubleQuoted << keep_string(r.keep);
      if (!r.block_width.empty()) out << YAML::Key << "block_width" << YAML::Value << YAML::Flow << as_ll(r.block_width);
      if (!r.block_groups.empty()) out << YAML::Key << "block_groups" << YAML::Value << YAML::Flow << as_ll(r.block_groups);
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "classifier" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "pool" << YAML::Value << (spec.classifier.global_pool ? "global" : "flatten");
  out << YAML::Key << "hidden" << YAML::Value << YAML::Flow << as_ll(spec.classifier.hidden);
  out << YAML::Key << "classes" << YAML::Value << static_cast<long long>(spec.classifier.classes);
  out << YAML::Key << "bias" << YAML::Value << spec.classifier.bias;
  out << YAML::EndMap;
  out << YAML::Key << "scaling" << YAML::Value << YAML::BeginMap;
  emit_selector(out, "channel", spec.scaling.channel);
  emit_selector(out, "group", spec.scaling.group);
  emit_selector(out, "block", spec.scaling.block);
  out << YAML::EndMap;
  if (!spec.penalty_overrides.empty()) {
    out << YAML::Key << "penalty_overrides" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : spec.penalty_overrides) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace sss::net
