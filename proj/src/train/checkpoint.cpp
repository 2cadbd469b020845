// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/train/checkpoint.hpp"

#include "sss/core/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace sss::train {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(in[at + i])} << (8 * i);
  return v;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double from_bits(std::uint64_t v) { return std::bit_cast<double>(v); }

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  if (const Tensor* t = find(name)) return *t;
  throw ValidationError("checkpoint: no tensor named '" + name + "'");
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json m;
  m["kind"] = ckpt.kind;
  m["epoch"] = ckpt.epoch;
  m["apg_iteration"] = ckpt.apg_iteration;
  m["rng_state"] = ckpt.rng_state;
  m["spec"] = ckpt.spec_text;
  m["config"] = ckpt.config_text;
  auto& metrics = m["metrics"] = nlohmann::ordered_json::array();
  for (const auto& r : ckpt.metrics) {
    // Doubles travel as IEEE bit patterns so NaN and every last bit survive.
    metrics.push_back({r.epoch, bits(r.train_loss), bits(r.test_error), r.nonzero_lambda, r.params_if_pruned,
                       r.flops_if_pruned, bits(r.objective)});
  }
  auto& tensors = m["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : ckpt.tensors) {
    tensors.push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"dtype", "f64"}});
  }
  const std::string manifest = m.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u64(out, manifest.size());
  out += manifest;
  for (const auto& t : ckpt.tensors) {
    const auto* p = reinterpret_cast<const char*>(t.tensor.data());
    out.append(p, static_cast<std::size_t>(t.tensor.size()) * sizeof(double));
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16) throw FormatError("checkpoint: truncated header", bytes.size());
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError("checkpoint: bad magic, expected SSSCKPT1", 0);
  }
  const std::uint64_t len = get_u64(bytes, 8);
  if (len > bytes.size() - 16) throw FormatError("checkpoint: manifest runs past end of file", 8);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed manifest: ") + e.what(), 16);
  }
  Checkpoint c;
  std::size_t at = 16 + len;
  try {
    c.kind = m.at("kind").get<std::string>();
    c.epoch = m.at("epoch").get<std::int64_t>();
    c.apg_iteration = m.at("apg_iteration").get<std::int64_t>();
    c.rng_state = m.at("rng_state").get<std::string>();
    c.spec_text = m.at("spec").get<std::string>();
    c.config_text = m.at("config").get<std::string>();
    for (const auto& r : m.at("metrics")) {
      EpochRecord e;
      e.epoch = r.at(0).get<std::int64_t>();
      e.train_loss = from_bits(r.at(1).get<std::uint64_t>());
      e.test_error = from_bits(r.at(2).get<std::uint64_t>());
      e.nonzero_lambda = r.at(3).get<std::int64_t>();
      e.params_if_pruned = r.at(4).get<std::int64_t>();
      e.flops_if_pruned = r.at(5).get<std::int64_t>();
      e.objective = from_bits(r.at(6).get<std::uint64_t>());
      c.metrics.push_back(e);
    }
    for (const auto& t : m.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "f64") {
        throw FormatError("checkpoint: unsupported dtype for '" + t.at("name").get<std::string>() + "'", 16);
      }
      Shape shape = t.at("shape").get<Shape>();
      for (Index d : shape) {
        if (d <= 0) throw FormatError("checkpoint: non-positive extent in manifest", 16);
      }
      const auto count = static_cast<std::size_t>(numel(shape));
      if (bytes.size() - at < count * sizeof(double)) {
        throw FormatError("checkpoint: payload for '" + t.at("name").get<std::string>() + "' is truncated", at);
      }
      Tensor tensor(shape);
      std::memcpy(tensor.data(), bytes.data() + at, count * sizeof(double));
      at += count * sizeof(double);
      c.tensors.push_back({t.at("name").get<std::string>(), std::move(tensor)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: manifest is missing fields: ") + e.what(), 16);
  }
  if (at != bytes.size()) throw FormatError("checkpoint: trailing bytes after the last payload", at);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("cannot write checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  return parse_checkpoint(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

}  // namespace sss::train
