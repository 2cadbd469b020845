// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"
#include "sss/train/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sss::train {

inline constexpr char kCheckpointMagic[8] = {'S', 'S', 'S', 'C', 'K', 'P', 'T', '1'};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Everything needed to continue a run bit-for-bit, or (kind "model") just a
/// network: spec text plus its parameters and BN buffers.
///
/// File layout: the 8-byte magic `SSSCKPT1`, a little-endian u64 manifest
/// length, the JSON manifest (scalars, names, shapes, dtypes), then each
/// tensor's float64 payload, little-endian, in manifest order.
struct Checkpoint {
  std::string kind = "train";
  std::string spec_text;
  std::string config_text;
  std::int64_t epoch = 0;
  std::int64_t apg_iteration = 0;
  std::string rng_state;
  std::vector<NamedTensor> tensors;
  std::vector<EpochRecord> metrics;

  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sss::train
