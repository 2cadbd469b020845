// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"
#include "sss/net/spec.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sss::train {

/// Labelled images kept as raw bytes (NCHW planes per sample); batches are
/// converted to doubles on demand as (byte / 255 - mean[c]) / std[c].
struct Dataset {
  net::ImageShape shape;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  std::vector<double> mean;  // per channel
  std::vector<double> std;   // per channel

  Index size() const noexcept { return static_cast<Index>(labels.size()); }
  Index classes() const;

  Tensor batch(std::span<const Index> indices) const;
  std::vector<int> batch_labels(std::span<const Index> indices) const;
  /// Keeps the first n samples.
  void truncate(Index n);
};

/// IDX image and label files (magic 0x00000803 / 0x00000801, big-endian
/// extents). Pixels map to [0, 1] with byte 0xFF -> 1.0 exactly.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// `train-images-idx3-ubyte` / `t10k-images-idx3-ubyte` (and labels) under
/// `dir`.
Dataset load_mnist_dir(const std::string& dir, bool train);

inline constexpr std::array<double, 3> kCifarMean{0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kCifarStd{0.2470, 0.2435, 0.2616};

/// CIFAR-10 binary batches: records of one label byte and 3072 pixel bytes
/// (R, G, B planes of 32x32, row-major).
Dataset load_cifar10(const std::vector<std::string>& files, std::array<double, 3> mean = kCifarMean,
                     std::array<double, 3> std = kCifarStd);

/// data_batch_1..5.bin (train) or test_batch.bin under `dir`.
Dataset load_cifar10_dir(const std::string& dir, bool train, std::array<double, 3> mean = kCifarMean,
                         std::array<double, 3> std = kCifarStd);

/// Crop offsets and flip drawn for one sample.
struct CropFlip {
  Index dy = 0;
  Index dx = 0;
  bool flip = false;
};

inline constexpr Index kAugmentPad = 4;

/// One draw per sample: offsets uniform in [0, 2 * pad], flip with
/// probability 1/2.
CropFlip draw_crop_flip(std::mt19937_64& rng, Index pad = kAugmentPad);

/// Zero-pads each sample by `pad` on every side, crops back to the original
/// extent at the drawn offsets and mirrors horizontally when drawn. With
/// `enabled == false` the batch is returned untouched and no randomness is
/// consumed.
Tensor augment(const Tensor& batch, std::mt19937_64& rng, bool enabled, Index pad = kAugmentPad);

/// Applies one fixed draw to a single [C, H, W] sample inside `batch`.
void crop_flip_sample(const Tensor& batch, Index n, const CropFlip& cf, Index pad, Tensor& out);

}  // namespace sss::train
