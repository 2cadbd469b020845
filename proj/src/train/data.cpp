// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/train/data.hpp"

#include "sss/core/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace sss::train {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

}  // namespace

Index Dataset::classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

Tensor Dataset::batch(std::span<const Index> indices) const {
  const Index per = shape.channels * shape.height * shape.width;
  const Index plane = shape.height * shape.width;
  Tensor out(Shape{static_cast<Index>(indices.size()), shape.channels, shape.height, shape.width});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    if (i < 0 || i >= size()) throw ValidationError("dataset: sample index out of range");
    const std::uint8_t* src = pixels.data() + i * per;
    double* dst = out.data() + static_cast<Index>(k) * per;
    for (Index c = 0; c < shape.channels; ++c) {
      const double m = mean[static_cast<std::size_t>(c)], s = std[static_cast<std::size_t>(c)];
      for (Index p = 0; p < plane; ++p) {
        dst[c * plane + p] = (static_cast<double>(src[c * plane + p]) / 255.0 - m) / s;
      }
    }
  }
  return out;
}

std::vector<int> Dataset::batch_labels(std::span<const Index> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (Index i : indices) out.push_back(labels.at(static_cast<std::size_t>(i)));
  return out;
}

void Dataset::truncate(Index n) {
  if (n < 0 || n >= size()) return;
  labels.resize(static_cast<std::size_t>(n));
  pixels.resize(static_cast<std::size_t>(n * shape.channels * shape.height * shape.width));
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw FormatError("mnist images '" + images_path + "': truncated header", img.size());
  if (lab.size() < 8) throw FormatError("mnist labels '" + labels_path + "': truncated header", lab.size());
  if (be32(img, 0) != 0x803) {
    throw FormatError("mnist images '" + images_path + "': bad magic " + hex(be32(img, 0)) +
                          ", expected 0x00000803", 0);
  }
  if (be32(lab, 0) != 0x801) {
    throw FormatError("mnist labels '" + labels_path + "': bad magic " + hex(be32(lab, 0)) +
                          ", expected 0x00000801", 0);
  }
  const std::uint64_t n = be32(img, 4), h = be32(img, 8), w = be32(img, 12);
  if (h == 0 || w == 0) throw FormatError("mnist images '" + images_path + "': zero image extent", 8);
  if (img.size() != 16 + n * h * w) {
    throw FormatError("mnist images '" + images_path + "': header declares " + std::to_string(n) + "x" +
                          std::to_string(h) + "x" + std::to_string(w) + " but the file holds " +
                          std::to_string(img.size() - 16) + " pixel bytes",
                      std::min<std::uint64_t>(img.size(), 16 + n * h * w));
  }
  const std::uint64_t nl = be32(lab, 4);
  if (lab.size() != 8 + nl) {
    throw FormatError("mnist labels '" + labels_path + "': header declares " + std::to_string(nl) +
                          " labels but the file holds " + std::to_string(lab.size() - 8),
                      std::min<std::uint64_t>(lab.size(), 8 + nl));
  }
  if (nl != n) {
    throw ValidationError("mnist: " + std::to_string(n) + " images but " + std::to_string(nl) + " labels");
  }
  Dataset d;
  d.shape = {1, static_cast<Index>(h), static_cast<Index>(w)};
  d.pixels.assign(img.begin() + 16, img.end());
  d.labels.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (lab[8 + i] > 9) {
      throw FormatError("mnist labels '" + labels_path + "': label " + std::to_string(lab[8 + i]) +
                            " outside [0, 9]", 8 + i);
    }
    d.labels.push_back(lab[8 + i]);
  }
  d.mean = {0.0};
  d.std = {1.0};
  return d;
}

Dataset load_mnist_dir(const std::string& dir, bool train) {
  const std::string prefix = dir + (train ? "/train" : "/t10k");
  return load_mnist_idx(prefix + "-images-idx3-ubyte", prefix + "-labels-idx1-ubyte");
}

Dataset load_cifar10(const std::vector<std::string>& files, std::array<double, 3> mean,
                     std::array<double, 3> std) {
  constexpr std::size_t kRecord = 3073;
  for (double s : std) {
    if (!(s > 0.0)) throw ValidationError("cifar10: standard deviations must be positive");
  }
  Dataset d;
  d.shape = {3, 32, 32};
  d.mean.assign(mean.begin(), mean.end());
  d.std.assign(std.begin(), std.end());
  for (const auto& path : files) {
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kRecord != 0) {
      throw FormatError("cifar10 '" + path + "': size " + std::to_string(bytes.size()) +
                            " is not a positive multiple of 3073-byte records",
                        bytes.size() / kRecord * kRecord);
    }
    for (std::size_t at = 0; at < bytes.size(); at += kRecord) {
      if (bytes[at] > 9) {
        throw FormatError("cifar10 '" + path + "': label byte " + std::to_string(bytes[at]) +
                              " outside [0, 9]", at);
      }
      d.labels.push_back(bytes[at]);
      d.pixels.insert(d.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(at + 1),
                      bytes.begin() + static_cast<std::ptrdiff_t>(at + kRecord));
    }
  }
  return d;
}

Dataset load_cifar10_dir(const std::string& dir, bool train, std::array<double, 3> mean,
                         std::array<double, 3> std) {
  std::vector<std::string> files;
  if (train) {
    for (int i = 1; i <= 5; ++i) files.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
  } else {
    files.push_back(dir + "/test_batch.bin");
  }
  return load_cifar10(files, mean, std);
}

CropFlip draw_crop_flip(std::mt19937_64& rng, Index pad) {
  std::uniform_int_distribution<Index> offset(0, 2 * pad);
  std::bernoulli_distribution flip(0.5);
  CropFlip cf;
  cf.dy = offset(rng);
  cf.dx = offset(rng);
  cf.flip = flip(rng);
  return cf;
}

void crop_flip_sample(const Tensor& batch, Index n, const CropFlip& cf, Index pad, Tensor& out) {
  const Index c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  for (Index ch = 0; ch < c; ++ch) {
    for (Index y = 0; y < h; ++y) {
      const Index sy = y + cf.dy - pad;
      for (Index x = 0; x < w; ++x) {
        const Index cx = cf.flip ? w - 1 - x : x;
        const Index sx = cx + cf.dx - pad;
        out.at(n, ch, y, x) = (sy >= 0 && sy < h && sx >= 0 && sx < w) ? batch.at(n, ch, sy, sx) : 0.0;
      }
    }
  }
}

Tensor augment(const Tensor& batch, std::mt19937_64& rng, bool enabled, Index pad) {
  if (!enabled) return batch;
  if (batch.rank() != 4) throw ValidationError("augment: expected an NCHW batch, got " + to_string(batch.shape()));
  Tensor out(batch.shape());
  for (Index n = 0; n < batch.dim(0); ++n) crop_flip_sample(batch, n, draw_crop_flip(rng, pad), pad, out);
  return out;
}

}  // namespace sss::train
