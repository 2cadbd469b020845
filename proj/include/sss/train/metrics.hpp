// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sss/core/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sss::train {

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_error = 0.0;  // NaN on epochs without evaluation
  std::int64_t nonzero_lambda = 0;
  std::int64_t params_if_pruned = 0;
  std::int64_t flops_if_pruned = 0;
  double objective = 0.0;  // loss + weight decay term + penalty, at epoch end

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,test_error,nonzero_lambda,params_if_pruned,flops_if_pruned";

/// Shortest text that reads back to the same double ("nan" for NaN).
std::string format_double(double v);

std::string metrics_csv(std::span<const EpochRecord> records);
/// `epoch,objective` rows.
std::string objective_csv(std::span<const EpochRecord> records);
std::vector<EpochRecord> parse_metrics_csv(const std::string& text);

/// `epoch,flops_if_pruned,params_if_pruned,test_error` rows for the epochs
/// that were evaluated.
std::string error_vs_flops_csv(std::span<const EpochRecord> records);

/// Fraction of rows whose argmax (ties to the lowest class index) differs
/// from the label.
double error_rate(const Tensor& logits, std::span<const int> labels);

}  // namespace sss::train
