// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/train/metrics.hpp"

#include "sss/core/errors.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace sss::train {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string metrics_csv(std::span<const EpochRecord> records) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const auto& r : records) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.test_error) << ','
       << r.nonzero_lambda << ',' << r.params_if_pruned << ',' << r.flops_if_pruned << '\n';
  }
  return os.str();
}

std::string objective_csv(std::span<const EpochRecord> records) {
  std::ostringstream os;
  os << "epoch,objective\n";
  for (const auto& r : records) os << r.epoch << ',' << format_double(r.objective) << '\n';
  return os.str();
}

namespace {

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError("metrics: bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line) {
  std::int64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ValidationError("metrics: bad integer '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

}  // namespace

std::vector<EpochRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) {
    throw ValidationError(std::string("metrics: header must be '") + kMetricsHeader + "'");
  }
  std::vector<EpochRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw ValidationError("metrics: expected 6 fields on line " + std::to_string(lineno));
    EpochRecord r;
    r.epoch = parse_int(f[0], lineno);
    r.train_loss = parse_double(f[1], lineno);
    r.test_error = parse_double(f[2], lineno);
    r.nonzero_lambda = parse_int(f[3], lineno);
    r.params_if_pruned = parse_int(f[4], lineno);
    r.flops_if_pruned = parse_int(f[5], lineno);
    out.push_back(r);
  }
  return out;
}

std::string error_vs_flops_csv(std::span<const EpochRecord> records) {
  std::ostringstream os;
  os << "epoch,flops_if_pruned,params_if_pruned,test_error\n";
  for (const auto& r : records) {
    if (std::isnan(r.test_error)) continue;
    os << r.epoch << ',' << r.flops_if_pruned << ',' << r.params_if_pruned << ','
       << format_double(r.test_error) << '\n';
  }
  return os.str();
}

double error_rate(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != static_cast<Index>(labels.size())) {
    throw ValidationError("error_rate: logits " + to_string(logits.shape()) + " do not match " +
                          std::to_string(labels.size()) + " labels");
  }
  const Index n = logits.dim(0), k = logits.dim(1);
  if (n == 0) return 0.0;
  const ConstMatrixMap z = logits.matrix(n, k);
  Index wrong = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index j = 1; j < k; ++j) {
      if (z(i, j) > z(i, best)) best = j;
    }
    if (best != labels[static_cast<std::size_t>(i)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n);
}

}  // namespace sss::train
