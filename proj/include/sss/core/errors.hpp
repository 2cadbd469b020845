// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sss {

/// Bad input: shapes, ranges, malformed configuration. CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file contents. Carries the byte offset where parsing failed.
class FormatError : public ValidationError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// An operation was called in the wrong lifecycle state (e.g. backward
/// without a matching forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf encountered or an iterative solver failed to converge. CLI exit
/// code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sss
