// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sss/core/tensor.hpp"

#include "sss/core/errors.hpp"

#include <cstring>
#include <sstream>

namespace sss {

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
void check_extents(const Shape& shape) {
  for (Index d : shape) {
    if (d <= 0) throw ValidationError("tensor extents must be positive, got " + to_string(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  values_ = Eigen::VectorXd::Constant(numel(shape_), fill);
}

Tensor::Tensor(Shape shape, Eigen::VectorXd values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_extents(shape_);
  if (numel(shape_) != values_.size()) {
    throw ValidationError("tensor shape " + to_string(shape_) + " holds " +
                          std::to_string(numel(shape_)) + " values, got " +
                          std::to_string(values_.size()));
  }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape),
             Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                                               static_cast<Index>(values.size())))) {}

Index Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ValidationError("axis " + std::to_string(axis) + " out of range for shape " +
                          to_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), values_); }

MatrixMap Tensor::matrix(Index rows, Index cols) {
  if (rows * cols != size()) throw ValidationError("matrix view does not cover the tensor");
  return MatrixMap(values_.data(), rows, cols);
}

ConstMatrixMap Tensor::matrix(Index rows, Index cols) const {
  if (rows * cols != size()) throw ValidationError("matrix view does not cover the tensor");
  return ConstMatrixMap(values_.data(), rows, cols);
}

bool Tensor::all_finite() const { return values_.allFinite(); }

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.shape() != b.shape()) {
    throw ValidationError(what + ": shape mismatch " + to_string(a.shape()) + " vs " +
                          to_string(b.shape()));
  }
}

void require_finite(const Tensor& t, const std::string& what) {
  if (!t.all_finite()) throw NumericalError("non-finite value in " + what);
}

}  // namespace sss
