// Copyright 2026 The sss Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <string>
#include <vector>

namespace sss {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major n-dimensional array of doubles.
///
/// Every extent is positive and `size() == numel(shape())`. Image tensors use
/// NCHW order throughout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, Eigen::VectorXd values);
  Tensor(Shape shape, std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  Index dim(int axis) const;
  Index size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return shape_.empty(); }

  Eigen::VectorXd& values() noexcept { return values_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  double& operator[](Index i) { return values_[i]; }
  double operator[](Index i) const { return values_[i]; }

  /// NCHW element access; only valid on rank-4 tensors.
  double& at(Index n, Index c, Index h, Index w) {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(Index n, Index c, Index h, Index w) const {
    return values_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Same data under a new shape with the same element count.
  Tensor reshaped(Shape shape) const;

  /// View as a rows x cols row-major matrix (rows * cols == size()).
  MatrixMap matrix(Index rows, Index cols);
  ConstMatrixMap matrix(Index rows, Index cols) const;

  bool all_finite() const;

  /// Shape and bitwise value equality.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  Eigen::VectorXd values_;
};

/// Throws ValidationError naming `what` unless the shapes match.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

/// Throws NumericalError naming `what` if any entry is NaN or infinite.
void require_finite(const Tensor& t, const std::string& what);

}  // namespace sss
