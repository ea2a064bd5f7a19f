// Copyright 2026 The MAT Toolkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MAT_TENSOR_HPP_
#define MAT_TENSOR_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace mat {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense row-major array of rank 0, 1 or 2.
///
/// Storage is always a 2-D matrix: a scalar is 1x1 and a rank-1 tensor of
/// length n is a 1xn row. `shape()` reports the logical shape.
class Tensor {
 public:
  Tensor() : rank_(0), values_(Matrix::Zero(1, 1)) {}

  static Tensor scalar(double v);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(const Vector& values);
  static Tensor matrix(Matrix values);
  static Tensor zeros(const std::vector<Index>& shape);
  static Tensor from_shape(const std::vector<Index>& shape, const std::vector<double>& values);

  int rank() const { return rank_; }
  std::vector<Index> shape() const;
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  Index size() const { return values_.size(); }
  bool is_scalar() const { return rank_ == 0; }

  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  // Flat row-major view.
  Eigen::Map<const Vector> flat() const { return {values_.data(), values_.size()}; }
  Eigen::Map<Vector> flat() { return {values_.data(), values_.size()}; }

  double operator()(Index i) const { return values_.data()[i]; }
  double& operator()(Index i) { return values_.data()[i]; }
  double operator()(Index r, Index c) const { return values_(r, c); }
  double& operator()(Index r, Index c) { return values_(r, c); }

  // Value of a single-element tensor.
  double item() const;

  bool all_finite() const { return values_.allFinite(); }
  bool same_shape(const Tensor& other) const {
    return rank_ == other.rank_ && rows() == other.rows() && cols() == other.cols();
  }

  // Reinterpret with a new logical shape of the same element count.
  Tensor reshaped(const std::vector<Index>& shape) const;

 private:
  Tensor(int rank, Matrix values) : rank_(rank), values_(std::move(values)) {}

  int rank_;
  Matrix values_;
};

std::string shape_string(const std::vector<Index>& shape);

}  // namespace mat

#endif  // MAT_TENSOR_HPP_
