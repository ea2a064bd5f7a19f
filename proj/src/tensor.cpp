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

#include "mat/tensor.hpp"

#include "mat/errors.hpp"

#include <sstream>

namespace mat {
namespace {

void storage_dims(const std::vector<Index>& shape, Index& rows, Index& cols) {
  for (Index d : shape) {
    if (d < 1) throw ShapeError("tensor dimensions must be >= 1, got " + shape_string(shape));
  }
  switch (shape.size()) {
    case 0: rows = 1; cols = 1; break;
    case 1: rows = 1; cols = shape[0]; break;
    case 2: rows = shape[0]; cols = shape[1]; break;
    default: throw ShapeError("rank > 2 is not supported: " + shape_string(shape));
  }
}

}  // namespace

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Tensor(0, std::move(m));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  if (values.size() == 0) throw ShapeError("empty vector");
  Matrix m(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) m(0, i++) = v;
  return Tensor(1, std::move(m));
}

Tensor Tensor::vector(const Vector& values) {
  if (values.size() == 0) throw ShapeError("empty vector");
  return Tensor(1, values.transpose());
}

Tensor Tensor::matrix(Matrix values) {
  if (values.size() == 0) throw ShapeError("empty matrix");
  return Tensor(2, std::move(values));
}

Tensor Tensor::zeros(const std::vector<Index>& shape) {
  Index rows = 0, cols = 0;
  storage_dims(shape, rows, cols);
  return Tensor(static_cast<int>(shape.size()), Matrix::Zero(rows, cols));
}

Tensor Tensor::from_shape(const std::vector<Index>& shape, const std::vector<double>& values) {
  Tensor t = zeros(shape);
  if (static_cast<Index>(values.size()) != t.size()) {
    throw ShapeError("shape " + shape_string(shape) + " needs " + std::to_string(t.size()) +
                     " values, got " + std::to_string(values.size()));
  }
  for (Index i = 0; i < t.size(); ++i) t(i) = values[static_cast<std::size_t>(i)];
  return t;
}

std::vector<Index> Tensor::shape() const {
  switch (rank_) {
    case 0: return {};
    case 1: return {cols()};
    default: return {rows(), cols()};
  }
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return values_(0, 0);
}

Tensor Tensor::reshaped(const std::vector<Index>& shape) const {
  Tensor out = zeros(shape);
  if (out.size() != size()) {
    throw ShapeError("cannot reshape " + shape_string(this->shape()) + " to " + shape_string(shape));
  }
  out.flat() = flat();
  return out;
}

std::string shape_string(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace mat
