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

#ifndef MAT_TAPE_HPP_
#define MAT_TAPE_HPP_

#include "mat/tensor.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mat {

enum class OpKind {
  kInput,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kEmbedding,
  kRelu,
  kTanh,
  kSoftmax,
  kLog,
  kSum,
  kMean,
  kSquare,
};

std::string_view op_name(OpKind kind);

// Floor applied to the argument of kLog.
inline constexpr double kLogFloor = 1e-12;

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  std::vector<Index> shape() const;
};

/// Gradients returned by Tape::backward, keyed by input name.
class Gradients {
 public:
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return grads_.count(name) != 0; }
  std::size_t size() const { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  friend class Tape;
  std::map<std::string, Tensor> grads_;
};

/// Recorded computation graph with named inputs.
///
/// Ops are appended in program order, so node ids are a topological order.
/// Shapes are inferred and checked at record time; values are produced by
/// forward() and can be recomputed any number of times with new bindings.
/// A tape is single-writer; separate tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(const std::string& name, std::vector<Index> shape);
  Var constant(Tensor value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var matmul(Var a, Var b);
  Var embedding(Var table, std::vector<Index> ids);
  Var relu(Var a);
  Var tanh(Var a);
  Var softmax(Var a);
  Var log(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var square(Var a);

  // Defaults to the most recently recorded node.
  void set_output(Var v);
  Var output() const;

  const Tensor& forward(const std::map<std::string, Tensor>& inputs);
  Gradients backward(const std::set<std::string>& wrt) const;

  // Value computed by the last forward pass.
  const Tensor& value(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<Index>& shape(std::size_t id) const { return nodes_.at(id).shape; }
  std::vector<std::string> input_names() const;

 private:
  enum class Broadcast { kNone, kScalarLeft, kScalarRight, kRowRight };

  struct Node {
    OpKind kind = OpKind::kInput;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    std::vector<Index> shape;
    Broadcast broadcast = Broadcast::kNone;
    std::string name;           // kInput
    std::vector<Index> ids;     // kEmbedding
    Tensor value;               // forward result (or constant payload)
  };

  Var record(Node node);
  Var elementwise(OpKind kind, Var a, Var b);
  Var unary(OpKind kind, Var a, std::vector<Index> shape);
  void check_owned(Var v) const;
  void evaluate(Node& node);

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> inputs_;
  std::size_t output_ = 0;
  bool has_output_ = false;
  bool evaluated_ = false;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(double s, Var a);
Var matmul(Var a, Var b);
Var embedding(Var table, std::vector<Index> ids);
Var relu(Var a);
Var tanh(Var a);
Var softmax(Var a);
Var log(Var a);
Var sum(Var a);
Var mean(Var a);
Var square(Var a);

}  // namespace mat

#endif  // MAT_TAPE_HPP_
