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

#include "mat/tape.hpp"

#include "mat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mat {
namespace {

bool is_scalar_shape(const std::vector<Index>& s) { return s.empty(); }

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSquare: return "square";
  }
  return "unknown";
}

std::vector<Index> Var::shape() const {
  if (tape == nullptr) throw ContractError("unbound Var");
  return tape->shape(id);
}

const Tensor& Gradients::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw KeyError("no gradient was requested for '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Recording

void Tape::check_owned(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw ContractError("Var does not belong to this tape");
}

Var Tape::record(Node node) {
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  return Var{this, nodes_.size() - 1};
}

Var Tape::input(const std::string& name, std::vector<Index> shape) {
  if (inputs_.count(name)) throw InvalidArgument("duplicate tape input '" + name + "'");
  Node n;
  n.kind = OpKind::kInput;
  n.shape = shape;
  n.name = name;
  n.value = Tensor::zeros(shape);
  Var v = record(std::move(n));
  inputs_[name] = v.id;
  return v;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.shape = value.shape();
  n.value = std::move(value);
  return record(std::move(n));
}

Var Tape::elementwise(OpKind kind, Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& sa = nodes_[a.id].shape;
  const auto& sb = nodes_[b.id].shape;
  Node n;
  n.kind = kind;
  n.lhs = a.id;
  n.rhs = b.id;
  if (sa == sb) {
    n.shape = sa;
  } else if (is_scalar_shape(sb)) {
    n.shape = sa;
    n.broadcast = Broadcast::kScalarRight;
  } else if (is_scalar_shape(sa)) {
    n.shape = sb;
    n.broadcast = Broadcast::kScalarLeft;
  } else if (sa.size() == 2 && sb.size() == 1 && sb[0] == sa[1] && kind != OpKind::kMul) {
    n.shape = sa;
    n.broadcast = Broadcast::kRowRight;
  } else {
    throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + shape_string(sa) +
                     " and " + shape_string(sb));
  }
  return record(std::move(n));
}

Var Tape::unary(OpKind kind, Var a, std::vector<Index> shape) {
  check_owned(a);
  Node n;
  n.kind = kind;
  n.lhs = a.id;
  n.shape = std::move(shape);
  return record(std::move(n));
}

Var Tape::add(Var a, Var b) { return elementwise(OpKind::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return elementwise(OpKind::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return elementwise(OpKind::kMul, a, b); }

Var Tape::matmul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& sa = nodes_[a.id].shape;
  const auto& sb = nodes_[b.id].shape;
  if (sa.empty() || sb.empty()) throw ShapeError("matmul: scalar operand");
  const Index inner_a = sa.back();
  const Index inner_b = sb.front();
  if (inner_a != inner_b) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(sa) + " x " + shape_string(sb));
  }
  std::vector<Index> out;
  if (sa.size() == 2) out.push_back(sa[0]);
  if (sb.size() == 2) out.push_back(sb[1]);
  Node n;
  n.kind = OpKind::kMatMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.shape = out;
  return record(std::move(n));
}

Var Tape::embedding(Var table, std::vector<Index> ids) {
  check_owned(table);
  const auto& st = nodes_[table.id].shape;
  if (st.size() != 2) throw ShapeError("embedding: table must be rank 2, got " + shape_string(st));
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  for (Index id : ids) {
    if (id < 0 || id >= st[0]) {
      throw InvalidArgument("embedding: id " + std::to_string(id) + " out of range [0, " +
                            std::to_string(st[0]) + ")");
    }
  }
  Node n;
  n.kind = OpKind::kEmbedding;
  n.lhs = table.id;
  n.shape = {static_cast<Index>(ids.size()), st[1]};
  n.ids = std::move(ids);
  return record(std::move(n));
}

Var Tape::relu(Var a) { return unary(OpKind::kRelu, a, nodes_.at(a.id).shape); }
Var Tape::tanh(Var a) { return unary(OpKind::kTanh, a, nodes_.at(a.id).shape); }
Var Tape::softmax(Var a) {
  if (nodes_.at(a.id).shape.empty()) throw ShapeError("softmax: scalar operand");
  return unary(OpKind::kSoftmax, a, nodes_.at(a.id).shape);
}
Var Tape::log(Var a) { return unary(OpKind::kLog, a, nodes_.at(a.id).shape); }
Var Tape::sum(Var a) { return unary(OpKind::kSum, a, {}); }
Var Tape::mean(Var a) { return unary(OpKind::kMean, a, {}); }
Var Tape::square(Var a) { return unary(OpKind::kSquare, a, nodes_.at(a.id).shape); }

void Tape::set_output(Var v) {
  check_owned(v);
  output_ = v.id;
  has_output_ = true;
}

Var Tape::output() const {
  if (nodes_.empty()) throw ContractError("empty tape has no output");
  return Var{const_cast<Tape*>(this), has_output_ ? output_ : nodes_.size() - 1};
}

std::vector<std::string> Tape::input_names() const {
  std::vector<std::string> names;
  for (const auto& [name, id] : inputs_) names.push_back(name);
  return names;
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  if (!evaluated_) throw ContractError("value() before forward()");
  return nodes_[v.id].value;
}

// ---------------------------------------------------------------------------
// Forward

void Tape::evaluate(Node& node) {
  switch (node.kind) {
    case OpKind::kInput:
    case OpKind::kConstant:
      return;
    default:
      break;
  }
  Tensor out = Tensor::zeros(node.shape);
  Matrix& y = out.values();
  const Matrix& a = nodes_[node.lhs].value.values();

  switch (node.kind) {
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const Matrix& b = nodes_[node.rhs].value.values();
      const double sign = node.kind == OpKind::kSub ? -1.0 : 1.0;
      if (node.kind == OpKind::kMul) {
        switch (node.broadcast) {
          case Broadcast::kNone: y = a.cwiseProduct(b); break;
          case Broadcast::kScalarRight: y = a * b(0, 0); break;
          case Broadcast::kScalarLeft: y = b * a(0, 0); break;
          case Broadcast::kRowRight: break;  // rejected at record time
        }
      } else {
        switch (node.broadcast) {
          case Broadcast::kNone: y = a + sign * b; break;
          case Broadcast::kScalarRight: y = a.array() + sign * b(0, 0); break;
          case Broadcast::kScalarLeft: y = (sign * b).array() + a(0, 0); break;
          case Broadcast::kRowRight: y = a.rowwise() + sign * b.row(0); break;
        }
      }
      break;
    }
    case OpKind::kMatMul: {
      const Node& lhs = nodes_[node.lhs];
      const Node& rhs = nodes_[node.rhs];
      const Matrix& b = rhs.value.values();
      if (lhs.shape.size() == 2 && rhs.shape.size() == 1) {
        y = (a * b.transpose()).transpose();
      } else if (lhs.shape.size() == 1 && rhs.shape.size() == 1) {
        y(0, 0) = a.row(0).dot(b.row(0));
      } else {
        y.noalias() = a * b;
      }
      break;
    }
    case OpKind::kEmbedding:
      for (std::size_t i = 0; i < node.ids.size(); ++i) y.row(static_cast<Index>(i)) = a.row(node.ids[i]);
      break;
    case OpKind::kRelu: y = a.cwiseMax(0.0); break;
    case OpKind::kTanh: y = a.array().tanh(); break;
    case OpKind::kSoftmax:
      if (node.shape.size() == 1) {
        y = (a.array() - a.maxCoeff()).exp();
        y /= y.sum();
      } else {
        for (Index r = 0; r < a.rows(); ++r) {
          y.row(r) = (a.row(r).array() - a.row(r).maxCoeff()).exp();
          y.row(r) /= y.row(r).sum();
        }
      }
      break;
    case OpKind::kLog: y = a.array().max(kLogFloor).log(); break;
    case OpKind::kSum: y(0, 0) = a.sum(); break;
    case OpKind::kMean: y(0, 0) = a.mean(); break;
    case OpKind::kSquare: y = a.array().square(); break;
    case OpKind::kInput:
    case OpKind::kConstant:
      break;
  }
  node.value = std::move(out);
}

const Tensor& Tape::forward(const std::map<std::string, Tensor>& inputs) {
  for (const auto& [name, tensor] : inputs) {
    auto it = inputs_.find(name);
    if (it == inputs_.end()) throw InvalidArgument("forward: unknown input '" + name + "'");
    const Node& node = nodes_[it->second];
    if (tensor.shape() != node.shape) {
      throw ShapeError("forward: input '" + name + "' has shape " + shape_string(tensor.shape()) +
                       ", tape expects " + shape_string(node.shape));
    }
  }
  for (const auto& [name, id] : inputs_) {
    auto it = inputs.find(name);
    if (it == inputs.end()) throw InvalidArgument("forward: input '" + name + "' is not bound");
    nodes_[id].value = it->second;
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& node = nodes_[id];
    evaluate(node);
    if (!node.value.all_finite()) {
      evaluated_ = false;
      throw NumericError("non-finite value at node " + std::to_string(id) + " (" +
                         std::string(op_name(node.kind)) +
                         (node.name.empty() ? "" : " '" + node.name + "'") + ")");
    }
  }
  evaluated_ = true;
  return nodes_[output().id].value;
}

// ---------------------------------------------------------------------------
// Backward

Gradients Tape::backward(const std::set<std::string>& wrt) const {
  if (!evaluated_) throw ContractError("backward() before forward()");
  const std::size_t out_id = output().id;
  if (nodes_[out_id].value.size() != 1) {
    throw ContractError("backward() needs a scalar output, got shape " +
                        shape_string(nodes_[out_id].shape));
  }
  for (const auto& name : wrt) {
    if (!inputs_.count(name)) throw InvalidArgument("backward: unknown input '" + name + "'");
  }

  std::vector<Matrix> adj(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  adj[out_id] = Matrix::Ones(1, 1);
  live[out_id] = true;

  auto accumulate = [&](std::size_t id, const Matrix& g) {
    if (nodes_[id].kind == OpKind::kConstant) return;
    if (!live[id]) {
      adj[id] = g;
      live[id] = true;
    } else {
      adj[id] += g;
    }
  };

  for (std::size_t id = out_id + 1; id-- > 0;) {
    if (!live[id]) continue;
    const Node& node = nodes_[id];
    const Matrix& g = adj[id];
    const Matrix& y = node.value.values();
    switch (node.kind) {
      case OpKind::kInput:
      case OpKind::kConstant:
        break;
      case OpKind::kAdd:
      case OpKind::kSub: {
        const double sign = node.kind == OpKind::kSub ? -1.0 : 1.0;
        switch (node.broadcast) {
          case Broadcast::kNone:
            accumulate(node.lhs, g);
            accumulate(node.rhs, sign * g);
            break;
          case Broadcast::kScalarRight:
            accumulate(node.lhs, g);
            accumulate(node.rhs, Matrix::Constant(1, 1, sign * g.sum()));
            break;
          case Broadcast::kScalarLeft:
            accumulate(node.lhs, Matrix::Constant(1, 1, g.sum()));
            accumulate(node.rhs, sign * g);
            break;
          case Broadcast::kRowRight:
            accumulate(node.lhs, g);
            accumulate(node.rhs, sign * g.colwise().sum());
            break;
        }
        break;
      }
      case OpKind::kMul: {
        const Matrix& a = nodes_[node.lhs].value.values();
        const Matrix& b = nodes_[node.rhs].value.values();
        switch (node.broadcast) {
          case Broadcast::kNone:
            accumulate(node.lhs, g.cwiseProduct(b));
            accumulate(node.rhs, g.cwiseProduct(a));
            break;
          case Broadcast::kScalarRight:
            accumulate(node.lhs, g * b(0, 0));
            accumulate(node.rhs, Matrix::Constant(1, 1, g.cwiseProduct(a).sum()));
            break;
          case Broadcast::kScalarLeft:
            accumulate(node.lhs, Matrix::Constant(1, 1, g.cwiseProduct(b).sum()));
            accumulate(node.rhs, g * a(0, 0));
            break;
          case Broadcast::kRowRight:
            break;
        }
        break;
      }
      case OpKind::kMatMul: {
        const Node& lhs = nodes_[node.lhs];
        const Node& rhs = nodes_[node.rhs];
        const Matrix& a = lhs.value.values();
        const Matrix& b = rhs.value.values();
        if (lhs.shape.size() == 2 && rhs.shape.size() == 1) {
          // y = (A b^T)^T, g is 1 x m
          accumulate(node.lhs, g.transpose() * b);
          accumulate(node.rhs, g * a);
        } else if (lhs.shape.size() == 1 && rhs.shape.size() == 1) {
          accumulate(node.lhs, g(0, 0) * b);
          accumulate(node.rhs, g(0, 0) * a);
        } else {
          accumulate(node.lhs, g * b.transpose());
          accumulate(node.rhs, a.transpose() * g);
        }
        break;
      }
      case OpKind::kEmbedding: {
        const Matrix& table = nodes_[node.lhs].value.values();
        Matrix grad = Matrix::Zero(table.rows(), table.cols());
        for (std::size_t i = 0; i < node.ids.size(); ++i) grad.row(node.ids[i]) += g.row(static_cast<Index>(i));
        accumulate(node.lhs, grad);
        break;
      }
      case OpKind::kRelu: {
        const Matrix& a = nodes_[node.lhs].value.values();
        accumulate(node.lhs, (a.array() > 0.0).select(g, 0.0));
        break;
      }
      case OpKind::kTanh:
        accumulate(node.lhs, g.cwiseProduct((1.0 - y.array().square()).matrix()));
        break;
      case OpKind::kSoftmax: {
        Matrix grad(y.rows(), y.cols());
        for (Index r = 0; r < y.rows(); ++r) {
          const double inner = g.row(r).dot(y.row(r));
          grad.row(r) = y.row(r).cwiseProduct((g.row(r).array() - inner).matrix());
        }
        accumulate(node.lhs, grad);
        break;
      }
      case OpKind::kLog: {
        const Matrix& a = nodes_[node.lhs].value.values();
        accumulate(node.lhs, (a.array() > kLogFloor).select(g.cwiseQuotient(a), 0.0));
        break;
      }
      case OpKind::kSum: {
        const Node& in = nodes_[node.lhs];
        accumulate(node.lhs, Matrix::Constant(in.value.rows(), in.value.cols(), g(0, 0)));
        break;
      }
      case OpKind::kMean: {
        const Node& in = nodes_[node.lhs];
        const double n = static_cast<double>(in.value.size());
        accumulate(node.lhs, Matrix::Constant(in.value.rows(), in.value.cols(), g(0, 0) / n));
        break;
      }
      case OpKind::kSquare: {
        const Matrix& a = nodes_[node.lhs].value.values();
        accumulate(node.lhs, 2.0 * g.cwiseProduct(a));
        break;
      }
    }
  }

  Gradients out;
  for (const auto& name : wrt) {
    const std::size_t id = inputs_.at(name);
    Tensor grad = Tensor::zeros(nodes_[id].shape);
    if (live[id]) grad.values() = adj[id];
    out.grads_.emplace(name, std::move(grad));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-function front end

namespace {
Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("unbound Var");
  return *a.tape;
}
}  // namespace

Var operator+(Var a, Var b) { return tape_of(a).add(a, b); }
Var operator-(Var a, Var b) { return tape_of(a).sub(a, b); }
Var operator*(Var a, Var b) { return tape_of(a).mul(a, b); }
Var operator*(double s, Var a) { return tape_of(a).mul(tape_of(a).constant(Tensor::scalar(s)), a); }
Var matmul(Var a, Var b) { return tape_of(a).matmul(a, b); }
Var embedding(Var table, std::vector<Index> ids) { return tape_of(table).embedding(table, std::move(ids)); }
Var relu(Var a) { return tape_of(a).relu(a); }
Var tanh(Var a) { return tape_of(a).tanh(a); }
Var softmax(Var a) { return tape_of(a).softmax(a); }
Var log(Var a) { return tape_of(a).log(a); }
Var sum(Var a) { return tape_of(a).sum(a); }
Var mean(Var a) { return tape_of(a).mean(a); }
Var square(Var a) { return tape_of(a).square(a); }

}  // namespace mat
