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

#include "mat/model.hpp"

#include "mat/errors.hpp"

#include <random>

namespace mat {

std::string to_string(TaskKind kind) {
  return kind == TaskKind::kClassification ? "classification" : "regression";
}

std::string to_string(Activation kind) { return kind == Activation::kRelu ? "relu" : "tanh"; }

TaskKind parse_task_kind(const std::string& name) {
  if (name == "classification") return TaskKind::kClassification;
  if (name == "regression") return TaskKind::kRegression;
  throw InvalidArgument("unknown task kind '" + name + "'");
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void ModelSpec::validate() const {
  if (input == InputKind::kTokens) {
    if (vocab_size < 1 || embedding_dim < 1) throw InvalidArgument("model: vocab and embedding dims must be >= 1");
  } else if (feature_dim < 1) {
    throw InvalidArgument("model: feature dim must be >= 1");
  }
  for (Index h : hidden) {
    if (h < 1) throw InvalidArgument("model: hidden sizes must be >= 1");
  }
  if (output_dim < 1) throw InvalidArgument("model: output dim must be >= 1");
  if (task == TaskKind::kRegression && output_dim != 1) {
    throw InvalidArgument("model: regression needs output dim 1");
  }
  if (task == TaskKind::kClassification && output_dim < 2) {
    throw InvalidArgument("model: classification needs at least 2 classes");
  }
}

Index Slot::size() const {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

Layout::Layout(std::vector<Slot> slots) : slots_(std::move(slots)) {
  total_ = 0;
  for (auto& s : slots_) {
    s.offset = total_;
    total_ += s.size();
  }
}

Layout Layout::for_spec(const ModelSpec& spec) {
  spec.validate();
  std::vector<Slot> slots;
  if (spec.input == InputKind::kTokens) slots.push_back({"embedding", {spec.vocab_size, spec.embedding_dim}});
  Index width = spec.input_width();
  std::vector<Index> dims = spec.hidden;
  dims.push_back(spec.output_dim);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    slots.push_back({"W" + std::to_string(i), {width, dims[i]}});
    slots.push_back({"b" + std::to_string(i), {dims[i]}});
    width = dims[i];
  }
  return Layout(std::move(slots));
}

const Slot& Layout::find(const std::string& name) const {
  for (const auto& s : slots_) {
    if (s.name == name) return s;
  }
  throw KeyError("layout has no slot '" + name + "'");
}

bool Layout::operator==(const Layout& other) const {
  if (slots_.size() != other.slots_.size()) return false;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name != other.slots_[i].name || slots_[i].shape != other.slots_[i].shape) return false;
  }
  return true;
}

std::map<std::string, Tensor> ParameterVector::unflatten(const std::string& prefix) const {
  if (values.size() != layout.total_size()) throw ShapeError("parameter vector length does not match layout");
  std::map<std::string, Tensor> out;
  for (const auto& s : layout.slots()) {
    Tensor t = Tensor::zeros(s.shape);
    t.flat() = values.segment(s.offset, s.size());
    out.emplace(prefix + s.name, std::move(t));
  }
  return out;
}

ParameterVector ParameterVector::flatten(const Layout& layout, const std::map<std::string, Tensor>& named,
                                         const std::string& prefix) {
  ParameterVector out{Vector::Zero(layout.total_size()), layout};
  for (const auto& s : layout.slots()) {
    auto it = named.find(prefix + s.name);
    if (it == named.end()) throw KeyError("flatten: missing weight '" + prefix + s.name + "'");
    if (it->second.shape() != s.shape) throw ShapeError("flatten: wrong shape for '" + s.name + "'");
    out.values.segment(s.offset, s.size()) = it->second.flat();
  }
  return out;
}

Tensor ParameterVector::slot(const std::string& name) const {
  const Slot& s = layout.find(name);
  Tensor t = Tensor::zeros(s.shape);
  t.flat() = values.segment(s.offset, s.size());
  return t;
}

bool Batch::is_padding(Index row) const {
  if (!has_tokens()) return false;
  const Index example = row / seq_len;
  return row % seq_len >= lengths[static_cast<std::size_t>(example)];
}

Matrix Batch::pooling_matrix() const {
  Matrix pool = Matrix::Zero(size, size * seq_len);
  for (Index b = 0; b < size; ++b) {
    const Index len = lengths[static_cast<std::size_t>(b)];
    for (Index t = 0; t < len; ++t) pool(b, b * seq_len + t) = 1.0 / static_cast<double>(len);
  }
  return pool;
}

Perturbation Perturbation::zeros_for(const Batch& batch, Index width) {
  Perturbation p;
  p.delta = Tensor::zeros({batch.input_rows(), width});
  p.rows_per_example = batch.rows_per_example();
  return p;
}

Vector Perturbation::example_norms() const {
  const Index n = examples();
  Vector norms(n);
  const Matrix& d = delta.values();
  for (Index e = 0; e < n; ++e) norms(e) = d.middleRows(e * rows_per_example, rows_per_example).norm();
  return norms;
}

double Perturbation::max_norm() const { return example_norms().maxCoeff(); }

Model::Model(ModelSpec spec) : spec_(std::move(spec)), layout_(Layout::for_spec(spec_)) {}

ParameterVector Model::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  ParameterVector theta{Vector(layout_.total_size()), layout_};
  for (Index i = 0; i < theta.values.size(); ++i) theta.values(i) = uniform(rng);
  return theta;
}

ModelVars Model::declare(Tape& tape, const std::string& prefix) const {
  ModelVars vars;
  for (const auto& s : layout_.slots()) vars.params.emplace(s.name, tape.input(prefix + s.name, s.shape));
  return vars;
}

ModelVars Model::constants(Tape& tape, const ParameterVector& theta) const {
  if (!(theta.layout == layout_)) throw ShapeError("parameter layout does not match model");
  ModelVars vars;
  for (auto& [name, t] : theta.unflatten()) vars.params.emplace(name, tape.constant(t));
  return vars;
}

std::map<std::string, Tensor> Model::bind(const ParameterVector& theta, const std::string& prefix) {
  return theta.unflatten(prefix);
}

void Model::validate(const Batch& batch) const {
  if (batch.size < 1) throw InvalidArgument("empty batch");
  if (static_cast<Index>(batch.targets.size()) != batch.size) throw ShapeError("batch: target count != batch size");
  if (spec_.input == InputKind::kTokens) {
    if (!batch.has_tokens()) throw InvalidArgument("token model given a dense-feature batch");
    for (Index id : batch.ids) {
      if (id < 0 || id >= spec_.vocab_size) {
        throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(spec_.vocab_size));
      }
    }
  } else {
    if (batch.has_tokens()) throw InvalidArgument("feature model given a token batch");
    if (batch.features.rows() != batch.size || batch.features.cols() != spec_.feature_dim) {
      throw ShapeError("batch: feature matrix shape does not match model");
    }
  }
}

Var Model::embed(const ModelVars& vars, const Batch& batch) const {
  validate(batch);
  Tape& tape = *vars.params.begin()->second.tape;
  if (spec_.input == InputKind::kTokens) return mat::embedding(vars.params.at("embedding"), batch.ids);
  return tape.constant(Tensor::matrix(batch.features));
}

Var Model::forward_logits(const ModelVars& vars, const Batch& batch, Var embedded) const {
  Tape& tape = *embedded.tape;
  const auto shape = embedded.shape();
  if (shape.size() != 2 || shape[0] != batch.input_rows() || shape[1] != spec_.input_width()) {
    throw ShapeError("forward_logits: embedded input has shape " + shape_string(shape));
  }
  Var h = embedded;
  if (spec_.input == InputKind::kTokens) h = matmul(tape.constant(Tensor::matrix(batch.pooling_matrix())), h);
  const std::size_t layers = spec_.hidden.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string idx = std::to_string(i);
    h = matmul(h, vars.params.at("W" + idx)) + vars.params.at("b" + idx);
    if (i + 1 < layers) h = spec_.activation == Activation::kRelu ? relu(h) : mat::tanh(h);
  }
  return h;
}

Tensor Model::embed(const ParameterVector& theta, const Batch& batch) const {
  Tape tape;
  const ModelVars vars = constants(tape, theta);
  tape.set_output(embed(vars, batch));
  return tape.forward({});
}

Tensor Model::forward_logits(const ParameterVector& theta, const Batch& batch, const Tensor& embedded) const {
  Tape tape;
  const ModelVars vars = constants(tape, theta);
  tape.set_output(forward_logits(vars, batch, tape.constant(embedded)));
  return tape.forward({});
}

}  // namespace mat
