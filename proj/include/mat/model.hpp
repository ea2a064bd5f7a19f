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

#ifndef MAT_MODEL_HPP_
#define MAT_MODEL_HPP_

#include "mat/tape.hpp"
#include "mat/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mat {

enum class TaskKind { kClassification, kRegression };
enum class Activation { kRelu, kTanh };
enum class InputKind { kTokens, kFeatures };

std::string to_string(TaskKind kind);
std::string to_string(Activation kind);
TaskKind parse_task_kind(const std::string& name);
Activation parse_activation(const std::string& name);

struct ModelSpec {
  InputKind input = InputKind::kTokens;
  Index vocab_size = 0;     // token input
  Index embedding_dim = 0;  // token input
  Index feature_dim = 0;    // dense-feature input
  std::vector<Index> hidden;
  Index output_dim = 2;
  TaskKind task = TaskKind::kClassification;
  Activation activation = Activation::kRelu;

  void validate() const;
  // Width of the (perturbable) input rows seen by the network.
  Index input_width() const { return input == InputKind::kTokens ? embedding_dim : feature_dim; }
};

struct Slot {
  std::string name;
  std::vector<Index> shape;
  Index offset = 0;
  Index size() const;
};

/// Map from named weights to ranges of a flat parameter vector.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<Slot> slots);
  static Layout for_spec(const ModelSpec& spec);

  const std::vector<Slot>& slots() const { return slots_; }
  Index total_size() const { return total_; }
  const Slot& find(const std::string& name) const;

  bool operator==(const Layout& other) const;

 private:
  std::vector<Slot> slots_;
  Index total_ = 0;
};

/// Flat model weights plus the layout that names them.
struct ParameterVector {
  Vector values;
  Layout layout;

  std::map<std::string, Tensor> unflatten(const std::string& prefix = "") const;
  static ParameterVector flatten(const Layout& layout, const std::map<std::string, Tensor>& named,
                                 const std::string& prefix = "");
  Tensor slot(const std::string& name) const;
  ParameterVector zeros_like() const { return {Vector::Zero(values.size()), layout}; }
};

/// One minibatch. Token batches are padded to a common length; `lengths`
/// gives the number of real tokens in each row.
struct Batch {
  Index size = 0;
  Index seq_len = 0;
  std::vector<Index> ids;      // size * seq_len, row-major
  std::vector<Index> lengths;  // per example
  Matrix features;             // dense-feature batches
  std::vector<double> targets;

  bool has_tokens() const { return seq_len > 0; }
  // Rows of the perturbable input owned by one example.
  Index rows_per_example() const { return has_tokens() ? seq_len : 1; }
  Index input_rows() const { return size * rows_per_example(); }
  bool is_padding(Index row) const;
  // size x (size * seq_len) matrix averaging the real tokens of each example.
  Matrix pooling_matrix() const;
};

/// Embedding-space perturbation for one batch, grouped per example.
struct Perturbation {
  Tensor delta;
  Index rows_per_example = 1;
  double cap = 0.0;  // 0 means unconstrained

  static Perturbation zeros_for(const Batch& batch, Index width);
  Index examples() const { return delta.rows() / rows_per_example; }
  Vector example_norms() const;
  double max_norm() const;
};

/// Tape handles for every weight of a model.
struct ModelVars {
  std::map<std::string, Var> params;
};

/// Embedding + MLP over mean-pooled tokens (or over dense features).
class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const Layout& layout() const { return layout_; }

  // Uniform(-0.1, 0.1) per weight.
  ParameterVector init(std::uint64_t seed) const;

  ModelVars declare(Tape& tape, const std::string& prefix = "") const;
  ModelVars constants(Tape& tape, const ParameterVector& theta) const;
  static std::map<std::string, Tensor> bind(const ParameterVector& theta, const std::string& prefix = "");

  Var embed(const ModelVars& vars, const Batch& batch) const;
  // `embedded` is the (possibly perturbed) output of embed().
  Var forward_logits(const ModelVars& vars, const Batch& batch, Var embedded) const;

  Tensor embed(const ParameterVector& theta, const Batch& batch) const;
  Tensor forward_logits(const ParameterVector& theta, const Batch& batch, const Tensor& embedded) const;

  void validate(const Batch& batch) const;

 private:
  ModelSpec spec_;
  Layout layout_;
};

}  // namespace mat

#endif  // MAT_MODEL_HPP_
