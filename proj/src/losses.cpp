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

#include "mat/losses.hpp"

#include "mat/errors.hpp"

#include <cmath>

namespace mat {

void ObjectiveConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("lambda must be finite and >= 0");
}

namespace {

void check_targets(const std::vector<Index>& shape, const std::vector<double>& targets, TaskKind task) {
  if (shape.size() != 2) throw ShapeError("task_loss: output must be rank 2 (batch x outputs)");
  if (static_cast<Index>(targets.size()) != shape[0]) throw ShapeError("task_loss: one target per row required");
  if (task == TaskKind::kRegression) {
    if (shape[1] != 1) throw ShapeError("task_loss: regression output must have one column");
    for (double y : targets) {
      if (!std::isfinite(y)) throw InvalidArgument("task_loss: non-finite regression target");
    }
    return;
  }
  const Index classes = shape[1];
  for (double y : targets) {
    if (y != std::floor(y) || y < 0.0 || y >= static_cast<double>(classes)) {
      throw InvalidArgument("task_loss: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
  }
}

void check_simplex(const Tensor& p, const char* which) {
  for (Index r = 0; r < p.rows(); ++r) {
    const auto row = p.values().row(r);
    if ((row.array() < -kSimplexTolerance).any() || std::abs(row.sum() - 1.0) > kSimplexTolerance) {
      throw InvalidArgument(std::string("sym_kl: ") + which + " is not on the probability simplex");
    }
  }
}

}  // namespace

Var task_loss(Var output, const std::vector<double>& targets, TaskKind task) {
  const auto shape = output.shape();
  check_targets(shape, targets, task);
  Tape& tape = *output.tape;
  const Index rows = shape[0];
  if (task == TaskKind::kRegression) {
    Matrix y(rows, 1);
    for (Index i = 0; i < rows; ++i) y(i, 0) = targets[static_cast<std::size_t>(i)];
    return mean(square(output - tape.constant(Tensor::matrix(y))));
  }
  Matrix onehot = Matrix::Zero(rows, shape[1]);
  for (Index i = 0; i < rows; ++i) onehot(i, static_cast<Index>(targets[static_cast<std::size_t>(i)])) = 1.0;
  Var picked = sum(tape.constant(Tensor::matrix(onehot)) * log(softmax(output)));
  return (-1.0 / static_cast<double>(rows)) * picked;
}

Var sym_kl(Var p, Var q) {
  const auto shape = p.shape();
  if (shape != q.shape()) throw ShapeError("sym_kl: operands differ in shape");
  const double rows = shape.size() == 2 ? static_cast<double>(shape[0]) : 1.0;
  // KL(p||q) + KL(q||p) = sum (p - q)(log p - log q); symmetric term by term.
  return (1.0 / rows) * sum((p - q) * (log(p) - log(q)));
}

Var output_deviation(Var clean, Var perturbed, TaskKind task) {
  if (task == TaskKind::kRegression) return mean(square(clean - perturbed));
  return sym_kl(softmax(clean), softmax(perturbed));
}

Var adversarial_reg(const Model& model, const ModelVars& vars, const Batch& batch, Var delta,
                    const Var* clean) {
  Var embedded = model.embed(vars, batch);
  if (delta.shape() != embedded.shape()) {
    throw ShapeError("adversarial_reg: perturbation shape " + shape_string(delta.shape()) +
                     " does not match embedded input " + shape_string(embedded.shape()));
  }
  Var clean_out = clean != nullptr ? *clean : model.forward_logits(vars, batch, embedded);
  Var perturbed_out = model.forward_logits(vars, batch, embedded + delta);
  return output_deviation(clean_out, perturbed_out, model.spec().task);
}

double task_loss(const Tensor& output, const std::vector<double>& targets, TaskKind task) {
  Tape tape;
  tape.set_output(task_loss(tape.constant(output), targets, task));
  return tape.forward({}).item();
}

double sym_kl(const Tensor& p, const Tensor& q) {
  if (!p.same_shape(q)) throw ShapeError("sym_kl: operands differ in shape");
  check_simplex(p, "p");
  check_simplex(q, "q");
  Tape tape;
  tape.set_output(sym_kl(tape.constant(p), tape.constant(q)));
  return tape.forward({}).item();
}

double adversarial_reg(const Model& model, const ParameterVector& theta, const Batch& batch,
                       const Tensor& delta) {
  Tape tape;
  const ModelVars vars = model.constants(tape, theta);
  tape.set_output(adversarial_reg(model, vars, batch, tape.constant(delta)));
  return tape.forward({}).item();
}

double combined_objective(const Model& model, const ParameterVector& theta, const Batch& batch,
                          const Tensor& delta, const ObjectiveConfig& config) {
  config.validate();
  Tape tape;
  const ModelVars vars = model.constants(tape, theta);
  Var clean = model.forward_logits(vars, batch, model.embed(vars, batch));
  Var loss = task_loss(clean, batch.targets, model.spec().task);
  Var reg = adversarial_reg(model, vars, batch, tape.constant(delta), &clean);
  tape.set_output(loss + config.lambda * reg);
  return tape.forward({}).item();
}

double accuracy(const Tensor& logits, const std::vector<double>& targets) {
  const Matrix& z = logits.values();
  if (z.rows() != static_cast<Index>(targets.size())) throw ShapeError("accuracy: row/target mismatch");
  Index correct = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    Index best = 0;
    z.row(i).maxCoeff(&best);
    if (static_cast<double>(best) == targets[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(z.rows());
}

double correlation(const Tensor& predictions, const std::vector<double>& targets) {
  const Index n = predictions.size();
  if (n != static_cast<Index>(targets.size())) throw ShapeError("correlation: size mismatch");
  const Vector x = predictions.flat();
  const Vector y = Eigen::Map<const Vector>(targets.data(), n);
  const Vector dx = x.array() - x.mean();
  const Vector dy = y.array() - y.mean();
  const double denom = std::sqrt(dx.squaredNorm() * dy.squaredNorm());
  return denom > 0.0 ? dx.dot(dy) / denom : 0.0;
}

}  // namespace mat
