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

#ifndef MAT_LOSSES_HPP_
#define MAT_LOSSES_HPP_

#include "mat/model.hpp"
#include "mat/tape.hpp"

#include <vector>

namespace mat {

struct ObjectiveConfig {
  double lambda = 1.0;

  void validate() const;
};

// Tolerance on the simplex constraint for value-level sym_kl.
inline constexpr double kSimplexTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Graph builders. Every loss is a batch mean.

/// Cross-entropy (classification) or squared error (regression).
Var task_loss(Var output, const std::vector<double>& targets, TaskKind task);

/// D_KL(p||q) + D_KL(q||p) per row, averaged over rows. Logs use kLogFloor.
Var sym_kl(Var p, Var q);

/// Deviation between clean and perturbed outputs: symmetrized KL of the
/// softmax distributions, or the plain squared difference for regression.
Var output_deviation(Var clean, Var perturbed, TaskKind task);

/// Clean and perturbed forward passes of one model over one batch.
struct ForwardPair {
  Var clean;
  Var embedded;
};

/// R(theta, delta) with `vars` and `delta` already on the tape. `clean`
/// reuses an existing clean forward pass when given.
Var adversarial_reg(const Model& model, const ModelVars& vars, const Batch& batch, Var delta,
                    const Var* clean = nullptr);

// ---------------------------------------------------------------------------
// Values.

double task_loss(const Tensor& output, const std::vector<double>& targets, TaskKind task);

/// Rows of p and q must lie on the simplex (within kSimplexTolerance).
double sym_kl(const Tensor& p, const Tensor& q);

double adversarial_reg(const Model& model, const ParameterVector& theta, const Batch& batch,
                       const Tensor& delta);

/// L(theta) + lambda * R(theta, delta).
double combined_objective(const Model& model, const ParameterVector& theta, const Batch& batch,
                          const Tensor& delta, const ObjectiveConfig& config);

/// Classification accuracy from argmax of logits.
double accuracy(const Tensor& logits, const std::vector<double>& targets);

/// Pearson correlation between predictions (n x 1) and targets; 0 when
/// either side is constant.
double correlation(const Tensor& predictions, const std::vector<double>& targets);

}  // namespace mat

#endif  // MAT_LOSSES_HPP_
