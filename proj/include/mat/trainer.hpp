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

#ifndef MAT_TRAINER_HPP_
#define MAT_TRAINER_HPP_

#include "mat/data.hpp"
#include "mat/errors.hpp"
#include "mat/losses.hpp"
#include "mat/model.hpp"
#include "mat/samplers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mat {

enum class EstimatorMode { kPerSample, kEmaMean };
enum class GammaSchedule { kConstant, kLinearDecay };
enum class TrainMode { kVanilla, kPgd, kMat };

std::string to_string(EstimatorMode mode);
std::string to_string(TrainMode mode);
EstimatorMode parse_estimator_mode(const std::string& name);
GammaSchedule parse_gamma_schedule(const std::string& name);
TrainMode parse_train_mode(const std::string& name);

/// PGD attack used to measure adversarial risk. `step_size` is relative to
/// `radius`.
struct AttackBudget {
  int steps = 10;
  double step_size = 0.25;
  double radius = 1e-5;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  int steps = 100;   // outer iterations T
  int samples = 5;   // K (PGD allows 0)
  double lambda = 1.0;
  double beta = 0.5;
  // Override `beta` for the perturbation EMA, parameter EMA and outer mix.
  std::optional<double> delta_ema_beta;
  std::optional<double> theta_ema_beta;
  std::optional<double> mix_beta;
  double gamma = 1e-5;
  GammaSchedule schedule = GammaSchedule::kConstant;
  double epsilon = 1e-4;
  double clip_radius = 1e-5;
  SamplerKind sampler = SamplerKind::kSgld;
  EstimatorMode estimator = EstimatorMode::kEmaMean;
  std::uint64_t seed = 0;
  // PGD baseline: ascent step length and std of the random start; 0 means
  // "use clip_radius".
  double pgd_step = 0.0;
  double pgd_init_std = 0.0;
  AttackBudget attack;
  // Adversarial risk is evaluated every `eval_every` steps (0: final step only).
  int eval_every = 0;

  void validate(TrainMode mode) const;
  double gamma_at(int step) const;  // step is 1-based
  double delta_beta() const { return delta_ema_beta.value_or(beta); }
  double theta_beta() const { return theta_ema_beta.value_or(beta); }
  double outer_beta() const { return mix_beta.value_or(beta); }
};

/// Gradient evaluations spent per outer step.
long gradient_evals_per_step(TrainMode mode, int samples);

struct StepRecord {
  int step = 0;
  double loss = 0.0;  // task loss on the step's batch after the update
  double reg = 0.0;   // R at the perturbation used by the step
  double eval = 0.0;  // eval accuracy (classification) or correlation (regression)
  std::optional<double> adv_risk;
  long grad_evals = 0;        // cumulative
  double max_delta_norm = 0;  // largest per-example perturbation norm stored this step
};

struct RunMetrics {
  std::vector<StepRecord> steps;
  long grad_evals = 0;
  double max_delta_norm = 0.0;
  long clip_violations = 0;
  double wall_seconds = 0.0;
  std::vector<Vector> theta_bar_history;  // MAT only
};

struct TrainResult {
  ParameterVector theta;
  RunMetrics metrics;
};

/// A run that hit a non-finite value.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(int step, const std::string& what)
      : NumericError("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// ---------------------------------------------------------------------------
// Perturbations

/// Radial projection of every example onto the L2 ball of `radius`. Examples
/// already inside are left untouched; the result never exceeds `radius`.
Perturbation clip_perturbation(Perturbation delta, double radius);

/// Zeroes rows that sit on padding positions.
void mask_padding(Perturbation& delta, const Batch& batch);

// ---------------------------------------------------------------------------
// Sample-averaged estimates. The EMA form is the single-sample case: pass
// {delta_bar} or {theta_bar}.

struct ThetaEstimate {
  double value = 0.0;
  ParameterVector grad;
};

struct DeltaEstimate {
  double value = 0.0;
  Tensor grad;
};

/// L(theta) and its theta-gradient.
ThetaEstimate task_loss_gradient(const Model& model, const ParameterVector& theta, const Batch& batch);

/// (1/K) sum_k [L(theta) + lambda R(theta, delta_k)] and its theta-gradient.
ThetaEstimate estimate_h_mu(const Model& model, const ParameterVector& theta, const Batch& batch,
                            const std::vector<Tensor>& deltas, double lambda);

/// (1/K) sum_k lambda R(theta_k, delta) and its delta-gradient.
DeltaEstimate estimate_h_nu(const Model& model, const std::vector<ParameterVector>& thetas, const Tensor& delta,
                            const Batch& batch, double lambda);

// ---------------------------------------------------------------------------
// Trainers. theta_1 = model.init(config.seed); step t uses train batch
// (t - 1) mod |train|.

TrainResult mat_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config);
TrainResult pgd_baseline_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config);
TrainResult vanilla_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config);
TrainResult train(TrainMode mode, const ModelSpec& spec, const Dataset& data, const TrainConfig& config);

/// Mean over batches of R(theta, delta*) with delta* from PGD under `budget`.
double adversarial_risk_eval(const Model& model, const ParameterVector& theta, const std::vector<Batch>& batches,
                             const AttackBudget& budget);

/// Accuracy or correlation over all batches.
double evaluate(const Model& model, const ParameterVector& theta, const std::vector<Batch>& batches);

}  // namespace mat

#endif  // MAT_TRAINER_HPP_
