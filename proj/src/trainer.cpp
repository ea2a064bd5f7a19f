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

#include "mat/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace mat {

std::string to_string(EstimatorMode mode) { return mode == EstimatorMode::kPerSample ? "per-sample" : "ema-mean"; }

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kVanilla: return "vanilla";
    case TrainMode::kPgd: return "pgd";
    case TrainMode::kMat: return "mat";
  }
  return "mat";
}

EstimatorMode parse_estimator_mode(const std::string& name) {
  if (name == "per-sample") return EstimatorMode::kPerSample;
  if (name == "ema-mean") return EstimatorMode::kEmaMean;
  throw InvalidArgument("unknown estimator mode '" + name + "'");
}

GammaSchedule parse_gamma_schedule(const std::string& name) {
  if (name == "constant") return GammaSchedule::kConstant;
  if (name == "linear-decay") return GammaSchedule::kLinearDecay;
  throw InvalidArgument("unknown gamma schedule '" + name + "'");
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "vanilla") return TrainMode::kVanilla;
  if (name == "pgd") return TrainMode::kPgd;
  if (name == "mat") return TrainMode::kMat;
  throw InvalidArgument("unknown training mode '" + name + "'");
}

void TrainConfig::validate(TrainMode mode) const {
  if (steps < 1) throw InvalidArgument("train: T must be >= 1");
  if (samples < (mode == TrainMode::kPgd ? 0 : 1)) throw InvalidArgument("train: K must be >= 1");
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("train: lambda must be finite and >= 0");
  for (double b : {delta_beta(), theta_beta(), outer_beta()}) {
    if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("train: beta must be in [0, 1)");
  }
  if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("train: gamma must be finite and >= 0");
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw InvalidArgument("train: epsilon must be finite and >= 0");
  if (!(clip_radius > 0.0) || !std::isfinite(clip_radius)) throw InvalidArgument("train: clip radius must be > 0");
  if (pgd_step < 0.0 || pgd_init_std < 0.0) throw InvalidArgument("train: PGD step/init must be >= 0");
  if (attack.steps < 0 || attack.step_size < 0.0 || attack.radius < 0.0) {
    throw InvalidArgument("train: attack budget must be non-negative");
  }
  if (eval_every < 0) throw InvalidArgument("train: eval_every must be >= 0");
}

double TrainConfig::gamma_at(int step) const {
  if (schedule == GammaSchedule::kConstant) return gamma;
  return gamma * (1.0 - static_cast<double>(step - 1) / static_cast<double>(steps));
}

long gradient_evals_per_step(TrainMode mode, int samples) {
  switch (mode) {
    case TrainMode::kVanilla: return 1;
    case TrainMode::kPgd: return samples + 1;
    case TrainMode::kMat: return 2L * samples;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Perturbations

Perturbation clip_perturbation(Perturbation delta, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("clip radius must be > 0");
  Matrix& d = delta.delta.values();
  const Index per = delta.rows_per_example;
  for (Index e = 0; e < delta.examples(); ++e) {
    auto rows = d.middleRows(e * per, per);
    const double norm = rows.norm();
    if (norm <= radius) continue;
    double scale = radius / norm;
    Matrix original = rows;
    rows = original * scale;
    // Rounding can leave the rescaled norm an ulp above the radius.
    while (rows.norm() > radius) {
      scale *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
      rows = original * scale;
    }
  }
  delta.cap = radius;
  return delta;
}

void mask_padding(Perturbation& delta, const Batch& batch) {
  if (!batch.has_tokens()) return;
  Matrix& d = delta.delta.values();
  for (Index r = 0; r < d.rows(); ++r) {
    if (batch.is_padding(r)) d.row(r).setZero();
  }
}

// ---------------------------------------------------------------------------
// Estimates

namespace {

ThetaEstimate theta_gradient(const Model& model, Tape& tape, const ParameterVector& theta) {
  const double value = tape.forward(Model::bind(theta)).item();
  std::set<std::string> names;
  for (const auto& s : model.layout().slots()) names.insert(s.name);
  const Gradients grads = tape.backward(names);
  std::map<std::string, Tensor> named(grads.begin(), grads.end());
  return {value, ParameterVector::flatten(model.layout(), named)};
}

}  // namespace

ThetaEstimate task_loss_gradient(const Model& model, const ParameterVector& theta, const Batch& batch) {
  Tape tape;
  const ModelVars vars = model.declare(tape);
  Var clean = model.forward_logits(vars, batch, model.embed(vars, batch));
  tape.set_output(task_loss(clean, batch.targets, model.spec().task));
  return theta_gradient(model, tape, theta);
}

ThetaEstimate estimate_h_mu(const Model& model, const ParameterVector& theta, const Batch& batch,
                            const std::vector<Tensor>& deltas, double lambda) {
  if (deltas.empty()) throw InvalidArgument("estimate_h_mu: need at least one perturbation");
  ObjectiveConfig{lambda}.validate();
  Tape tape;
  const ModelVars vars = model.declare(tape);
  Var clean = model.forward_logits(vars, batch, model.embed(vars, batch));
  Var loss = task_loss(clean, batch.targets, model.spec().task);
  std::optional<Var> total;
  for (const Tensor& delta : deltas) {
    Var reg = adversarial_reg(model, vars, batch, tape.constant(delta), &clean);
    Var term = loss + lambda * reg;
    total = total ? *total + term : term;
  }
  tape.set_output((1.0 / static_cast<double>(deltas.size())) * *total);
  return theta_gradient(model, tape, theta);
}

DeltaEstimate estimate_h_nu(const Model& model, const std::vector<ParameterVector>& thetas, const Tensor& delta,
                            const Batch& batch, double lambda) {
  if (thetas.empty()) throw InvalidArgument("estimate_h_nu: need at least one parameter sample");
  ObjectiveConfig{lambda}.validate();
  Tape tape;
  Var d = tape.input("delta", delta.shape());
  std::optional<Var> total;
  for (const ParameterVector& theta : thetas) {
    const ModelVars vars = model.constants(tape, theta);
    Var term = lambda * adversarial_reg(model, vars, batch, d);
    total = total ? *total + term : term;
  }
  tape.set_output((1.0 / static_cast<double>(thetas.size())) * *total);
  const double value = tape.forward({{"delta", delta}}).item();
  return {value, tape.backward({"delta"}).at("delta")};
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const Model& model, const ParameterVector& theta, const std::vector<Batch>& batches) {
  if (batches.empty()) throw InvalidArgument("evaluate: no batches");
  std::vector<double> targets;
  std::vector<double> predictions;
  double correct = 0.0;
  Index total = 0;
  for (const Batch& batch : batches) {
    const Tensor logits = model.forward_logits(theta, batch, model.embed(theta, batch));
    if (model.spec().task == TaskKind::kClassification) {
      correct += accuracy(logits, batch.targets) * static_cast<double>(batch.size);
    } else {
      for (Index i = 0; i < logits.size(); ++i) predictions.push_back(logits(i));
      targets.insert(targets.end(), batch.targets.begin(), batch.targets.end());
    }
    total += batch.size;
  }
  if (model.spec().task == TaskKind::kClassification) return correct / static_cast<double>(total);
  const Tensor pred = Tensor::vector(Eigen::Map<const Vector>(predictions.data(), static_cast<Index>(predictions.size())));
  return correlation(pred, targets);
}

namespace {

Vector flatten(const Tensor& t) { return t.flat(); }

Tensor unflatten_like(const Vector& v, const Tensor& like) {
  Tensor t = Tensor::zeros(like.shape());
  t.flat() = v;
  return t;
}

// Per-example L2-normalized direction; examples with a zero gradient get a
// zero direction.
Matrix normalized_direction(const Matrix& grad, Index rows_per_example) {
  Matrix dir = grad;
  for (Index e = 0; e * rows_per_example < grad.rows(); ++e) {
    auto rows = dir.middleRows(e * rows_per_example, rows_per_example);
    const double n = rows.norm();
    if (n > 0.0) rows /= n; else rows.setZero();
  }
  return dir;
}

Perturbation random_start(const Batch& batch, Index width, double stddev, std::mt19937_64& rng, double radius) {
  Perturbation p = Perturbation::zeros_for(batch, width);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix& d = p.delta.values();
  for (Index i = 0; i < d.size(); ++i) d.data()[i] = stddev * normal(rng);
  mask_padding(p, batch);
  return clip_perturbation(std::move(p), radius);
}

// K normalized ascent steps of length `step` on R(theta, .), projected onto the ball.
Perturbation pgd_ascent(const Model& model, const ParameterVector& theta, const Batch& batch, Perturbation delta,
                        int steps, double step, double radius, double* best_value = nullptr) {
  double best = best_value ? adversarial_reg(model, theta, batch, delta.delta) : 0.0;
  for (int k = 0; k < steps; ++k) {
    const DeltaEstimate est = estimate_h_nu(model, {theta}, delta.delta, batch, 1.0);
    delta.delta.values() += step * normalized_direction(est.grad.values(), delta.rows_per_example);
    mask_padding(delta, batch);
    delta = clip_perturbation(std::move(delta), radius);
    if (best_value) best = std::max(best, adversarial_reg(model, theta, batch, delta.delta));
  }
  if (best_value) *best_value = best;
  return delta;
}

class RunRecorder {
 public:
  RunRecorder(const Model& model, const Dataset& data, const TrainConfig& config, TrainMode mode)
      : model_(model), data_(data), config_(config), per_step_(gradient_evals_per_step(mode, config.samples)),
        start_(std::chrono::steady_clock::now()) {
    if (data.train.empty()) throw InvalidArgument("train: empty training stream");
  }

  const Batch& batch(int step) const {
    return data_.train[static_cast<std::size_t>(step - 1) % data_.train.size()];
  }

  void observe_delta(const Perturbation& delta) {
    const double n = delta.max_norm();
    step_max_ = std::max(step_max_, n);
    metrics_.max_delta_norm = std::max(metrics_.max_delta_norm, n);
    if (n > config_.clip_radius) ++metrics_.clip_violations;
  }

  void finish_step(int step, const ParameterVector& theta, const Tensor& delta) {
    const Batch& b = batch(step);
    metrics_.grad_evals += per_step_;
    StepRecord rec;
    rec.step = step;
    const Tensor embedded = model_.embed(theta, b);
    rec.loss = task_loss(model_.forward_logits(theta, b, embedded), b.targets, model_.spec().task);
    rec.reg = adversarial_reg(model_, theta, b, delta);
    const auto& eval_batches = data_.eval.empty() ? data_.train : data_.eval;
    rec.eval = evaluate(model_, theta, eval_batches);
    const bool last = step == config_.steps;
    if (last || (config_.eval_every > 0 && step % config_.eval_every == 0)) {
      rec.adv_risk = adversarial_risk_eval(model_, theta, eval_batches, config_.attack);
    }
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.reg)) throw TrainingAborted(step, "non-finite loss");
    rec.grad_evals = metrics_.grad_evals;
    rec.max_delta_norm = step_max_;
    step_max_ = 0.0;
    metrics_.steps.push_back(rec);
  }

  RunMetrics take() {
    metrics_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return std::move(metrics_);
  }

  RunMetrics& metrics() { return metrics_; }

 private:
  const Model& model_;
  const Dataset& data_;
  const TrainConfig& config_;
  long per_step_;
  std::chrono::steady_clock::time_point start_;
  RunMetrics metrics_;
  double step_max_ = 0.0;
};

SamplerConfig sampler_for(const TrainConfig& config, int step) {
  SamplerConfig s;
  s.gamma = config.gamma_at(step);
  s.epsilon = config.epsilon;
  s.kind = config.sampler;
  s.samples = std::max(config.samples, 1);
  s.seed = config.seed;
  return s;
}

template <typename Fn>
auto guarded(int step, Fn&& fn) {
  try {
    return fn();
  } catch (const TrainingAborted&) {
    throw;
  } catch (const NumericError& e) {
    throw TrainingAborted(step, e.what());
  }
}

}  // namespace

double adversarial_risk_eval(const Model& model, const ParameterVector& theta, const std::vector<Batch>& batches,
                             const AttackBudget& budget) {
  if (batches.empty()) throw InvalidArgument("adversarial_risk_eval: no batches");
  if (budget.radius == 0.0) return 0.0;
  std::mt19937_64 rng(budget.seed);
  const Index width = model.spec().input_width();
  double total = 0.0;
  for (const Batch& batch : batches) {
    // Random start on the sphere of half the radius.
    Perturbation start = random_start(batch, width, 1.0, rng, 1.0);
    Matrix dir = normalized_direction(start.delta.values(), start.rows_per_example);
    start.delta.values() = 0.5 * budget.radius * dir;
    double best = 0.0;
    pgd_ascent(model, theta, batch, std::move(start), budget.steps, budget.step_size * budget.radius, budget.radius,
               &best);
    total += best;
  }
  return total / static_cast<double>(batches.size());
}

// ---------------------------------------------------------------------------
// Trainers

TrainResult vanilla_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config) {
  config.validate(TrainMode::kVanilla);
  const Model model(spec);
  RunRecorder rec(model, data, config, TrainMode::kVanilla);
  ParameterVector theta = model.init(config.seed);
  SamplerRng rng(config.seed);
  for (int t = 1; t <= config.steps; ++t) {
    const Batch& batch = rec.batch(t);
    const Tensor no_delta = Perturbation::zeros_for(batch, spec.input_width()).delta;
    guarded(t, [&] {
      const ThetaEstimate est = task_loss_gradient(model, theta, batch);
      SamplerConfig step = sampler_for(config, t);
      step.epsilon = 0.0;
      theta.values = sgld_step<double>(theta.values, est.grad.values, step, rng);
      rec.finish_step(t, theta, no_delta);
      return 0;
    });
  }
  return {std::move(theta), rec.take()};
}

TrainResult pgd_baseline_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config) {
  config.validate(TrainMode::kPgd);
  const Model model(spec);
  RunRecorder rec(model, data, config, TrainMode::kPgd);
  ParameterVector theta = model.init(config.seed);
  SamplerRng rng(config.seed);
  std::mt19937_64 start_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const double step_len = config.pgd_step > 0.0 ? config.pgd_step : config.clip_radius;
  const double init_std = config.pgd_init_std > 0.0 ? config.pgd_init_std : config.clip_radius;
  for (int t = 1; t <= config.steps; ++t) {
    const Batch& batch = rec.batch(t);
    guarded(t, [&] {
      Perturbation delta = random_start(batch, spec.input_width(), init_std, start_rng, config.clip_radius);
      rec.observe_delta(delta);
      for (int k = 0; k < config.samples; ++k) {
        delta = pgd_ascent(model, theta, batch, std::move(delta), 1, step_len, config.clip_radius);
        rec.observe_delta(delta);
      }
      const ThetaEstimate est = estimate_h_mu(model, theta, batch, {delta.delta}, config.lambda);
      SamplerConfig step = sampler_for(config, t);
      step.epsilon = 0.0;
      theta.values = sgld_step<double>(theta.values, est.grad.values, step, rng);
      rec.finish_step(t, theta, delta.delta);
      return 0;
    });
  }
  return {std::move(theta), rec.take()};
}

TrainResult mat_train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config) {
  config.validate(TrainMode::kMat);
  const Model model(spec);
  RunRecorder rec(model, data, config, TrainMode::kMat);
  ParameterVector theta = model.init(config.seed);
  ParameterVector theta_bar = theta;
  std::vector<ParameterVector> theta_samples{theta};
  SamplerRng rng(config.seed);
  const bool per_sample = config.estimator == EstimatorMode::kPerSample;

  for (int t = 1; t <= config.steps; ++t) {
    const Batch& batch = rec.batch(t);
    const SamplerConfig sampler = sampler_for(config, t);
    guarded(t, [&] {
      // Perturbation chain: ascent on lambda R(theta_bar, .) from delta^(1) = 0.
      Perturbation shape = Perturbation::zeros_for(batch, spec.input_width());
      const Tensor& like = shape.delta;
      const std::vector<ParameterVector> thetas = per_sample ? theta_samples : std::vector<ParameterVector>{theta_bar};
      GradFn<double> delta_grad = [&](const Vector& z) -> Vector {
        const DeltaEstimate est = estimate_h_nu(model, thetas, unflatten_like(z, like), batch, config.lambda);
        return -flatten(est.grad);
      };
      Projection<double> project = [&](Vector& z) {
        Perturbation p = shape;
        p.delta = unflatten_like(z, like);
        mask_padding(p, batch);
        p = clip_perturbation(std::move(p), config.clip_radius);
        rec.observe_delta(p);
        z = flatten(p.delta);
      };
      const ChainResult<double> deltas =
          sample_chain<double>(delta_grad, flatten(like), sampler, config.delta_beta(), rng, project);
      Vector delta_bar = deltas.ema;
      project(delta_bar);
      const Tensor delta_bar_t = unflatten_like(delta_bar, like);

      std::vector<Tensor> delta_inputs;
      if (per_sample) {
        for (const Vector& s : deltas.samples) delta_inputs.push_back(unflatten_like(s, like));
      } else {
        delta_inputs.push_back(delta_bar_t);
      }

      // Parameter chain: descent on L + lambda R(., delta) from theta_t.
      ParameterVector probe = theta;
      GradFn<double> theta_grad = [&](const Vector& z) -> Vector {
        probe.values = z;
        return estimate_h_mu(model, probe, batch, delta_inputs, config.lambda).grad.values;
      };
      const ChainResult<double> thetas_out =
          sample_chain<double>(theta_grad, theta.values, sampler, config.theta_beta(), rng);
      theta_bar.values = thetas_out.ema;
      if (per_sample) {
        theta_samples.clear();
        for (const Vector& s : thetas_out.samples) theta_samples.push_back({s, theta.layout});
      }
      rec.metrics().theta_bar_history.push_back(theta_bar.values);

      const double mix = config.outer_beta();
      theta.values = mix * theta.values + (1.0 - mix) * theta_bar.values;
      rec.finish_step(t, theta, delta_bar_t);
      return 0;
    });
  }
  return {std::move(theta), rec.take()};
}

TrainResult train(TrainMode mode, const ModelSpec& spec, const Dataset& data, const TrainConfig& config) {
  switch (mode) {
    case TrainMode::kVanilla: return vanilla_train(spec, data, config);
    case TrainMode::kPgd: return pgd_baseline_train(spec, data, config);
    case TrainMode::kMat: return mat_train(spec, data, config);
  }
  throw InvalidArgument("unknown training mode");
}

}  // namespace mat
