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

#ifndef MAT_SAMPLERS_HPP_
#define MAT_SAMPLERS_HPP_

#include "mat/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace mat {

enum class SamplerKind { kSgld, kRmspropSgld, kAdamSgld };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

struct SamplerConfig {
  double gamma = 1e-5;    // step size
  double epsilon = 1e-4;  // thermal noise
  SamplerKind kind = SamplerKind::kSgld;
  double first_moment_decay = 0.9;
  double second_moment_decay = 0.999;
  double stability = 1e-8;
  int samples = 5;  // K
  std::uint64_t seed = 0;

  void validate() const;
};

using SamplerRng = std::mt19937_64;

/// Long-run variance of a chain on h(z) = z^2 / 2 with this config, from
/// the linearized recursion with a saturated preconditioner. Plain SGLD
/// gives epsilon^2 / (1 - gamma / 2); the preconditioned kinds settle where
/// the preconditioner scale and the variance it induces agree.
double quadratic_stationary_variance(const SamplerConfig& config);

template <typename Scalar>
using SampleVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Scalar>
void require_finite_gradient(const SampleVector<Scalar>& grad) {
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad(i))) {
      throw NumericError("sampler: non-finite gradient at coordinate " + std::to_string(i));
    }
  }
}

// z - gamma * direction + sqrt(2 gamma) * epsilon * xi
template <typename Scalar>
SampleVector<Scalar> langevin_move(const SampleVector<Scalar>& z, const SampleVector<Scalar>& direction,
                                   const SamplerConfig& config, SamplerRng& rng) {
  const Scalar gamma = static_cast<Scalar>(config.gamma);
  SampleVector<Scalar> next = z - gamma * direction;
  if (config.epsilon != 0.0) {
    const Scalar scale = std::sqrt(Scalar(2) * gamma) * static_cast<Scalar>(config.epsilon);
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    for (Eigen::Index i = 0; i < next.size(); ++i) next(i) += scale * normal(rng);
  }
  return next;
}

}  // namespace detail

/// Plain SGLD step: z - gamma * grad + sqrt(2 gamma) * epsilon * xi.
template <typename Scalar>
SampleVector<Scalar> sgld_step(const SampleVector<Scalar>& z, const SampleVector<Scalar>& grad,
                               const SamplerConfig& config, SamplerRng& rng) {
  if (z.size() != grad.size()) throw ShapeError("sgld_step: gradient shape differs from sample");
  detail::require_finite_gradient(grad);
  return detail::langevin_move(z, grad, config, rng);
}

/// Per-chain RMSprop / Adam gradient transformation.
template <typename Scalar>
class Preconditioner {
 public:
  Preconditioner(SamplerKind kind, const SamplerConfig& config, Eigen::Index dim)
      : kind_(kind), config_(config), first_(SampleVector<Scalar>::Zero(dim)), second_(SampleVector<Scalar>::Zero(dim)) {}

  SampleVector<Scalar> transform(const SampleVector<Scalar>& grad) {
    if (grad.size() != second_.size()) throw ShapeError("preconditioner: dimension changed");
    ++steps_;
    const Scalar eps = static_cast<Scalar>(config_.stability);
    const Scalar b2 = static_cast<Scalar>(config_.second_moment_decay);
    second_ = b2 * second_ + (Scalar(1) - b2) * grad.cwiseAbs2();
    switch (kind_) {
      case SamplerKind::kSgld:
        return grad;
      case SamplerKind::kRmspropSgld:
        return grad.array() / (second_.array().sqrt() + eps);
      case SamplerKind::kAdamSgld: {
        const Scalar b1 = static_cast<Scalar>(config_.first_moment_decay);
        first_ = b1 * first_ + (Scalar(1) - b1) * grad;
        const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(steps_));
        const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(steps_));
        return (first_.array() / c1) / ((second_.array() / c2).sqrt() + eps);
      }
    }
    return grad;
  }

  long steps() const { return steps_; }
  const SampleVector<Scalar>& first_moment() const { return first_; }
  const SampleVector<Scalar>& second_moment() const { return second_; }

 private:
  SamplerKind kind_;
  SamplerConfig config_;
  SampleVector<Scalar> first_;
  SampleVector<Scalar> second_;
  long steps_ = 0;
};

/// Preconditioned step: z - gamma * P(grad) + sqrt(2 gamma) * epsilon * xi.
template <typename Scalar>
SampleVector<Scalar> psgld_step(const SampleVector<Scalar>& z, const SampleVector<Scalar>& grad,
                                const SamplerConfig& config, Preconditioner<Scalar>& state, SamplerRng& rng) {
  if (z.size() != grad.size()) throw ShapeError("psgld_step: gradient shape differs from sample");
  detail::require_finite_gradient(grad);
  return detail::langevin_move<Scalar>(z, state.transform(grad), config, rng);
}

/// z_bar <- beta * z_bar + (1 - beta) * z
template <typename Scalar>
class EmaTracker {
 public:
  EmaTracker(Scalar beta, SampleVector<Scalar> initial) : beta_(beta), current_(std::move(initial)) {
    if (!(beta >= Scalar(0) && beta < Scalar(1))) throw InvalidArgument("EMA beta must be in [0, 1)");
  }

  void update(const SampleVector<Scalar>& z) {
    if (z.size() != current_.size()) throw ShapeError("ema_update: shape mismatch");
    current_ = beta_ * current_ + (Scalar(1) - beta_) * z;
  }

  Scalar beta() const { return beta_; }
  const SampleVector<Scalar>& current() const { return current_; }

 private:
  Scalar beta_;
  SampleVector<Scalar> current_;
};

template <typename Scalar>
EmaTracker<Scalar> ema_update(EmaTracker<Scalar> tracker, const SampleVector<Scalar>& z) {
  tracker.update(z);
  return tracker;
}

template <typename Scalar>
struct ChainResult {
  std::vector<SampleVector<Scalar>> samples;  // z^(2) .. z^(K+1)
  SampleVector<Scalar> ema;
};

template <typename Scalar>
using GradFn = std::function<SampleVector<Scalar>(const SampleVector<Scalar>&)>;

// Applied to every iterate right after its sampler step (e.g. norm clipping).
template <typename Scalar>
using Projection = std::function<void(SampleVector<Scalar>&)>;

/// Runs `config.samples` sampler steps from `init`, folding each new
/// iterate into an EMA that starts at `init`.
template <typename Scalar>
ChainResult<Scalar> sample_chain(const GradFn<Scalar>& grad_h, const SampleVector<Scalar>& init,
                                 const SamplerConfig& config, Scalar ema_beta, SamplerRng& rng,
                                 const Projection<Scalar>& project = {}) {
  config.validate();
  ChainResult<Scalar> result;
  result.samples.reserve(static_cast<std::size_t>(config.samples));
  EmaTracker<Scalar> ema(ema_beta, init);
  Preconditioner<Scalar> precond(config.kind, config, init.size());
  SampleVector<Scalar> z = init;
  for (int k = 0; k < config.samples; ++k) {
    const SampleVector<Scalar> grad = grad_h(z);
    z = config.kind == SamplerKind::kSgld ? sgld_step<Scalar>(z, grad, config, rng)
                                          : psgld_step<Scalar>(z, grad, config, precond, rng);
    if (project) project(z);
    ema.update(z);
    result.samples.push_back(z);
  }
  result.ema = ema.current();
  return result;
}

}  // namespace mat

#endif  // MAT_SAMPLERS_HPP_
