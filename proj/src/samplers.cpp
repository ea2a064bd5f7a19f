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

#include "mat/samplers.hpp"

namespace mat {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kSgld: return "sgld";
    case SamplerKind::kRmspropSgld: return "rmsprop-sgld";
    case SamplerKind::kAdamSgld: return "adam-sgld";
  }
  return "sgld";
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "sgld") return SamplerKind::kSgld;
  if (name == "rmsprop-sgld" || name == "rmsprop") return SamplerKind::kRmspropSgld;
  if (name == "adam-sgld" || name == "adam") return SamplerKind::kAdamSgld;
  throw InvalidArgument("unknown sampler kind '" + name + "'");
}

void SamplerConfig::validate() const {
  if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidArgument("sampler: gamma must be finite and >= 0");
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw InvalidArgument("sampler: epsilon must be finite and >= 0");
  if (samples < 1) throw InvalidArgument("sampler: K must be >= 1");
  if (!(first_moment_decay >= 0.0 && first_moment_decay < 1.0) ||
      !(second_moment_decay >= 0.0 && second_moment_decay < 1.0)) {
    throw InvalidArgument("sampler: moment decays must be in [0, 1)");
  }
  if (!(stability > 0.0)) throw InvalidArgument("sampler: stability constant must be > 0");
}

double quadratic_stationary_variance(const SamplerConfig& config) {
  config.validate();
  const double gamma = config.gamma;
  const double noise = 2.0 * gamma * config.epsilon * config.epsilon;
  if (config.kind == SamplerKind::kSgld) return noise / (1.0 - (1.0 - gamma) * (1.0 - gamma));
  const double b1 = config.first_moment_decay;
  double variance = config.epsilon * config.epsilon;
  for (int outer = 0; outer < 200; ++outer) {
    const double c = 1.0 / (std::sqrt(variance) + config.stability);
    // state (z, m); m' = b1 m + (1 - b1) z drives the adam move, z alone drives rmsprop
    Eigen::Matrix2d a;
    if (config.kind == SamplerKind::kRmspropSgld) {
      a << 1.0 - gamma * c, 0.0, 0.0, 0.0;
    } else {
      a << 1.0 - gamma * c * (1.0 - b1), -gamma * c * b1, 1.0 - b1, b1;
    }
    Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
    q(0, 0) = noise;
    Eigen::Matrix2d sigma = q;
    for (int k = 0; k < 100000; ++k) {
      const Eigen::Matrix2d next = a * sigma * a.transpose() + q;
      const bool done = (next - sigma).cwiseAbs().maxCoeff() <= 1e-15 * next.cwiseAbs().maxCoeff();
      sigma = next;
      if (done) break;
    }
    const double updated = sigma(0, 0);
    if (std::abs(updated - variance) <= 1e-14 * updated) return updated;
    variance = updated;
  }
  return variance;
}

}  // namespace mat
