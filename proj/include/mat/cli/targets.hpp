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

#ifndef MAT_CLI_TARGETS_HPP_
#define MAT_CLI_TARGETS_HPP_

#include "mat/samplers.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mat::cli {

/// Unnormalized density exp(-h) for sampler diagnostics.
struct Target {
  std::string name;
  Eigen::Index dim = 1;
  std::function<double(const SampleVector<double>&)> h;
  GradFn<double> grad_h;
  // CDF of the first coordinate's marginal, when known in closed form.
  std::function<double(double)> marginal_cdf;
  // Mean and variance of the first coordinate's marginal.
  double marginal_mean = 0.0;
  double marginal_variance = 1.0;
  // Unique minimizer of h, when h has one.
  std::optional<SampleVector<double>> mode;
};

/// standard-normal, gaussian-mixture, banana.
const Target& find_target(const std::string& name);
std::vector<std::string> target_names();

}  // namespace mat::cli

#endif  // MAT_CLI_TARGETS_HPP_
