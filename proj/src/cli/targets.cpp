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

#include "mat/cli/targets.hpp"

#include "mat/stats.hpp"

#include <cmath>
#include <map>

namespace mat::cli {

namespace {

using Vec = SampleVector<double>;

constexpr double kBananaBend = 0.5;
constexpr double kMixtureOffset = 2.0;

// log cosh without overflow.
double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

std::map<std::string, Target> build_registry() {
  std::map<std::string, Target> out;

  Target normal;
  normal.name = "standard-normal";
  normal.dim = 1;
  normal.h = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  normal.grad_h = [](const Vec& z) { return Vec(z); };
  normal.marginal_cdf = [](double x) { return normal_cdf(x); };
  normal.mode = Vec::Zero(1);
  out.emplace(normal.name, normal);

  // 0.5 N(-m, 1) + 0.5 N(m, 1): h = x^2/2 - log cosh(m x) up to a constant.
  Target mixture;
  mixture.name = "gaussian-mixture";
  mixture.dim = 1;
  mixture.h = [](const Vec& z) { return 0.5 * z(0) * z(0) - log_cosh(kMixtureOffset * z(0)); };
  mixture.grad_h = [](const Vec& z) {
    Vec g(1);
    g(0) = z(0) - kMixtureOffset * std::tanh(kMixtureOffset * z(0));
    return g;
  };
  mixture.marginal_cdf = [](double x) {
    return 0.5 * normal_cdf(x, -kMixtureOffset) + 0.5 * normal_cdf(x, kMixtureOffset);
  };
  mixture.marginal_variance = 1.0 + kMixtureOffset * kMixtureOffset;
  out.emplace(mixture.name, mixture);

  // h = x^2/2 + (y - b x^2)^2 / 2; the x-marginal is N(0, 1).
  Target banana;
  banana.name = "banana";
  banana.dim = 2;
  banana.h = [](const Vec& z) {
    const double r = z(1) - kBananaBend * z(0) * z(0);
    return 0.5 * z(0) * z(0) + 0.5 * r * r;
  };
  banana.grad_h = [](const Vec& z) {
    const double r = z(1) - kBananaBend * z(0) * z(0);
    Vec g(2);
    g(0) = z(0) - 2.0 * kBananaBend * z(0) * r;
    g(1) = r;
    return g;
  };
  banana.marginal_cdf = [](double x) { return normal_cdf(x); };
  banana.mode = Vec::Zero(2);
  out.emplace(banana.name, banana);
  return out;
}

const std::map<std::string, Target>& registry() {
  static const std::map<std::string, Target> targets = build_registry();
  return targets;
}

}  // namespace

const Target& find_target(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    std::string known;
    for (const auto& n : target_names()) known += (known.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown target '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> target_names() {
  std::vector<std::string> names;
  for (const auto& [name, target] : registry()) names.push_back(name);
  return names;
}

}  // namespace mat::cli
