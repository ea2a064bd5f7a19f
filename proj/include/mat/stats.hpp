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

#ifndef MAT_STATS_HPP_
#define MAT_STATS_HPP_

#include <functional>
#include <span>
#include <vector>

namespace mat {

double sample_mean(std::span<const double> xs);
// Unbiased (n - 1) variance.
double sample_variance(std::span<const double> xs);

double normal_cdf(double x, double mean = 0.0, double stddev = 1.0);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `xs`.
double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf);

/// Asymptotic two-sided critical value sqrt(-ln(alpha / 2) / 2) / sqrt(n).
double ks_critical_value(std::size_t n, double alpha);

/// Integrated autocorrelation time with Sokal's adaptive window (c = 5).
double autocorrelation_time(std::span<const double> xs);

std::vector<double> thin(std::span<const double> xs, std::size_t stride);

// Drops the leading `fraction` of a chain.
std::vector<double> burn_in(std::span<const double> xs, double fraction);

double median(std::vector<double> xs);

}  // namespace mat

#endif  // MAT_STATS_HPP_
