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

#include "mat/stats.hpp"

#include "mat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mat {

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InvalidArgument("variance needs at least two samples");
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double normal_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0)));
}

double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw InvalidArgument("KS statistic of empty sample");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("ks_critical_value: bad arguments");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double autocorrelation_time(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 4) return 1.0;
  const double m = sample_mean(xs);
  double c0 = 0.0;
  for (double x : xs) c0 += (x - m) * (x - m);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (xs[i] - m) * (xs[i + lag] - m);
    tau += 2.0 * c / (static_cast<double>(n) * c0);
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

std::vector<double> thin(std::span<const double> xs, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("thin: stride must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < xs.size(); i += stride) out.push_back(xs[i]);
  return out;
}

std::vector<double> burn_in(std::span<const double> xs, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("burn_in: fraction must be in [0, 1)");
  const auto skip = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(xs.size())));
  return {xs.begin() + static_cast<std::ptrdiff_t>(skip), xs.end()};
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw InvalidArgument("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace mat
