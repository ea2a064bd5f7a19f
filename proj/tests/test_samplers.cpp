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

#include "mat/errors.hpp"
#include "mat/samplers.hpp"
#include "mat/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace mat;

namespace {

using Vec = SampleVector<double>;

Vec scalar(double x) { return Vec::Constant(1, x); }

SamplerConfig config_with(double gamma, double epsilon, SamplerKind kind = SamplerKind::kSgld, int samples = 1) {
  SamplerConfig c;
  c.gamma = gamma;
  c.epsilon = epsilon;
  c.kind = kind;
  c.samples = samples;
  return c;
}

// grad of z^2 / 2
const GradFn<double> kQuadratic = [](const Vec& z) { return z; };

std::vector<double> first_coordinate(const std::vector<Vec>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s(0));
  return out;
}

}  // namespace

TEST_CASE("sgld_step examples") {
  SamplerRng rng(1);
  CHECK(sgld_step<double>(scalar(1.0), scalar(1.0), config_with(0.1, 0.0), rng)(0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(sgld_step<double>(scalar(1.7), scalar(-4.0), config_with(0.0, 0.0), rng)(0) == 1.7);

  // the noise term has standard deviation sqrt(2 gamma) * epsilon
  SamplerRng noise_rng(2);
  std::vector<double> moves;
  for (int i = 0; i < 20000; ++i) moves.push_back(sgld_step<double>(scalar(0.0), scalar(0.0), config_with(0.02, 0.5), noise_rng)(0));
  CHECK(sample_variance(moves) == doctest::Approx(2 * 0.02 * 0.25).epsilon(0.05));
}

TEST_CASE("sgld_step errors name the coordinate") {
  SamplerRng rng(1);
  Vec g(3);
  g << 0.0, std::nan(""), 1.0;
  try {
    sgld_step<double>(Vec::Zero(3), g, config_with(0.1, 1.0), rng);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
  CHECK_THROWS_AS(sgld_step<double>(Vec::Zero(3), Vec::Zero(2), config_with(0.1, 1.0), rng), ShapeError);
}

TEST_CASE("plain SGLD is stationary on the standard normal") {
  SamplerRng rng(20240601);
  const auto chain = sample_chain<double>(kQuadratic, scalar(0.0), config_with(0.01, 1.0, SamplerKind::kSgld, 50000), 0.0, rng);
  const std::vector<double> kept = burn_in(first_coordinate(chain.samples), 0.2);
  CHECK(std::abs(sample_mean(kept)) < 0.05);
  const double var = sample_variance(kept);
  CHECK(var >= 0.85);
  CHECK(var <= 1.15);
}

TEST_CASE("gaussian chain passes a KS test after thinning") {
  SamplerRng rng(99);
  const auto chain = sample_chain<double>(kQuadratic, scalar(0.0), config_with(0.05, 1.0, SamplerKind::kSgld, 10000), 0.0, rng);
  const std::vector<double> kept = burn_in(first_coordinate(chain.samples), 0.2);
  const auto stride = static_cast<std::size_t>(std::ceil(autocorrelation_time(kept)));
  const std::vector<double> thinned = thin(kept, stride);
  const double d = ks_statistic(thinned, [](double x) { return normal_cdf(x); });
  CHECK(d < ks_critical_value(thinned.size(), 0.01));
}

TEST_CASE("preconditioned steps") {
  SUBCASE("rmsprop on a constant gradient approaches gamma * sign(g)") {
    SamplerConfig c = config_with(0.01, 0.0, SamplerKind::kRmspropSgld);
    Preconditioner<double> state(c.kind, c, 2);
    SamplerRng rng(0);
    Vec z = Vec::Zero(2);
    const Vec g{{3.0, -0.25}};
    Vec step;
    for (int k = 0; k < 20000; ++k) {
      const Vec next = psgld_step<double>(z, g, c, state, rng);
      step = next - z;
      z = next;
    }
    CHECK(step(0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(step(1) == doctest::Approx(0.01).epsilon(1e-6));
  }
  SUBCASE("zero step still advances the state") {
    SamplerConfig c = config_with(0.0, 0.0, SamplerKind::kRmspropSgld);
    Preconditioner<double> state(c.kind, c, 1);
    SamplerRng rng(0);
    const Vec z = psgld_step<double>(scalar(2.0), scalar(5.0), c, state, rng);
    CHECK(z(0) == 2.0);
    CHECK(state.steps() == 1);
    CHECK(state.second_moment()(0) > 0.0);
  }
  SUBCASE("adam with a zero gradient stream stays put") {
    SamplerConfig c = config_with(0.1, 0.0, SamplerKind::kAdamSgld);
    Preconditioner<double> state(c.kind, c, 3);
    SamplerRng rng(0);
    Vec z{{1.0, -2.0, 0.5}};
    const Vec start = z;
    for (int k = 0; k < 100; ++k) z = psgld_step<double>(z, Vec::Zero(3), c, state, rng);
    CHECK(z == start);
  }
  SUBCASE("adam's first bias-corrected step has unit magnitude") {
    SamplerConfig c = config_with(0.1, 0.0, SamplerKind::kAdamSgld);
    Preconditioner<double> state(c.kind, c, 1);
    SamplerRng rng(0);
    CHECK(psgld_step<double>(scalar(0.0), scalar(7.0), c, state, rng)(0) == doctest::Approx(-0.1).epsilon(1e-8));
  }
}

TEST_CASE("preconditioned chains settle at their adjusted variance") {
  for (SamplerKind kind : {SamplerKind::kRmspropSgld, SamplerKind::kAdamSgld}) {
    CAPTURE(to_string(kind));
    const SamplerConfig c = config_with(0.01, 1.0, kind, 50000);
    const double target = quadratic_stationary_variance(c);
    CHECK(target > 0.9);
    CHECK(target < 1.2);
    SamplerRng rng(7);
    const auto chain = sample_chain<double>(kQuadratic, scalar(0.0), c, 0.0, rng);
    const std::vector<double> kept = burn_in(first_coordinate(chain.samples), 0.2);
    CHECK(sample_variance(kept) == doctest::Approx(target).epsilon(0.15));
  }
  CHECK(quadratic_stationary_variance(config_with(0.01, 1.0)) == doctest::Approx(1.0 / (1.0 - 0.005)).epsilon(1e-12));
  CHECK(quadratic_stationary_variance(config_with(0.01, 1.0, SamplerKind::kRmspropSgld)) ==
        doctest::Approx(1.005 * 1.005).epsilon(1e-6));
}

TEST_CASE("sample_chain algebra") {
  SamplerRng rng(3);
  const Vec init{{1.0, -2.0}};
  const auto one = sample_chain<double>(kQuadratic, init, config_with(0.1, 0.0), 0.7, rng);
  const Vec expected = 0.7 * init + 0.3 * (init - 0.1 * init);
  CHECK((one.ema - expected).cwiseAbs().maxCoeff() <= 1e-15);
  REQUIRE(one.samples.size() == 1);

  const auto memoryless = sample_chain<double>(kQuadratic, init, config_with(0.1, 1.0, SamplerKind::kSgld, 25), 0.0, rng);
  CHECK(memoryless.ema == memoryless.samples.back());

  // projection runs before the EMA sees the iterate
  const Projection<double> clamp = [](Vec& z) { z = z.cwiseMax(-0.5).cwiseMin(0.5); };
  const auto projected = sample_chain<double>(kQuadratic, init, config_with(0.1, 1.0, SamplerKind::kSgld, 10), 0.0, rng, clamp);
  for (const auto& s : projected.samples) CHECK(s.cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("determinism") {
  for (SamplerKind kind : {SamplerKind::kSgld, SamplerKind::kRmspropSgld, SamplerKind::kAdamSgld}) {
    const SamplerConfig c = config_with(0.05, 1.0, kind, 500);
    SamplerRng a(42), b(42);
    const auto x = sample_chain<double>(kQuadratic, Vec::Ones(4), c, 0.9, a);
    const auto y = sample_chain<double>(kQuadratic, Vec::Ones(4), c, 0.9, b);
    for (std::size_t k = 0; k < x.samples.size(); ++k) {
      CHECK(std::memcmp(x.samples[k].data(), y.samples[k].data(), 4 * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("noise scaling") {
  SamplerRng rng(5);
  // with epsilon = 0 the chain is plain gradient descent
  const auto gd = sample_chain<double>(kQuadratic, scalar(1.0), config_with(0.1, 0.0, SamplerKind::kSgld, 10), 0.0, rng);
  CHECK(gd.samples.back()(0) == doctest::Approx(std::pow(0.9, 10)).epsilon(1e-14));
  // shrinking gamma with sqrt(2 gamma) epsilon held at 0.1 leaves pure noise
  std::vector<double> increments;
  const double gamma = 1e-8;
  const double epsilon = 0.1 / std::sqrt(2.0 * gamma);
  for (int i = 0; i < 20000; ++i) {
    increments.push_back(sgld_step<double>(scalar(3.0), scalar(3.0), config_with(gamma, epsilon), rng)(0) - 3.0);
  }
  CHECK(std::abs(sample_mean(increments)) < 0.003);
  CHECK(std::sqrt(sample_variance(increments)) == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("ema tracker") {
  EmaTracker<double> t(0.9, scalar(0.0));
  t.update(scalar(1.0));
  CHECK(t.current()(0) == doctest::Approx(0.1).epsilon(1e-15));

  const EmaTracker<double> same = ema_update(EmaTracker<double>(0.3, scalar(2.5)), scalar(2.5));
  CHECK(same.current()(0) == 2.5);

  EmaTracker<double> geo(0.5, scalar(0.0));
  double gap = 4.0;
  for (int i = 0; i < 100; ++i) {
    geo.update(scalar(4.0));
    const double next_gap = std::abs(geo.current()(0) - 4.0);
    CHECK(next_gap <= 0.5 * gap + 1e-15);
    gap = next_gap;
  }
  CHECK(std::abs(geo.current()(0) - 4.0) <= 1e-12);

  CHECK_THROWS_AS(t.update(Vec::Zero(2)), ShapeError);
  CHECK_THROWS_AS(EmaTracker<double>(1.0, scalar(0.0)), InvalidArgument);
  CHECK_THROWS_AS(EmaTracker<double>(-0.1, scalar(0.0)), InvalidArgument);
}

TEST_CASE("config validation and names") {
  CHECK_THROWS_AS(config_with(0.1, 1.0, SamplerKind::kSgld, 0).validate(), InvalidArgument);
  CHECK_THROWS_AS(config_with(std::nan(""), 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(config_with(0.1, -1.0).validate(), InvalidArgument);
  CHECK(parse_sampler_kind("adam-sgld") == SamplerKind::kAdamSgld);
  CHECK(to_string(SamplerKind::kRmspropSgld) == "rmsprop-sgld");
  CHECK_THROWS_AS(parse_sampler_kind("hmc"), InvalidArgument);
}

TEST_CASE("stats helpers") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(ks_critical_value(10000, 0.01) == doctest::Approx(0.016276).epsilon(1e-4));
  const std::vector<double> xs{1, 2, 3, 4, 5};
  CHECK(thin(xs, 2) == std::vector<double>{1, 3, 5});
  CHECK(burn_in(xs, 0.2) == std::vector<double>{2, 3, 4, 5});
}

TEST_CASE("float instantiation") {
  SamplerRng rng(1);
  const SampleVector<float> z = sgld_step<float>(SampleVector<float>::Ones(2), SampleVector<float>::Ones(2), config_with(0.1, 0.0), rng);
  CHECK(z(0) == doctest::Approx(0.9f));
}
