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
#include "mat/losses.hpp"
#include "mat/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace mat;

namespace {

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Dataset xor_data(std::uint64_t seed, double noise = 0.0, Index train = 256, Index eval = 256) {
  SyntheticSpec s;
  s.label_noise = noise;
  s.train_size = train;
  s.eval_size = eval;
  return make_synthetic(s, seed);
}

ModelSpec xor_model(const Dataset& d) { return d.model_spec({16}, 8, Activation::kRelu); }

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.steps = 20;
  c.samples = 3;
  c.gamma = 0.5;
  c.seed = seed;
  c.attack.steps = 3;
  return c;
}

// Dense 1-D linear regressor f(x) = w x + b.
struct Line {
  ModelSpec spec;
  Dataset data;
};

Line line_problem(const std::vector<double>& xs, const std::vector<double>& ys) {
  Line l;
  l.spec.input = InputKind::kFeatures;
  l.spec.feature_dim = 1;
  l.spec.output_dim = 1;
  l.spec.task = TaskKind::kRegression;
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  l.data.input = InputKind::kFeatures;
  l.data.task = TaskKind::kRegression;
  l.data.feature_dim = 1;
  l.data.classes = 1;
  l.data.train = make_feature_batches(rows, ys, static_cast<Index>(xs.size()));
  l.data.eval = l.data.train;
  return l;
}

Perturbation random_perturbation(std::mt19937_64& rng, Index rows, Index cols, Index per, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Perturbation p;
  p.rows_per_example = per;
  p.delta = Tensor::zeros({rows, cols});
  for (Index i = 0; i < p.delta.size(); ++i) p.delta(i) = n(rng);
  return p;
}

}  // namespace

TEST_CASE("clip_perturbation") {
  SUBCASE("twice the radius lands on the sphere in the same direction") {
    Perturbation p;
    p.delta = Tensor::matrix(Matrix{{0.6, 0.8}});
    const Perturbation out = clip_perturbation(p, 0.5);
    CHECK(out.delta.values().norm() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.delta(0) / out.delta(1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(out.cap == 0.5);
  }
  SUBCASE("zero and in-ball inputs are untouched") {
    Perturbation z;
    z.delta = Tensor::zeros({3, 2});
    CHECK(clip_perturbation(z, 1e-5).delta.values().isZero(0.0));
    Perturbation in;
    in.delta = Tensor::matrix(Matrix{{1e-6, -2e-6}});
    CHECK(clip_perturbation(in, 1e-5).delta.values() == in.delta.values());
  }
  SUBCASE("default radius 1e-5") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 1000; ++trial) {
      Perturbation p = random_perturbation(rng, 4, 5, 4, 1.0);
      p.delta.values() *= 3.7e-5 / p.delta.values().norm();
      const double n = clip_perturbation(p, 1e-5).delta.values().norm();
      CHECK(n <= 1e-5);
      CHECK(std::abs(n - 1e-5) <= 1e-17);
    }
  }
  SUBCASE("per-example norms") {
    std::mt19937_64 rng(38);
    for (int trial = 0; trial < 200; ++trial) {
      const Perturbation p = random_perturbation(rng, 12, 3, 3, 0.4);
      const Perturbation out = clip_perturbation(p, 0.5);
      const Vector before = p.example_norms();
      const Vector after = out.example_norms();
      for (Index e = 0; e < 4; ++e) {
        CHECK(after(e) <= 0.5);
        if (before(e) <= 0.5) CHECK(after(e) == before(e));
      }
    }
  }
  CHECK_THROWS_AS(clip_perturbation(Perturbation{}, 0.0), InvalidArgument);
}

TEST_CASE("mask_padding zeroes padded rows only") {
  const Batch batch = make_token_batches({{2, 3, 4}, {5}}, {0, 1}, 2).front();
  std::mt19937_64 rng(1);
  Perturbation p = random_perturbation(rng, 6, 2, 3, 1.0);
  const Matrix before = p.delta.values();
  mask_padding(p, batch);
  for (Index r = 0; r < 6; ++r) {
    if (batch.is_padding(r)) {
      CHECK(p.delta.values().row(r).isZero(0.0));
    } else {
      CHECK(p.delta.values().row(r) == before.row(r));
    }
  }
}

TEST_CASE("sample-averaged estimates") {
  const Dataset d = xor_data(3, 0.0, 32, 32);
  const Model model(xor_model(d));
  ParameterVector theta = model.init(4);
  theta.values *= 10.0;
  const Batch& batch = d.train.front();
  const Index rows = batch.input_rows();
  std::mt19937_64 rng(5);
  std::vector<Tensor> deltas;
  for (int k = 0; k < 3; ++k) deltas.push_back(random_perturbation(rng, rows, 8, 2, 0.3).delta);

  SUBCASE("K identical samples agree with the mean form") {
    const ThetaEstimate ema = estimate_h_mu(model, theta, batch, {deltas[0]}, 2.0);
    const ThetaEstimate per = estimate_h_mu(model, theta, batch, {deltas[0], deltas[0], deltas[0]}, 2.0);
    CHECK(per.value == doctest::Approx(ema.value).epsilon(1e-14));
    const double top = ema.grad.values.cwiseAbs().maxCoeff();
    CHECK((per.grad.values - ema.grad.values).cwiseAbs().maxCoeff() <= 1e-14 * top);
    CHECK(ema.value == doctest::Approx(combined_objective(model, theta, batch, deltas[0], {2.0})).epsilon(1e-15));
  }
  SUBCASE("lambda zero reduces to the task loss") {
    const ThetaEstimate plain = task_loss_gradient(model, theta, batch);
    const ThetaEstimate ema = estimate_h_mu(model, theta, batch, {deltas[1]}, 0.0);
    const ThetaEstimate per = estimate_h_mu(model, theta, batch, deltas, 0.0);
    CHECK(ema.value == plain.value);
    CHECK(bitwise_equal(ema.grad.values, plain.grad.values));
    CHECK(per.value == doctest::Approx(plain.value).epsilon(1e-15));
    CHECK((per.grad.values - plain.grad.values).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("three distinct samples average the objectives") {
    const ThetaEstimate per = estimate_h_mu(model, theta, batch, deltas, 1.5);
    double mean = 0.0;
    for (const Tensor& delta : deltas) mean += combined_objective(model, theta, batch, delta, {1.5}) / 3.0;
    CHECK(per.value == doctest::Approx(mean).epsilon(1e-12));
  }
  SUBCASE("perturbation estimate at zero") {
    const DeltaEstimate est = estimate_h_nu(model, {theta}, Tensor::zeros({rows, 8}), batch, 3.0);
    CHECK(est.value == 0.0);
    CHECK(est.grad.values().isZero(0.0));
  }
  SUBCASE("perturbation estimate is linear in lambda") {
    const ParameterVector other = model.init(9);
    const DeltaEstimate one = estimate_h_nu(model, {theta, other}, deltas[2], batch, 0.75);
    const DeltaEstimate two = estimate_h_nu(model, {theta, other}, deltas[2], batch, 1.5);
    CHECK(two.value == 2.0 * one.value);
    CHECK(two.grad.values() == 2.0 * one.grad.values());
    const double r0 = adversarial_reg(model, theta, batch, deltas[2]);
    const double r1 = adversarial_reg(model, other, batch, deltas[2]);
    CHECK(one.value == doctest::Approx(0.75 * (r0 + r1) / 2.0).epsilon(1e-12));
  }
  SUBCASE("empty sample sets are rejected") {
    CHECK_THROWS_AS(estimate_h_mu(model, theta, batch, {}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(estimate_h_nu(model, {}, deltas[0], batch, 1.0), InvalidArgument);
  }
}

TEST_CASE("estimator consistency on frozen inputs") {
  // A long perturbation chain on R(theta, .), then the per-sample average of
  // h_mu over it against h_mu at the chain's EMA with a matched window.
  const Dataset d = xor_data(6, 0.1, 32, 32);
  const Model model(xor_model(d));
  ParameterVector theta = model.init(2);
  theta.values *= 10.0;
  const Batch& batch = d.train.front();
  const Tensor like = Tensor::zeros({batch.input_rows(), 8});
  SamplerConfig sc;
  sc.gamma = 0.05;
  sc.epsilon = 0.05;
  sc.kind = SamplerKind::kAdamSgld;
  sc.samples = 200;
  SamplerRng rng(3);
  const double beta = 1.0 - 2.0 / (sc.samples + 1.0);
  const auto chain = sample_chain<double>(
      [&](const Vector& z) {
        Tensor delta = like;
        delta.flat() = z;
        return Vector(-estimate_h_nu(model, {theta}, delta, batch, 1.0).grad.flat());
      },
      Vector::Zero(like.size()), sc, beta, rng,
      [&](Vector& z) {
        Perturbation p;
        p.delta = like;
        p.delta.flat() = z;
        p.rows_per_example = batch.rows_per_example();
        z = clip_perturbation(p, 0.25).delta.flat();
      });
  std::vector<Tensor> samples;
  for (const Vector& s : chain.samples) {
    Tensor t = like;
    t.flat() = s;
    samples.push_back(t);
  }
  Tensor mean = like;
  mean.flat() = chain.ema;
  const double per = estimate_h_mu(model, theta, batch, samples, 1.0).value;
  const double ema = estimate_h_mu(model, theta, batch, {mean}, 1.0).value;
  CHECK(std::abs(per - ema) <= 0.05 * std::abs(per));
}

TEST_CASE("degenerate MAT is vanilla gradient descent") {
  const Dataset d = xor_data(11, 0.1, 64, 32);
  TrainConfig c = small_config(11);
  c.steps = 50;
  c.samples = 1;
  c.epsilon = 0.0;
  c.beta = 0.0;
  c.lambda = 0.0;
  const TrainResult mat = mat_train(xor_model(d), d, c);
  const TrainResult van = vanilla_train(xor_model(d), d, c);
  CHECK(bitwise_equal(mat.theta.values, van.theta.values));
  REQUIRE(mat.metrics.steps.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(mat.metrics.steps[i].loss == van.metrics.steps[i].loss);

  // and vanilla itself is the textbook update
  const Model model(xor_model(d));
  ParameterVector theta = model.init(11);
  for (int t = 1; t <= 50; ++t) {
    const Batch& b = d.train[static_cast<std::size_t>(t - 1) % d.train.size()];
    theta.values = theta.values - c.gamma * task_loss_gradient(model, theta, b).grad.values;
  }
  CHECK(bitwise_equal(theta.values, van.theta.values));
}

TEST_CASE("zero step size returns the initial parameters") {
  const Dataset d = xor_data(2, 0.0, 32, 32);
  TrainConfig c = small_config(2);
  c.steps = 1;
  c.gamma = 0.0;
  const TrainResult r = mat_train(xor_model(d), d, c);
  CHECK(bitwise_equal(r.theta.values, Model(xor_model(d)).init(2).values));
}

TEST_CASE("MAT learns xor") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = xor_data(seed);
    TrainConfig c;
    c.steps = 300;
    c.samples = 5;
    c.lambda = 1.0;
    c.epsilon = 1e-4;
    c.gamma = 1.0;
    c.seed = seed;
    c.attack.steps = 2;
    const TrainResult r = mat_train(xor_model(d), d, c);
    CAPTURE(seed);
    CHECK(r.metrics.steps.back().eval >= 0.95);
    CHECK(r.metrics.theta_bar_history.size() == 300);
  }
}

TEST_CASE("vanilla learns xor") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = xor_data(seed);
    TrainConfig c;
    c.steps = 1500;
    c.gamma = 1.0;
    c.seed = seed;
    c.attack.steps = 2;
    CHECK(vanilla_train(xor_model(d), d, c).metrics.steps.back().eval >= 0.95);
  }
}

TEST_CASE("clipping holds throughout training") {
  const Dataset d = xor_data(4, 0.1, 64, 32);
  for (TrainMode mode : {TrainMode::kMat, TrainMode::kPgd}) {
    for (SamplerKind kind : {SamplerKind::kSgld, SamplerKind::kAdamSgld}) {
      TrainConfig c = small_config(4);
      c.sampler = kind;
      c.clip_radius = mode == TrainMode::kMat && kind == SamplerKind::kSgld ? 1e-5 : 0.3;
      c.epsilon = 1e-2;
      const TrainResult r = train(mode, xor_model(d), d, c);
      CAPTURE(to_string(mode));
      CHECK(r.metrics.clip_violations == 0);
      CHECK(r.metrics.max_delta_norm <= c.clip_radius);
      CHECK(r.metrics.max_delta_norm > 0.0);
    }
  }
}

TEST_CASE("PGD baseline") {
  const Dataset d = xor_data(5, 0.1, 64, 32);
  SUBCASE("lambda zero follows vanilla") {
    TrainConfig c = small_config(5);
    c.lambda = 0.0;
    const TrainResult pgd = pgd_baseline_train(xor_model(d), d, c);
    const TrainResult van = vanilla_train(xor_model(d), d, c);
    CHECK(bitwise_equal(pgd.theta.values, van.theta.values));
  }
  SUBCASE("no inner steps keeps the random start") {
    TrainConfig c = small_config(5);
    c.samples = 0;
    c.lambda = 2.0;
    c.clip_radius = 0.2;
    c.pgd_init_std = 0.05;
    const TrainResult pgd = pgd_baseline_train(xor_model(d), d, c);
    CHECK(pgd.metrics.grad_evals == c.steps);

    // replay: vanilla descent on L + lambda R at the same seeded starts
    const Model model(xor_model(d));
    ParameterVector theta = model.init(5);
    std::mt19937_64 start_rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int t = 1; t <= c.steps; ++t) {
      const Batch& b = d.train[static_cast<std::size_t>(t - 1) % d.train.size()];
      Perturbation p = Perturbation::zeros_for(b, 8);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index i = 0; i < p.delta.size(); ++i) p.delta(i) = 0.05 * normal(start_rng);
      mask_padding(p, b);
      p = clip_perturbation(p, 0.2);
      theta.values = theta.values - c.gamma * estimate_h_mu(model, theta, b, {p.delta}, 2.0).grad.values;
    }
    CHECK(bitwise_equal(theta.values, pgd.theta.values));
  }
  SUBCASE("one-dimensional linear model is pushed to the radius") {
    Line l = line_problem({1.0, -0.5, 2.0}, {1.0, 0.0, 2.5});
    TrainConfig c;
    c.steps = 5;
    c.samples = 2;
    c.gamma = 0.05;
    c.clip_radius = 0.1;
    c.pgd_step = 0.1;
    c.attack.steps = 1;
    const TrainResult r = pgd_baseline_train(l.spec, l.data, c);
    for (const StepRecord& s : r.metrics.steps) CHECK(s.max_delta_norm == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("vanilla gradient descent") {
  SUBCASE("zero gradient at init leaves parameters unchanged") {
    ModelSpec spec;
    spec.input = InputKind::kFeatures;
    spec.feature_dim = 2;
    spec.output_dim = 1;
    spec.task = TaskKind::kRegression;
    const double b = Model(spec).init(8).slot("b0")(0);
    std::vector<std::vector<double>> rows(4, std::vector<double>{0.0, 0.0});
    Dataset d;
    d.input = InputKind::kFeatures;
    d.task = TaskKind::kRegression;
    d.train = make_feature_batches(rows, {b, b, b, b}, 2);
    TrainConfig c;
    c.steps = 10;
    c.gamma = 0.3;
    c.seed = 8;
    c.attack.steps = 1;
    CHECK(bitwise_equal(vanilla_train(spec, d, c).theta.values, Model(spec).init(8).values));
  }
  SUBCASE("geometric convergence on a quadratic") {
    // L(w, b) = ((w + b - 1)^2 + (-w + b - 3)^2) / 2 has Hessian 2I and
    // minimizer (w, b) = (-1, 2).
    Line l = line_problem({1.0, -1.0}, {1.0, 3.0});
    TrainConfig c;
    c.steps = 40;
    c.gamma = 0.1;
    c.seed = 3;
    c.attack.steps = 1;
    const Vector start = Model(l.spec).init(3).values;
    const Vector optimum{{-1.0, 2.0}};
    const TrainResult r = vanilla_train(l.spec, l.data, c);
    const Vector expected = optimum + std::pow(1.0 - 2.0 * 0.1, 40) * (start - optimum);
    CHECK((r.theta.values - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("adversarial risk evaluation") {
  const Dataset d = xor_data(7, 0.1, 32, 64);
  const Model model(xor_model(d));
  ParameterVector theta = model.init(7);
  theta.values *= 15.0;

  AttackBudget budget;
  budget.steps = 5;
  budget.radius = 0.0;
  CHECK(adversarial_risk_eval(model, theta, d.eval, budget) == 0.0);

  double previous = 0.0;
  for (double radius : {0.01, 0.02, 0.04, 0.08, 0.16}) {
    budget.radius = radius;
    const double risk = adversarial_risk_eval(model, theta, d.eval, budget);
    CHECK(risk >= previous);
    previous = risk;
  }
  budget.radius = 0.05;
  CHECK(adversarial_risk_eval(model, theta, d.eval, budget) == adversarial_risk_eval(model, theta, d.eval, budget));

  SUBCASE("closed form for a 1-D linear model") {
    // R = (w delta)^2 is maximized at |delta| = radius.
    Line l = line_problem({0.5, -1.0}, {0.0, 0.0});
    const Model line(l.spec);
    ParameterVector w = line.init(0);
    w.values << -1.7, 0.3;
    AttackBudget b;
    b.radius = 0.2;
    b.steps = 4;
    CHECK(adversarial_risk_eval(line, w, l.data.eval, b) == doctest::Approx(1.7 * 1.7 * 0.04).epsilon(1e-12));
  }
}

TEST_CASE("ascent and descent signs") {
  const Dataset d = xor_data(8, 0.1, 32, 32);
  const Model model(xor_model(d));
  ParameterVector theta = model.init(8);
  theta.values *= 10.0;
  const Batch& batch = d.train.front();
  std::mt19937_64 rng(2);
  SamplerConfig sc;
  sc.epsilon = 0.0;
  SamplerRng srng(0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor delta = random_perturbation(rng, batch.input_rows(), 8, 2, 0.05).delta;
    // line search for a step that is safe for both players
    double gamma = 1.0;
    const DeltaEstimate dn = estimate_h_nu(model, {theta}, delta, batch, 1.0);
    const ThetaEstimate tm = estimate_h_mu(model, theta, batch, {delta}, 1.0);
    for (; gamma > 1e-8; gamma *= 0.5) {
      Tensor moved = delta;
      moved.flat() = delta.flat() + gamma * dn.grad.flat();
      ParameterVector stepped = theta;
      stepped.values -= gamma * tm.grad.values;
      if (adversarial_reg(model, theta, batch, moved) >= dn.value &&
          combined_objective(model, stepped, batch, delta, {1.0}) <= tm.value) {
        break;
      }
    }
    sc.gamma = gamma;
    const Vector up = sgld_step<double>(delta.flat(), Vector(-dn.grad.flat()), sc, srng);
    Tensor moved = delta;
    moved.flat() = up;
    CHECK(adversarial_reg(model, theta, batch, moved) >= dn.value);
    ParameterVector stepped = theta;
    stepped.values = sgld_step<double>(theta.values, tm.grad.values, sc, srng);
    CHECK(combined_objective(model, stepped, batch, delta, {1.0}) <= tm.value);
  }
}

TEST_CASE("run metrics") {
  const Dataset d = xor_data(9, 0.1, 64, 32);
  for (TrainMode mode : {TrainMode::kVanilla, TrainMode::kPgd, TrainMode::kMat}) {
    TrainConfig c = small_config(9);
    c.steps = 12;
    c.samples = 4;
    c.eval_every = 5;
    const TrainResult r = train(mode, xor_model(d), d, c);
    REQUIRE(r.metrics.steps.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      const StepRecord& s = r.metrics.steps[i];
      CHECK(s.step == static_cast<int>(i) + 1);
      CHECK(s.grad_evals == static_cast<long>(i + 1) * gradient_evals_per_step(mode, 4));
      CHECK(s.adv_risk.has_value() == (s.step % 5 == 0 || s.step == 12));
    }
    CHECK(r.metrics.grad_evals == 12 * gradient_evals_per_step(mode, 4));
  }
  CHECK(gradient_evals_per_step(TrainMode::kVanilla, 7) == 1);
  CHECK(gradient_evals_per_step(TrainMode::kPgd, 7) == 8);
  CHECK(gradient_evals_per_step(TrainMode::kMat, 7) == 14);
}

TEST_CASE("identical seeds give identical runs") {
  const Dataset d = xor_data(10, 0.1, 64, 32);
  for (TrainMode mode : {TrainMode::kPgd, TrainMode::kMat}) {
    TrainConfig c = small_config(10);
    c.epsilon = 1e-2;
    c.estimator = EstimatorMode::kPerSample;
    const TrainResult a = train(mode, xor_model(d), d, c);
    const TrainResult b = train(mode, xor_model(d), d, c);
    CHECK(bitwise_equal(a.theta.values, b.theta.values));
  }
}

TEST_CASE("schedules and validation") {
  TrainConfig c;
  c.steps = 10;
  c.gamma = 2.0;
  c.schedule = GammaSchedule::kLinearDecay;
  CHECK(c.gamma_at(1) == 2.0);
  CHECK(c.gamma_at(6) == doctest::Approx(1.0));
  c.schedule = GammaSchedule::kConstant;
  CHECK(c.gamma_at(10) == 2.0);

  CHECK_THROWS_AS([] { TrainConfig x; x.steps = 0; x.validate(TrainMode::kMat); }(), InvalidArgument);
  CHECK_THROWS_AS([] { TrainConfig x; x.samples = 0; x.validate(TrainMode::kMat); }(), InvalidArgument);
  CHECK_NOTHROW([] { TrainConfig x; x.samples = 0; x.validate(TrainMode::kPgd); }());
  CHECK_THROWS_AS([] { TrainConfig x; x.beta = 1.0; x.validate(TrainMode::kMat); }(), InvalidArgument);
  CHECK_THROWS_AS([] { TrainConfig x; x.clip_radius = 0.0; x.validate(TrainMode::kMat); }(), InvalidArgument);
  CHECK_THROWS_AS([] { TrainConfig x; x.lambda = -1.0; x.validate(TrainMode::kMat); }(), InvalidArgument);
  CHECK(parse_train_mode("pgd") == TrainMode::kPgd);
  CHECK(parse_estimator_mode("per-sample") == EstimatorMode::kPerSample);
  CHECK_THROWS_AS(parse_gamma_schedule("cosine"), InvalidArgument);
}

TEST_CASE("divergence aborts with the step index") {
  Line l = line_problem({1.0, -1.0}, {1.0, 3.0});
  TrainConfig c;
  c.steps = 50;
  c.gamma = 1e150;
  c.attack.steps = 1;
  try {
    vanilla_train(l.spec, l.data, c);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.step() >= 1);
    CHECK(e.step() <= 3);
    CHECK(std::string(e.what()).rfind("step ", 0) == 0);
  }
}
