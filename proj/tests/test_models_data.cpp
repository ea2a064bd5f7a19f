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

#include "mat/data.hpp"
#include "mat/errors.hpp"
#include "mat/gradcheck.hpp"
#include "mat/losses.hpp"
#include "mat/model.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

using namespace mat;

namespace {

const std::string kFixtures = MAT_FIXTURE_DIR;

ModelSpec token_spec(Index vocab, Index dim, std::vector<Index> hidden, Index out) {
  ModelSpec s;
  s.vocab_size = vocab;
  s.embedding_dim = dim;
  s.hidden = std::move(hidden);
  s.output_dim = out;
  return s;
}

Batch token_batch(std::vector<std::vector<Index>> seqs, std::vector<double> targets) {
  auto batches = make_token_batches(seqs, targets, static_cast<Index>(seqs.size()));
  REQUIRE(batches.size() == 1);
  return batches.front();
}

ParameterVector with_slot(ParameterVector theta, const std::string& name, const Matrix& value) {
  const Slot& s = theta.layout.find(name);
  theta.values.segment(s.offset, s.size()) = Eigen::Map<const Vector>(value.data(), value.size());
  return theta;
}

bool same_batches(const std::vector<Batch>& a, const std::vector<Batch>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].ids != b[i].ids || a[i].lengths != b[i].lengths || a[i].targets != b[i].targets) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("embedding lookup") {
  const Model model(token_spec(3, 3, {}, 2));
  const Batch batch = token_batch({{0, 2}, {1, 1}}, {0, 1});
  ParameterVector theta = model.init(1);

  SUBCASE("identity table gives one-hot rows") {
    theta = with_slot(theta, "embedding", Matrix::Identity(3, 3));
    const Tensor e = model.embed(theta, batch);
    CHECK(e.values() == Matrix{{1, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 0}});
  }
  SUBCASE("zero table") {
    theta = with_slot(theta, "embedding", Matrix::Zero(3, 3));
    CHECK(model.embed(theta, batch).values().isZero(0.0));
  }
  SUBCASE("random table by direct indexing") {
    const Batch b = token_batch({{2, 0}}, {1});
    const Tensor table = theta.slot("embedding");
    const Tensor e = model.embed(theta, b);
    CHECK(e.values().row(0) == table.values().row(2));
    CHECK(e.values().row(1) == table.values().row(0));
  }
  SUBCASE("out-of-range id") {
    const Batch bad = token_batch({{0, 3}}, {0});
    CHECK_THROWS_AS(model.embed(theta, bad), InvalidArgument);
  }
}

TEST_CASE("forward pass") {
  SUBCASE("zero weights give zero logits") {
    const Model model(token_spec(5, 4, {6}, 3));
    ParameterVector theta = model.init(2);
    const Batch batch = token_batch({{1, 2, 3}, {4}}, {0, 2});
    const Tensor x = model.embed(theta, batch);
    theta.values.setZero();
    CHECK(model.forward_logits(theta, batch, x).values().isZero(0.0));
  }
  SUBCASE("single linear layer by hand") {
    ModelSpec spec;
    spec.input = InputKind::kFeatures;
    spec.feature_dim = 2;
    spec.output_dim = 2;
    const Model model(spec);
    ParameterVector theta = model.init(0);
    theta = with_slot(theta, "W0", Matrix{{1, 2}, {3, 4}});
    theta = with_slot(theta, "b0", Matrix{{0.5, -0.5}});
    Batch batch;
    batch.size = 2;
    batch.features = Matrix{{1, 0}, {2, -1}};
    batch.targets = {0, 1};
    const Tensor z = model.forward_logits(theta, batch, Tensor::matrix(batch.features));
    // [1,0] W = [1,2]; [2,-1] W = [2-3, 4-4] = [-1, 0]
    CHECK(z.values() == Matrix{{1.5, 1.5}, {-0.5, -0.5}});
  }
  SUBCASE("gradient with respect to the embedded input") {
    for (Activation act : {Activation::kTanh, Activation::kRelu}) {
      ModelSpec spec = token_spec(7, 3, {5}, 3);
      spec.activation = act;
      const Model model(spec);
      ParameterVector theta = model.init(4);
      theta.values *= 8.0;
      const Batch batch = token_batch({{2, 5, 6}, {3}, {1, 4}}, {0, 2, 1});
      const Tensor x = model.embed(theta, batch);
      const double err = gradcheck(
          [&](Tape& t, Var e) {
            const ModelVars vars = model.constants(t, theta);
            return task_loss(model.forward_logits(vars, batch, e), batch.targets, TaskKind::kClassification);
          },
          x, 1e-5);
      CHECK(err < 1e-6);
    }
  }
  SUBCASE("padding rows do not reach the output") {
    const Model model(token_spec(6, 2, {3}, 2));
    const ParameterVector theta = model.init(5);
    const Batch batch = token_batch({{2, 3, 4}, {5}}, {0, 1});
    Tensor x = model.embed(theta, batch);
    const Tensor base = model.forward_logits(theta, batch, x);
    x.values().row(4).setConstant(100.0);
    x.values().row(5).setConstant(-7.0);
    CHECK(model.forward_logits(theta, batch, x).values() == base.values());
  }
  SUBCASE("shape mismatch") {
    const Model model(token_spec(6, 2, {3}, 2));
    const ParameterVector theta = model.init(5);
    const Batch batch = token_batch({{2, 3}}, {0});
    CHECK_THROWS_AS(model.forward_logits(theta, batch, Tensor::zeros({2, 3})), ShapeError);
  }
}

TEST_CASE("forward pass is permutation-equivariant over batch rows") {
  std::mt19937_64 rng(10);
  ModelSpec spec;
  spec.input = InputKind::kFeatures;
  spec.feature_dim = 4;
  spec.hidden = {8, 5};
  spec.output_dim = 3;
  const Model model(spec);
  const ParameterVector theta = model.init(3);
  std::normal_distribution<double> n;
  Batch batch;
  batch.size = 6;
  batch.features = Matrix(6, 4);
  for (Index i = 0; i < batch.features.size(); ++i) batch.features.data()[i] = n(rng);
  batch.targets = {0, 1, 2, 0, 1, 2};
  const Matrix base = model.forward_logits(theta, batch, Tensor::matrix(batch.features)).values();
  std::vector<Index> perm{3, 0, 5, 1, 4, 2};
  Batch shuffled = batch;
  for (Index i = 0; i < 6; ++i) shuffled.features.row(i) = batch.features.row(perm[static_cast<std::size_t>(i)]);
  const Matrix out = model.forward_logits(theta, shuffled, Tensor::matrix(shuffled.features)).values();
  for (Index i = 0; i < 6; ++i) CHECK(out.row(i) == base.row(perm[static_cast<std::size_t>(i)]));
}

TEST_CASE("parameter layout round trip over random specs") {
  std::mt19937_64 rng(100);
  std::uniform_int_distribution<Index> dim(1, 6);
  std::uniform_int_distribution<int> depth(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    ModelSpec spec = token_spec(dim(rng) + 1, dim(rng), {}, dim(rng) + 1);
    for (int l = depth(rng); l > 0; --l) spec.hidden.push_back(dim(rng));
    if (trial % 3 == 0) {
      spec.input = InputKind::kFeatures;
      spec.feature_dim = dim(rng);
    }
    const Model model(spec);
    const ParameterVector theta = model.init(static_cast<std::uint64_t>(trial));
    CHECK(theta.values.size() == model.layout().total_size());
    CHECK((theta.values.array().abs() <= 0.1).all());
    const ParameterVector back = ParameterVector::flatten(model.layout(), theta.unflatten());
    CHECK(back.values == theta.values);
    const ParameterVector prefixed = ParameterVector::flatten(model.layout(), theta.unflatten("p."), "p.");
    CHECK(prefixed.values == theta.values);
  }
  const Model model(token_spec(4, 2, {3}, 2));
  auto named = model.init(0).unflatten();
  named.erase("b1");
  CHECK_THROWS_AS(ParameterVector::flatten(model.layout(), named), KeyError);
}

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS(token_spec(0, 2, {}, 2).validate(), InvalidArgument);
  CHECK_THROWS_AS(token_spec(3, 2, {0}, 2).validate(), InvalidArgument);
  ModelSpec reg = token_spec(3, 2, {}, 2);
  reg.task = TaskKind::kRegression;
  CHECK_THROWS_AS(reg.validate(), InvalidArgument);
  CHECK(parse_task_kind("regression") == TaskKind::kRegression);
  CHECK(parse_activation("tanh") == Activation::kTanh);
  CHECK_THROWS_AS(parse_activation("gelu"), InvalidArgument);
}

TEST_CASE("perturbation bookkeeping") {
  const Batch batch = token_batch({{2, 3}, {4, 5}}, {0, 1});
  Perturbation p = Perturbation::zeros_for(batch, 3);
  CHECK(p.delta.rows() == 4);
  CHECK(p.examples() == 2);
  p.delta.values().row(2) << 3, 0, 0;
  p.delta.values().row(3) << 0, 4, 0;
  CHECK(p.example_norms()(0) == 0.0);
  CHECK(p.example_norms()(1) == 5.0);
  CHECK(p.max_norm() == 5.0);
}

TEST_CASE("synthetic datasets") {
  SUBCASE("deterministic per seed") {
    for (const char* name : {"xor-tokens", "two-moons-tokens", "linear-regression-tokens"}) {
      SyntheticSpec spec;
      spec.name = name;
      spec.label_noise = 0.1;
      const Dataset a = make_synthetic(spec, 5);
      const Dataset b = make_synthetic(spec, 5);
      const Dataset c = make_synthetic(spec, 6);
      CHECK(same_batches(a.train, b.train));
      CHECK(same_batches(a.eval, b.eval));
      CHECK_FALSE(same_batches(a.train, c.train));
      CHECK_FALSE(same_batches(a.train, a.eval));
    }
  }
  SUBCASE("unknown name") {
    SyntheticSpec spec;
    spec.name = "imagenet";
    CHECK_THROWS_AS(make_synthetic(spec, 0), InvalidArgument);
  }
  SUBCASE("bayes rule accuracy under label noise") {
    SyntheticSpec spec;
    spec.label_noise = 0.1;
    spec.eval_size = 10000;
    const Dataset d = make_synthetic(spec, 17);
    REQUIRE(d.bayes_accuracy.has_value());
    CHECK(*d.bayes_accuracy == doctest::Approx(0.9));
    Index correct = 0, total = 0;
    for (const Batch& b : d.eval) {
      for (Index i = 0; i < b.size; ++i) {
        const Index a = b.ids[static_cast<std::size_t>(i * b.seq_len)] - 2;
        const Index c = b.ids[static_cast<std::size_t>(i * b.seq_len + 1)] - 4;
        correct += static_cast<double>(a ^ c) == b.targets[static_cast<std::size_t>(i)];
        ++total;
      }
    }
    CHECK(total == 10000);
    CHECK(static_cast<double>(correct) / static_cast<double>(total) == doctest::Approx(0.9).epsilon(0.02 / 0.9));
  }
  SUBCASE("keyword dataset carries its keyword") {
    SyntheticSpec spec;
    spec.name = "two-moons-tokens";
    const Dataset d = make_synthetic(spec, 3);
    for (const Batch& b : d.train) {
      for (Index i = 0; i < b.size; ++i) {
        const auto begin = b.ids.begin() + i * b.seq_len;
        const bool has0 = std::find(begin, begin + b.seq_len, 2) != begin + b.seq_len;
        const bool has1 = std::find(begin, begin + b.seq_len, 3) != begin + b.seq_len;
        CHECK(has0 != has1);
        CHECK(static_cast<double>(has1) == b.targets[static_cast<std::size_t>(i)]);
      }
    }
  }
}

TEST_CASE("xor needs a hidden layer") {
  // Mean pooling makes a linear model's score additive: s(a) + t(b). Over the
  // four patterns, every additive rule with a threshold gets at most three
  // right, since s0+t0 > 0, s1+t1 > 0 and s0+t1 < 0, s1+t0 < 0 sum to a
  // contradiction. Check by enumerating sign patterns of the four scores.
  int best_linear = 0;
  const double grid[] = {-2, -1, -0.5, 0.5, 1, 2};
  for (double s0 : grid)
    for (double s1 : grid)
      for (double t0 : grid)
        for (double t1 : grid) {
          int right = 0;
          right += (s0 + t0 > 0) == false;  // a^b = 0
          right += (s1 + t1 > 0) == false;
          right += (s0 + t1 > 0) == true;
          right += (s1 + t0 > 0) == true;
          best_linear = std::max(best_linear, right);
        }
  CHECK(best_linear == 3);

  // A two-layer MLP fits all four patterns.
  const Model model(token_spec(6, 4, {8}, 2));
  const Batch batch = token_batch({{2, 4}, {2, 5}, {3, 4}, {3, 5}}, {0, 1, 1, 0});
  ModelSpec tanh_spec = model.spec();
  tanh_spec.activation = Activation::kTanh;
  const Model net(tanh_spec);
  ParameterVector theta = net.init(8);
  theta.values *= 10.0;
  Tape tape;
  const ModelVars vars = net.declare(tape);
  tape.set_output(task_loss(net.forward_logits(vars, batch, net.embed(vars, batch)), batch.targets,
                            TaskKind::kClassification));
  std::set<std::string> names;
  for (const auto& s : net.layout().slots()) names.insert(s.name);
  for (int step = 0; step < 3000; ++step) {
    tape.forward(Model::bind(theta));
    const Gradients g = tape.backward(names);
    std::map<std::string, Tensor> named(g.begin(), g.end());
    theta.values -= 0.5 * ParameterVector::flatten(net.layout(), named).values;
  }
  const Tensor logits = net.forward_logits(theta, batch, net.embed(theta, batch));
  CHECK(accuracy(logits, batch.targets) == 1.0);
}

TEST_CASE("vocabulary") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.token(kPadId) == "<pad>");
  CHECK(v.add("hello") == 2);
  CHECK(v.add("hello") == 2);
  CHECK(v.id("nope") == kUnknownId);
  CHECK(Vocabulary::split("  Hello\tWORLD  x ") == std::vector<std::string>{"hello", "world", "x"});
  std::string long_text;
  for (int i = 0; i < 600; ++i) long_text += "w" + std::to_string(i % 7) + " ";
  CHECK(Vocabulary::split(long_text).size() == 512);
  CHECK(v.encode(long_text).size() == 512);

  const std::string path = "vocab_roundtrip.txt";
  v.add("world");
  v.save(path);
  const Vocabulary back = Vocabulary::load(path);
  CHECK(back.size() == v.size());
  CHECK(back.id("world") == v.id("world"));
  std::remove(path.c_str());
}

TEST_CASE("dataset loading") {
  SUBCASE("three-row JSONL fixture") {
    const Dataset d = load_dataset(kFixtures + "/three_rows.jsonl", DataFormat::kJsonl);
    REQUIRE(d.train.size() == 3);
    CHECK(d.input == InputKind::kTokens);
    CHECK(d.task == TaskKind::kClassification);
    // <pad>=0 <unk>=1 the=2 cat=3 sat=4 dog=5 ran=6 home=7 a=8
    CHECK(d.train[0].ids == std::vector<Index>{2, 3, 4});
    CHECK(d.train[1].ids == std::vector<Index>{2, 5, 6, 7});
    CHECK(d.train[2].ids == std::vector<Index>{8, 3, 6});
    CHECK(d.train[1].targets == std::vector<double>{1});
    CHECK(d.vocab_size == 9);
  }
  SUBCASE("padding within a batch") {
    LoadOptions opts;
    opts.batch_size = 3;
    const Dataset d = load_dataset(kFixtures + "/three_rows.jsonl", DataFormat::kJsonl, opts);
    REQUIRE(d.train.size() == 1);
    CHECK(d.train[0].seq_len == 4);
    CHECK(d.train[0].ids == std::vector<Index>{2, 3, 4, 0, 2, 5, 6, 7, 8, 3, 6, 0});
    CHECK(d.train[0].lengths == std::vector<Index>{3, 4, 3});
    CHECK(d.train[0].is_padding(3));
    CHECK_FALSE(d.train[0].is_padding(7));
  }
  SUBCASE("text longer than the cap is truncated") {
    const std::string path = "long_row.jsonl";
    {
      std::ofstream out(path);
      out << "{\"text\": \"";
      for (int i = 0; i < 700; ++i) out << "tok" << i << ' ';
      out << "\", \"label\": 1}\n";
    }
    const Dataset d = load_dataset(path, DataFormat::kJsonl);
    CHECK(d.train[0].ids.size() == 512);
    std::remove(path.c_str());
  }
  SUBCASE("CSV features bypass the tokenizer") {
    LoadOptions opts;
    opts.batch_size = 4;
    const Dataset d = load_dataset(kFixtures + "/features.csv", DataFormat::kCsv, opts);
    CHECK(d.input == InputKind::kFeatures);
    CHECK(d.vocab_size == 0);
    CHECK(d.feature_dim == 2);
    REQUIRE(d.train.size() == 1);
    CHECK(d.train[0].features == Matrix{{0.5, 1.0}, {-1.25, 2}, {3, 0}, {0.1, -4}});
    CHECK(d.train[0].targets == std::vector<double>{0, 1, 1, 0});
  }
  SUBCASE("malformed rows report their line") {
    try {
      load_dataset(kFixtures + "/malformed.jsonl", DataFormat::kJsonl);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    try {
      load_dataset(kFixtures + "/malformed.csv", DataFormat::kCsv);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("empty file") {
    CHECK_THROWS_AS(load_dataset(kFixtures + "/empty.jsonl", DataFormat::kJsonl), InvalidArgument);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(kFixtures + "/absent.jsonl", DataFormat::kJsonl), InvalidArgument);
  }
}
