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

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace mat {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Index Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const Index id = size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

Index Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::token(Index id) const {
  if (id < 0 || id >= size()) throw InvalidArgument("vocabulary id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::split(const std::string& text, Index max_len) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string word;
  while (static_cast<Index>(out.size()) < max_len && in >> word) {
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(word);
  }
  return out;
}

std::vector<Index> Vocabulary::encode(const std::string& text, Index max_len) const {
  std::vector<Index> ids;
  for (const auto& w : split(text, max_len)) ids.push_back(id(w));
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write vocabulary to " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read vocabulary " + path);
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw ParseError("empty token in vocabulary", lineno);
    if (v.ids_.count(line)) throw ParseError("duplicate token '" + line + "'", lineno);
    v.ids_.emplace(line, v.size());
    v.tokens_.push_back(line);
  }
  if (v.size() < 2) throw InvalidArgument("vocabulary must contain the two reserved tokens");
  return v;
}

// ---------------------------------------------------------------------------
// Batching

std::vector<Batch> make_token_batches(const std::vector<std::vector<Index>>& sequences,
                                      const std::vector<double>& targets, Index batch_size) {
  if (sequences.size() != targets.size()) throw InvalidArgument("sequence/target count mismatch");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < sequences.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(sequences.size(), start + static_cast<std::size_t>(batch_size));
    Batch b;
    b.size = static_cast<Index>(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      b.seq_len = std::max<Index>(b.seq_len, static_cast<Index>(sequences[i].size()));
    }
    // An empty sequence still owns one padding position.
    b.seq_len = std::max<Index>(b.seq_len, 1);
    b.ids.assign(static_cast<std::size_t>(b.size * b.seq_len), kPadId);
    for (std::size_t i = start; i < stop; ++i) {
      const auto& seq = sequences[i];
      const std::size_t row = i - start;
      std::copy(seq.begin(), seq.end(), b.ids.begin() + static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(b.seq_len)));
      b.lengths.push_back(std::max<Index>(static_cast<Index>(seq.size()), 1));
      b.targets.push_back(targets[i]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<Batch> make_feature_batches(const std::vector<std::vector<double>>& rows,
                                        const std::vector<double>& targets, Index batch_size) {
  if (rows.size() != targets.size()) throw InvalidArgument("row/target count mismatch");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
    Batch b;
    b.size = static_cast<Index>(stop - start);
    const Index width = static_cast<Index>(rows[start].size());
    b.features = Matrix(b.size, width);
    for (std::size_t i = start; i < stop; ++i) {
      if (static_cast<Index>(rows[i].size()) != width) throw ShapeError("feature rows differ in width");
      for (Index c = 0; c < width; ++c) b.features(static_cast<Index>(i - start), c) = rows[i][static_cast<std::size_t>(c)];
      b.targets.push_back(targets[i]);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

ModelSpec Dataset::model_spec(std::vector<Index> hidden, Index embedding_dim, Activation activation) const {
  ModelSpec spec;
  spec.input = input;
  spec.vocab_size = vocab_size;
  spec.embedding_dim = input == InputKind::kTokens ? embedding_dim : 0;
  spec.feature_dim = feature_dim;
  spec.hidden = std::move(hidden);
  spec.output_dim = task == TaskKind::kRegression ? 1 : classes;
  spec.task = task;
  spec.activation = activation;
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Synthetic generators

namespace {

struct Sampled {
  std::vector<std::vector<Index>> sequences;
  std::vector<double> targets;
};

// Tokens 2..5: a0 a1 b0 b1; fillers follow.
Sampled xor_tokens(Index n, double noise, Index fillers, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(noise);
  std::uniform_int_distribution<Index> filler(6, 9);
  Sampled s;
  for (Index i = 0; i < n; ++i) {
    const int a = coin(rng) ? 1 : 0;
    const int b = coin(rng) ? 1 : 0;
    std::vector<Index> seq{2 + a, 4 + b};
    for (Index f = 0; f < fillers; ++f) seq.push_back(filler(rng));
    int label = a ^ b;
    if (noise > 0.0 && flip(rng)) label = 1 - label;
    s.sequences.push_back(std::move(seq));
    s.targets.push_back(label);
  }
  return s;
}

// Keyword tokens 2 (class 0) and 3 (class 1) hidden among distractors 4..15.
Sampled keyword_tokens(Index n, double noise, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(noise);
  std::uniform_int_distribution<Index> length(3, 8);
  std::uniform_int_distribution<Index> distractor(4, 15);
  Sampled s;
  for (Index i = 0; i < n; ++i) {
    const int cls = coin(rng) ? 1 : 0;
    const Index len = length(rng);
    std::vector<Index> seq;
    for (Index t = 0; t < len; ++t) seq.push_back(distractor(rng));
    std::uniform_int_distribution<Index> where(0, len - 1);
    seq[static_cast<std::size_t>(where(rng))] = 2 + cls;
    int label = cls;
    if (noise > 0.0 && flip(rng)) label = 1 - label;
    s.sequences.push_back(std::move(seq));
    s.targets.push_back(label);
  }
  return s;
}

// Target = mean of per-token weights (tokens 2..17) + Gaussian noise.
Sampled regression_tokens(Index n, double noise, const std::vector<double>& weights, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> length(2, 6);
  std::uniform_int_distribution<Index> token(2, 17);
  std::normal_distribution<double> normal(0.0, 1.0);
  Sampled s;
  for (Index i = 0; i < n; ++i) {
    const Index len = length(rng);
    std::vector<Index> seq;
    double total = 0.0;
    for (Index t = 0; t < len; ++t) {
      const Index id = token(rng);
      seq.push_back(id);
      total += weights[static_cast<std::size_t>(id - 2)];
    }
    double y = total / static_cast<double>(len);
    if (noise > 0.0) y += noise * normal(rng);
    s.sequences.push_back(std::move(seq));
    s.targets.push_back(y);
  }
  return s;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.train_size < 1 || spec.eval_size < 1) throw InvalidArgument("synthetic: split sizes must be >= 1");
  if (spec.label_noise < 0.0 || !std::isfinite(spec.label_noise)) {
    throw InvalidArgument("synthetic: label noise must be finite and >= 0");
  }
  // Independent streams for the task definition, train split and eval split.
  std::seed_seq task_seq{seed, std::uint64_t{0x7a5c}};
  std::seed_seq train_seq{seed, std::uint64_t{0x7a5c + 1}};
  std::seed_seq eval_seq{seed, std::uint64_t{0x7a5c + 2}};
  std::mt19937_64 task_rng(task_seq), train_rng(train_seq), eval_rng(eval_seq);

  Dataset d;
  d.input = InputKind::kTokens;
  Sampled train, eval;
  if (spec.name == "xor-tokens") {
    if (spec.label_noise > 0.5) throw InvalidArgument("xor-tokens: flip probability must be <= 0.5");
    for (const char* t : {"a0", "a1", "b0", "b1", "f0", "f1", "f2", "f3"}) d.vocab.add(t);
    train = xor_tokens(spec.train_size, spec.label_noise, spec.filler_tokens, train_rng);
    eval = xor_tokens(spec.eval_size, spec.label_noise, spec.filler_tokens, eval_rng);
    d.task = TaskKind::kClassification;
    d.classes = 2;
    d.bayes_accuracy = 1.0 - spec.label_noise;
  } else if (spec.name == "two-moons-tokens") {
    if (spec.label_noise > 0.5) throw InvalidArgument("two-moons-tokens: flip probability must be <= 0.5");
    d.vocab.add("key0");
    d.vocab.add("key1");
    for (int i = 0; i < 12; ++i) d.vocab.add("w" + std::to_string(i));
    train = keyword_tokens(spec.train_size, spec.label_noise, train_rng);
    eval = keyword_tokens(spec.eval_size, spec.label_noise, eval_rng);
    d.task = TaskKind::kClassification;
    d.classes = 2;
    d.bayes_accuracy = 1.0 - spec.label_noise;
  } else if (spec.name == "linear-regression-tokens") {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<double> weights(16);
    for (auto& w : weights) w = uniform(task_rng);
    for (int i = 0; i < 16; ++i) d.vocab.add("t" + std::to_string(i));
    train = regression_tokens(spec.train_size, spec.label_noise, weights, train_rng);
    eval = regression_tokens(spec.eval_size, spec.label_noise, weights, eval_rng);
    d.task = TaskKind::kRegression;
    d.classes = 1;
  } else {
    throw InvalidArgument("unknown synthetic dataset '" + spec.name + "'");
  }
  d.vocab_size = d.vocab.size();
  d.train = make_token_batches(train.sequences, train.targets, spec.batch_size);
  d.eval = make_token_batches(eval.sequences, eval.targets, spec.batch_size);
  return d;
}

// ---------------------------------------------------------------------------
// File ingestion

DataFormat parse_data_format(const std::string& name) {
  if (name == "jsonl") return DataFormat::kJsonl;
  if (name == "csv") return DataFormat::kCsv;
  throw InvalidArgument("unknown data format '" + name + "'");
}

namespace {

struct RawRows {
  std::vector<std::string> texts;
  std::vector<std::vector<double>> features;
  std::vector<double> labels;
};

RawRows read_jsonl(std::istream& in) {
  RawRows rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("row is not a JSON object", lineno);
    if (!obj.contains("label") || !obj["label"].is_number()) throw ParseError("missing numeric \"label\"", lineno);
    rows.labels.push_back(obj["label"].get<double>());
    const bool has_text = obj.contains("text");
    const bool has_features = obj.contains("features");
    if (has_text == has_features) throw ParseError("row needs exactly one of \"text\" or \"features\"", lineno);
    if (has_text) {
      if (!obj["text"].is_string()) throw ParseError("\"text\" must be a string", lineno);
      if (!rows.features.empty()) throw ParseError("mixed text and feature rows", lineno);
      rows.texts.push_back(obj["text"].get<std::string>());
    } else {
      if (!rows.texts.empty()) throw ParseError("mixed text and feature rows", lineno);
      const auto& f = obj["features"];
      if (!f.is_array() || f.empty()) throw ParseError("\"features\" must be a non-empty array", lineno);
      std::vector<double> v;
      for (const auto& x : f) {
        if (!x.is_number()) throw ParseError("non-numeric feature", lineno);
        v.push_back(x.get<double>());
      }
      if (!rows.features.empty() && v.size() != rows.features.front().size()) {
        throw ParseError("feature width differs from earlier rows", lineno);
      }
      rows.features.push_back(std::move(v));
    }
  }
  return rows;
}

double parse_number(const std::string& cell, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
    if (!std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a finite number: '" + cell + "'", lineno);
  }
}

RawRows read_csv(std::istream& in) {
  RawRows rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (columns == 0) {
      if (cells.size() < 2) throw ParseError("header needs at least one feature and a label column", lineno);
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " columns, got " + std::to_string(cells.size()),
                       lineno);
    }
    std::vector<double> v;
    for (std::size_t c = 0; c + 1 < columns; ++c) v.push_back(parse_number(cells[c], lineno));
    rows.features.push_back(std::move(v));
    rows.labels.push_back(parse_number(cells.back(), lineno));
  }
  return rows;
}

}  // namespace

Dataset load_dataset(const std::string& path, DataFormat format, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset " + path);
  RawRows rows = format == DataFormat::kJsonl ? read_jsonl(in) : read_csv(in);
  if (rows.labels.empty()) throw InvalidArgument("dataset " + path + " has no rows");

  Dataset d;
  const bool integral = std::all_of(rows.labels.begin(), rows.labels.end(),
                                    [](double y) { return y >= 0.0 && y == std::floor(y); });
  d.task = options.task.value_or(integral ? TaskKind::kClassification : TaskKind::kRegression);
  if (d.task == TaskKind::kClassification) {
    if (!integral) throw InvalidArgument("classification labels must be non-negative integers");
    d.classes = std::max<Index>(2, static_cast<Index>(*std::max_element(rows.labels.begin(), rows.labels.end())) + 1);
  } else {
    d.classes = 1;
  }

  if (!rows.texts.empty()) {
    d.input = InputKind::kTokens;
    d.vocab = options.vocabulary.value_or(Vocabulary{});
    std::vector<std::vector<Index>> sequences;
    for (const auto& text : rows.texts) {
      if (!options.vocabulary) {
        for (const auto& w : Vocabulary::split(text, options.max_length)) d.vocab.add(w);
      }
      sequences.push_back(d.vocab.encode(text, options.max_length));
    }
    d.vocab_size = d.vocab.size();
    d.train = make_token_batches(sequences, rows.labels, options.batch_size);
  } else {
    d.input = InputKind::kFeatures;
    d.feature_dim = static_cast<Index>(rows.features.front().size());
    d.train = make_feature_batches(rows.features, rows.labels, options.batch_size);
  }
  return d;
}

}  // namespace mat
