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

#ifndef MAT_DATA_HPP_
#define MAT_DATA_HPP_

#include "mat/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mat {

inline constexpr Index kPadId = 0;
inline constexpr Index kUnknownId = 1;
inline constexpr Index kMaxSequenceLength = 512;

/// Whitespace/lowercase vocabulary. Ids 0 and 1 are reserved for padding
/// and unknown tokens.
class Vocabulary {
 public:
  Vocabulary();

  Index add(const std::string& token);
  Index id(const std::string& token) const;  // kUnknownId when absent
  const std::string& token(Index id) const;
  Index size() const { return static_cast<Index>(tokens_.size()); }

  // Lowercased whitespace tokens, truncated to `max_len`.
  static std::vector<std::string> split(const std::string& text, Index max_len = kMaxSequenceLength);
  std::vector<Index> encode(const std::string& text, Index max_len = kMaxSequenceLength) const;

  // One token per line; line number (from 0) is the id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, Index> ids_;
};

struct Dataset {
  std::vector<Batch> train;
  std::vector<Batch> eval;
  InputKind input = InputKind::kTokens;
  TaskKind task = TaskKind::kClassification;
  Index vocab_size = 0;
  Index feature_dim = 0;
  Index classes = 2;                     // 1 for regression
  std::optional<double> bayes_accuracy;  // when known analytically
  Vocabulary vocab;

  // Spec for an MLP with the given hidden layers that fits this data.
  ModelSpec model_spec(std::vector<Index> hidden, Index embedding_dim, Activation activation) const;
};

struct SyntheticSpec {
  std::string name = "xor-tokens";  // xor-tokens | two-moons-tokens | linear-regression-tokens
  double label_noise = 0.0;         // flip probability, or target noise std for regression
  Index train_size = 256;
  Index eval_size = 256;
  Index batch_size = 32;
  Index filler_tokens = 0;          // xor-tokens: random filler tokens appended per example
};

/// Deterministic in (spec, seed); train and eval are drawn from separate streams.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Token sequences -> padded batches.
std::vector<Batch> make_token_batches(const std::vector<std::vector<Index>>& sequences,
                                      const std::vector<double>& targets, Index batch_size);
std::vector<Batch> make_feature_batches(const std::vector<std::vector<double>>& rows,
                                        const std::vector<double>& targets, Index batch_size);

enum class DataFormat { kJsonl, kCsv };
DataFormat parse_data_format(const std::string& name);

struct LoadOptions {
  Index batch_size = 1;
  Index max_length = kMaxSequenceLength;
  std::optional<TaskKind> task;         // inferred from labels when absent
  std::optional<Vocabulary> vocabulary; // built from the file when absent
};

/// Reads JSONL ({"text"|"features", "label"}) or CSV (header row, label last).
/// The result carries batches in `train`; `eval` is empty.
Dataset load_dataset(const std::string& path, DataFormat format, const LoadOptions& options = {});

}  // namespace mat

#endif  // MAT_DATA_HPP_
