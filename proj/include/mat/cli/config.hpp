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

#ifndef MAT_CLI_CONFIG_HPP_
#define MAT_CLI_CONFIG_HPP_

#include "mat/data.hpp"
#include "mat/mirror_game.hpp"
#include "mat/samplers.hpp"
#include "mat/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mat::cli {

struct GameSection {
  std::string path;
  EmdConfig emd{0.1, 5000, false};
};

struct SampleSection {
  std::string target = "standard-normal";
  SamplerConfig sampler;
  double burn_in = 0.2;
  std::vector<double> init;  // empty: origin
};

struct DataSection {
  std::optional<SyntheticSpec> synthetic;
  std::string path;  // file-backed data
  std::string eval_path;
  DataFormat format = DataFormat::kJsonl;
  Index batch_size = 32;
};

struct ModelSection {
  std::vector<Index> hidden{16};
  Index embedding_dim = 8;
  Activation activation = Activation::kRelu;
};

struct TrainSection {
  TrainConfig base;
  std::vector<TrainMode> modes{TrainMode::kVanilla, TrainMode::kPgd, TrainMode::kMat};
  // Per-mode field overrides, applied on top of `base`.
  std::map<TrainMode, nlohmann::json> overrides;
  // Total gradient evaluations per run; per-mode step counts derive from it.
  std::optional<long> budget;
};

enum class SweepAxis { kSamples, kLambda, kBeta, kGamma };
std::string to_string(SweepAxis axis);

struct SweepSection {
  SweepAxis axis = SweepAxis::kSamples;
  std::vector<double> values;
};

struct GradcheckSection {
  int points = 100;
  double step = 1e-5;
  double threshold = 1e-5;
  ModelSection model{{6}, 4, Activation::kTanh};
  Index vocab_size = 8;
  Index classes = 3;
};

// Thresholds checked after a command; any failure makes the exit code nonzero.
struct Checks {
  std::optional<double> min_eval;  // every successful train run
  bool mat_median_risk_le_vanilla = false;
  std::optional<double> max_exploitability;  // solve-game, final iterate
  bool ks_below_critical = false;            // sample
};

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;
  int threads = 1;
  std::optional<GameSection> game;
  std::optional<SampleSection> sample;
  std::optional<DataSection> data;
  ModelSection model;
  std::optional<TrainSection> train;
  std::optional<SweepSection> sweep;
  GradcheckSection gradcheck;
  Checks checks;
  nlohmann::json source;  // the parsed document, echoed into the output directory
};

/// Parses a JSON experiment file. Relative paths resolve against the file's
/// directory; referenced files must exist.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir);

/// Applies a JSON object of TrainConfig fields onto `config`.
void apply_train_fields(TrainConfig& config, const nlohmann::json& fields);

/// Steps per mode so every mode spends exactly `budget` gradient evaluations.
int steps_for_budget(TrainMode mode, int samples, long budget);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace mat::cli

#endif  // MAT_CLI_CONFIG_HPP_
