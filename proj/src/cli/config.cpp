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

#include "mat/cli/config.hpp"

#include "mat/cli/targets.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Rejects keys outside `allowed` so typos fail loudly.
void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw InvalidArgument(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + "." + key + ": wrong type");
  }
}

template <typename T>
void read(const json& obj, const std::string& key, const std::string& where, T& field) {
  if (obj.contains(key)) field = get<T>(obj, key, where);
}

int read_int(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw InvalidArgument(where + "." + key + ": expected an integer");
  return v.get<int>();
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string existing_file(const std::string& path, const std::string& base_dir, const std::string& where) {
  const std::string full = resolve(path, base_dir);
  if (!fs::is_regular_file(full)) throw InvalidArgument(where + ": file not found: " + full);
  return full;
}

SamplerConfig parse_sampler(const json& obj, const std::string& where) {
  check_keys(obj, where, {"kind", "gamma", "epsilon", "steps", "first_moment_decay", "second_moment_decay",
                          "stability"});
  SamplerConfig s;
  s.gamma = 0.01;
  s.epsilon = 1.0;
  s.samples = 10000;
  if (obj.contains("kind")) s.kind = parse_sampler_kind(get<std::string>(obj, "kind", where));
  read(obj, "gamma", where, s.gamma);
  read(obj, "epsilon", where, s.epsilon);
  s.samples = read_int(obj, "steps", where, s.samples);
  read(obj, "first_moment_decay", where, s.first_moment_decay);
  read(obj, "second_moment_decay", where, s.second_moment_decay);
  read(obj, "stability", where, s.stability);
  s.validate();
  return s;
}

ModelSection parse_model(const json& obj, const std::string& where, ModelSection m) {
  check_keys(obj, where, {"hidden", "embedding_dim", "activation"});
  if (obj.contains("hidden")) m.hidden = get<std::vector<Index>>(obj, "hidden", where);
  read(obj, "embedding_dim", where, m.embedding_dim);
  if (obj.contains("activation")) m.activation = parse_activation(get<std::string>(obj, "activation", where));
  if (m.embedding_dim < 1) throw InvalidArgument(where + ".embedding_dim must be >= 1");
  for (Index h : m.hidden) {
    if (h < 1) throw InvalidArgument(where + ".hidden widths must be >= 1");
  }
  return m;
}

DataSection parse_data(const json& obj, const std::string& base_dir) {
  check_keys(obj, "data", {"synthetic", "path", "eval_path", "format", "batch_size"});
  DataSection d;
  read(obj, "batch_size", "data", d.batch_size);
  if (d.batch_size < 1) throw InvalidArgument("data.batch_size must be >= 1");
  if (obj.contains("synthetic") == obj.contains("path")) {
    throw InvalidArgument("data: give exactly one of 'synthetic' or 'path'");
  }
  if (obj.contains("synthetic")) {
    const json& s = obj.at("synthetic");
    check_keys(s, "data.synthetic", {"name", "label_noise", "train_size", "eval_size", "filler_tokens"});
    SyntheticSpec spec;
    read(s, "name", "data.synthetic", spec.name);
    read(s, "label_noise", "data.synthetic", spec.label_noise);
    read(s, "train_size", "data.synthetic", spec.train_size);
    read(s, "eval_size", "data.synthetic", spec.eval_size);
    read(s, "filler_tokens", "data.synthetic", spec.filler_tokens);
    spec.batch_size = d.batch_size;
    d.synthetic = spec;
  } else {
    d.path = existing_file(get<std::string>(obj, "path", "data"), base_dir, "data.path");
    if (obj.contains("eval_path")) {
      d.eval_path = existing_file(get<std::string>(obj, "eval_path", "data"), base_dir, "data.eval_path");
    }
    if (obj.contains("format")) {
      d.format = parse_data_format(get<std::string>(obj, "format", "data"));
    } else {
      d.format = fs::path(d.path).extension() == ".csv" ? DataFormat::kCsv : DataFormat::kJsonl;
    }
  }
  return d;
}

std::optional<SweepAxis> parse_axis(const std::string& name) {
  if (name == "K" || name == "samples") return SweepAxis::kSamples;
  if (name == "lambda") return SweepAxis::kLambda;
  if (name == "beta") return SweepAxis::kBeta;
  if (name == "gamma") return SweepAxis::kGamma;
  return std::nullopt;
}

SweepSection parse_sweep(const json& obj) {
  if (!obj.is_object()) throw InvalidArgument("sweep: expected an object");
  if (obj.size() != 1) {
    throw InvalidArgument("sweep: exactly one axis per sweep (got " + std::to_string(obj.size()) + ")");
  }
  const auto it = obj.begin();
  const auto axis = parse_axis(it.key());
  if (!axis) throw InvalidArgument("sweep: unknown axis '" + it.key() + "' (use K, lambda, beta or gamma)");
  SweepSection s;
  s.axis = *axis;
  s.values = get<std::vector<double>>(obj, it.key(), "sweep");
  if (s.values.empty()) throw InvalidArgument("sweep: grid for '" + it.key() + "' is empty");
  for (double v : s.values) {
    if (!std::isfinite(v)) throw InvalidArgument("sweep: grid values must be finite");
    if (s.axis == SweepAxis::kSamples && (v < 1 || v != std::floor(v))) {
      throw InvalidArgument("sweep: K values must be positive integers");
    }
  }
  return s;
}

TrainSection parse_train(const json& obj) {
  TrainSection t;
  json fields = json::object();
  for (const auto& [key, value] : obj.items()) {
    if (key == "modes") {
      t.modes.clear();
      for (const auto& m : get<std::vector<std::string>>(obj, "modes", "train")) {
        t.modes.push_back(parse_train_mode(m));
      }
      if (t.modes.empty()) throw InvalidArgument("train.modes is empty");
    } else if (key == "budget") {
      if (!value.is_number_integer() || value.get<long>() < 1) {
        throw InvalidArgument("train.budget must be a positive integer");
      }
      t.budget = value.get<long>();
    } else if (key == "overrides") {
      check_keys(value, "train.overrides", {"vanilla", "pgd", "mat"});
      for (const auto& [mode, body] : value.items()) t.overrides[parse_train_mode(mode)] = body;
    } else {
      fields[key] = value;
    }
  }
  apply_train_fields(t.base, fields);
  for (TrainMode mode : t.modes) {
    TrainConfig c = t.base;
    if (t.overrides.count(mode)) apply_train_fields(c, t.overrides.at(mode));
    c.validate(mode);
    if (t.budget) steps_for_budget(mode, c.samples, *t.budget);
  }
  return t;
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSamples: return "K";
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kBeta: return "beta";
    case SweepAxis::kGamma: return "gamma";
  }
  return "K";
}

void apply_train_fields(TrainConfig& c, const json& fields) {
  const std::string where = "train";
  check_keys(fields, where,
             {"steps", "samples", "K", "lambda", "beta", "delta_ema_beta", "theta_ema_beta", "mix_beta", "gamma",
              "schedule", "epsilon", "clip_radius", "sampler", "estimator", "pgd_step", "pgd_init_std", "attack",
              "eval_every"});
  c.steps = read_int(fields, "steps", where, c.steps);
  c.samples = read_int(fields, "samples", where, c.samples);
  c.samples = read_int(fields, "K", where, c.samples);
  read(fields, "lambda", where, c.lambda);
  read(fields, "beta", where, c.beta);
  if (fields.contains("delta_ema_beta")) c.delta_ema_beta = get<double>(fields, "delta_ema_beta", where);
  if (fields.contains("theta_ema_beta")) c.theta_ema_beta = get<double>(fields, "theta_ema_beta", where);
  if (fields.contains("mix_beta")) c.mix_beta = get<double>(fields, "mix_beta", where);
  read(fields, "gamma", where, c.gamma);
  if (fields.contains("schedule")) c.schedule = parse_gamma_schedule(get<std::string>(fields, "schedule", where));
  read(fields, "epsilon", where, c.epsilon);
  const bool had_radius = fields.contains("clip_radius");
  read(fields, "clip_radius", where, c.clip_radius);
  if (fields.contains("sampler")) c.sampler = parse_sampler_kind(get<std::string>(fields, "sampler", where));
  if (fields.contains("estimator")) c.estimator = parse_estimator_mode(get<std::string>(fields, "estimator", where));
  read(fields, "pgd_step", where, c.pgd_step);
  read(fields, "pgd_init_std", where, c.pgd_init_std);
  c.eval_every = read_int(fields, "eval_every", where, c.eval_every);
  // The attack radius follows the clip radius unless set explicitly.
  if (had_radius) c.attack.radius = c.clip_radius;
  if (fields.contains("attack")) {
    const json& a = fields.at("attack");
    check_keys(a, "train.attack", {"steps", "step_size", "radius"});
    c.attack.steps = read_int(a, "steps", "train.attack", c.attack.steps);
    read(a, "step_size", "train.attack", c.attack.step_size);
    read(a, "radius", "train.attack", c.attack.radius);
  }
}

int steps_for_budget(TrainMode mode, int samples, long budget) {
  const long per_step = gradient_evals_per_step(mode, samples);
  if (budget % per_step != 0) {
    throw InvalidArgument("budget " + std::to_string(budget) + " is not a multiple of the " + to_string(mode) +
                          " cost per step (" + std::to_string(per_step) + ")");
  }
  return static_cast<int>(budget / per_step);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || item[0] == '-') throw InvalidArgument("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw InvalidArgument("seed list is empty");
  return seeds;
}

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
  check_keys(doc, "config",
             {"seeds", "out", "threads", "game", "sample", "data", "model", "train", "sweep", "gradcheck", "checks"});
  ExperimentConfig c;
  c.source = doc;
  if (doc.contains("seeds")) {
    c.seeds = get<std::vector<std::uint64_t>>(doc, "seeds", "config");
    if (c.seeds.empty()) throw InvalidArgument("config.seeds is empty");
  }
  if (doc.contains("out")) c.out_dir = resolve(get<std::string>(doc, "out", "config"), base_dir);
  c.threads = read_int(doc, "threads", "config", c.threads);
  if (c.threads < 1) throw InvalidArgument("config.threads must be >= 1");

  if (doc.contains("game")) {
    const json& g = doc.at("game");
    check_keys(g, "game", {"path", "eta", "iterations", "sequential"});
    GameSection game;
    game.path = existing_file(get<std::string>(g, "path", "game"), base_dir, "game.path");
    read(g, "eta", "game", game.emd.eta);
    game.emd.iterations = read_int(g, "iterations", "game", game.emd.iterations);
    read(g, "sequential", "game", game.emd.sequential);
    game.emd.validate();
    c.game = game;
  }
  if (doc.contains("sample")) {
    const json& s = doc.at("sample");
    check_keys(s, "sample", {"target", "sampler", "burn_in", "init"});
    SampleSection sample;
    read(s, "target", "sample", sample.target);
    const Target& target = find_target(sample.target);
    sample.sampler = parse_sampler(s.contains("sampler") ? s.at("sampler") : json::object(), "sample.sampler");
    read(s, "burn_in", "sample", sample.burn_in);
    if (!(sample.burn_in >= 0.0 && sample.burn_in < 1.0)) throw InvalidArgument("sample.burn_in must be in [0, 1)");
    read(s, "init", "sample", sample.init);
    if (!sample.init.empty() && static_cast<Index>(sample.init.size()) != target.dim) {
      throw InvalidArgument("sample.init has " + std::to_string(sample.init.size()) + " entries, target '" +
                            target.name + "' needs " + std::to_string(target.dim));
    }
    c.sample = sample;
  }
  if (doc.contains("data")) c.data = parse_data(doc.at("data"), base_dir);
  if (doc.contains("model")) c.model = parse_model(doc.at("model"), "model", c.model);
  if (doc.contains("train")) c.train = parse_train(doc.at("train"));
  if (doc.contains("sweep")) {
    c.sweep = parse_sweep(doc.at("sweep"));
    // Every grid point must give a valid MAT config.
    const TrainConfig base = c.train ? c.train->base : TrainConfig{};
    for (double v : c.sweep->values) {
      TrainConfig t = base;
      switch (c.sweep->axis) {
        case SweepAxis::kSamples: t.samples = static_cast<int>(v); break;
        case SweepAxis::kLambda: t.lambda = v; break;
        case SweepAxis::kBeta: t.beta = v; break;
        case SweepAxis::kGamma: t.gamma = v; break;
      }
      t.validate(TrainMode::kMat);
    }
  }
  if (doc.contains("gradcheck")) {
    const json& g = doc.at("gradcheck");
    check_keys(g, "gradcheck", {"points", "step", "threshold", "model", "vocab_size", "classes"});
    GradcheckSection& gc = c.gradcheck;
    gc.points = read_int(g, "points", "gradcheck", gc.points);
    read(g, "step", "gradcheck", gc.step);
    read(g, "threshold", "gradcheck", gc.threshold);
    if (g.contains("model")) gc.model = parse_model(g.at("model"), "gradcheck.model", gc.model);
    read(g, "vocab_size", "gradcheck", gc.vocab_size);
    read(g, "classes", "gradcheck", gc.classes);
    if (gc.points < 1 || !(gc.step > 0.0) || !(gc.threshold > 0.0) || gc.vocab_size < 3 || gc.classes < 2) {
      throw InvalidArgument("gradcheck: points >= 1, step > 0, threshold > 0, vocab_size >= 3, classes >= 2");
    }
  }
  if (doc.contains("checks")) {
    const json& k = doc.at("checks");
    check_keys(k, "checks", {"min_eval", "mat_median_risk_le_vanilla", "max_exploitability", "ks_below_critical"});
    if (k.contains("min_eval")) c.checks.min_eval = get<double>(k, "min_eval", "checks");
    read(k, "mat_median_risk_le_vanilla", "checks", c.checks.mat_median_risk_le_vanilla);
    if (k.contains("max_exploitability")) c.checks.max_exploitability = get<double>(k, "max_exploitability", "checks");
    read(k, "ks_below_critical", "checks", c.checks.ks_below_critical);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  return parse_config(doc, fs::path(path).parent_path().string());
}

}  // namespace mat::cli
