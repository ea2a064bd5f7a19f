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

#include "mat/cli/commands.hpp"

#include "mat/cli/game_io.hpp"
#include "mat/cli/targets.hpp"
#include "mat/gradcheck.hpp"
#include "mat/losses.hpp"
#include "mat/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace mat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

constexpr int kSchemaVersion = 1;
constexpr double kKsAlpha = 0.01;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

std::string json_string(const std::string& s) { return json(s).dump(); }

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

fs::path require_out(const ExperimentConfig& config) {
  if (config.out_dir.empty()) throw InvalidArgument("no output directory (set 'out' or pass --out)");
  fs::create_directories(config.out_dir);
  return config.out_dir;
}

// Full parameter echo; the output directory itself is left out so runs that
// differ only in where they write still produce identical files.
void echo_config(const ExperimentConfig& config, const fs::path& dir) {
  json doc = config.source;
  doc.erase("out");
  json seeds = json::array();
  for (auto s : config.seeds) seeds.push_back(s);
  doc["seeds"] = seeds;
  doc["threads"] = config.threads;
  auto out = open_output(dir / "config.json");
  out << doc.dump(2) << '\n';
}

// Runs fn(0..n-1) on `threads` workers. Exceptions are rethrown on the
// caller's thread, lowest index first.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// train / ablate shared pieces

struct RunCell {
  TrainMode mode = TrainMode::kMat;
  std::uint64_t seed = 0;
  TrainConfig config;
  std::string name;  // file stem
  std::optional<double> axis_value;
};

struct RunOutcome {
  bool ok = false;
  std::string error;
  long grad_evals = 0;
  double final_loss = 0.0, final_reg = 0.0, final_eval = 0.0, max_delta_norm = 0.0;
  std::optional<double> adv_risk;
  long clip_violations = 0;
};

Dataset build_dataset(const DataSection& data, std::uint64_t seed) {
  if (data.synthetic) return make_synthetic(*data.synthetic, seed);
  LoadOptions options;
  options.batch_size = data.batch_size;
  Dataset d = load_dataset(data.path, data.format, options);
  if (!data.eval_path.empty()) {
    options.vocabulary = d.vocab;
    options.task = d.task;
    d.eval = load_dataset(data.eval_path, data.format, options).train;
  } else {
    d.eval = d.train;
  }
  return d;
}

void write_run_jsonl(const fs::path& path, const RunCell& cell, const TrainResult* result, const std::string& error) {
  auto out = open_output(path);
  out << "{\"schema\":\"mat-train-metrics\",\"version\":" << kSchemaVersion << ",\"mode\":"
      << json_string(to_string(cell.mode)) << ",\"seed\":" << cell.seed << ",\"steps\":" << cell.config.steps
      << ",\"samples\":" << cell.config.samples << "}\n";
  if (!result) {
    out << "{\"aborted\":true,\"error\":" << json_string(error) << "}\n";
    return;
  }
  for (const StepRecord& r : result->metrics.steps) {
    out << "{\"step\":" << r.step << ",\"loss\":" << json_number(r.loss) << ",\"reg\":" << json_number(r.reg)
        << ",\"eval\":" << json_number(r.eval)
        << ",\"adv_risk\":" << (r.adv_risk ? json_number(*r.adv_risk) : std::string("null")) << "}\n";
  }
}

RunOutcome execute_cell(const RunCell& cell, const ModelSpec& spec, const Dataset& data, const fs::path& dir) {
  RunOutcome o;
  try {
    const TrainResult result = train(cell.mode, spec, data, cell.config);
    const RunMetrics& m = result.metrics;
    o.ok = true;
    o.grad_evals = m.grad_evals;
    o.max_delta_norm = m.max_delta_norm;
    o.clip_violations = m.clip_violations;
    if (!m.steps.empty()) {
      o.final_loss = m.steps.back().loss;
      o.final_reg = m.steps.back().reg;
      o.final_eval = m.steps.back().eval;
      o.adv_risk = m.steps.back().adv_risk;
    }
    write_run_jsonl(dir / "runs" / (cell.name + ".jsonl"), cell, &result, "");
    fs::create_directories(dir / "checkpoints");
    save_checkpoint((dir / "checkpoints" / (cell.name + ".ckpt")).string(), result.theta);
  } catch (const NumericError& e) {
    o.ok = false;
    o.error = e.what();
    write_run_jsonl(dir / "runs" / (cell.name + ".jsonl"), cell, nullptr, o.error);
  }
  return o;
}

TrainConfig cell_config(const TrainSection& train, TrainMode mode, std::uint64_t seed) {
  TrainConfig c = train.base;
  if (train.overrides.count(mode)) apply_train_fields(c, train.overrides.at(mode));
  if (train.budget) c.steps = steps_for_budget(mode, c.samples, *train.budget);
  c.seed = seed;
  c.attack.seed = seed;
  c.validate(mode);
  return c;
}

std::string short_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// gradcheck

struct Point {
  Batch batch;
  ParameterVector theta;
  std::vector<ParameterVector> thetas;
  std::vector<Tensor> deltas;
  double lambda = 1.0;
};

Tensor flat_tensor(const ParameterVector& p) { return Tensor::vector(p.values); }

Tensor theta_gradient_of(const Model& model, const ParameterVector& theta,
                         const std::function<Var(Tape&, const ModelVars&)>& build) {
  Tape tape;
  const ModelVars vars = model.declare(tape);
  tape.set_output(build(tape, vars));
  tape.forward(Model::bind(theta));
  std::set<std::string> names;
  for (const auto& s : theta.layout.slots()) names.insert(s.name);
  const Gradients g = tape.backward(names);
  std::map<std::string, Tensor> named(g.begin(), g.end());
  return flat_tensor(ParameterVector::flatten(theta.layout, named));
}

Point random_point(const Model& model, const GradcheckSection& gc, std::mt19937_64& rng) {
  Point p;
  const ModelSpec& spec = model.spec();
  std::uniform_int_distribution<Index> length(1, 5);
  std::uniform_int_distribution<Index> token(2, gc.vocab_size - 1);
  std::uniform_int_distribution<Index> label(0, spec.output_dim - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<Index>> seqs(4);
  std::vector<double> targets;
  for (auto& s : seqs) {
    s.resize(static_cast<std::size_t>(length(rng)));
    for (auto& id : s) id = token(rng);
    targets.push_back(spec.task == TaskKind::kClassification ? static_cast<double>(label(rng)) : normal(rng));
  }
  p.batch = make_token_batches(seqs, targets, 4).front();
  auto draw_theta = [&] {
    ParameterVector t = model.init(rng());
    t.values *= 5.0;
    return t;
  };
  auto draw_delta = [&] {
    Tensor d = Tensor::zeros({p.batch.input_rows(), spec.embedding_dim});
    for (Index i = 0; i < d.size(); ++i) d(i) = 0.3 * normal(rng);
    return d;
  };
  p.theta = draw_theta();
  for (int k = 0; k < 3; ++k) {
    p.thetas.push_back(draw_theta());
    p.deltas.push_back(draw_delta());
  }
  p.lambda = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
  return p;
}

using Check = std::function<double(const Model&, const Point&, double step, bool corrupt)>;

Tensor corrupt_gradient(Tensor g, bool corrupt) {
  if (corrupt) {
    for (Index i = 0; i < g.size(); ++i) g(i) = g(i) * 1.001 + 1e-3;
  }
  return g;
}

// Objectives wrt theta, each as (value, tape graph).
double check_theta(const Model& model, const Point& p, double step, bool corrupt,
                   const std::function<double(const ParameterVector&)>& value,
                   const std::function<Var(Tape&, const ModelVars&)>& build) {
  const Layout& layout = p.theta.layout;
  auto f = [&](const Tensor& x) { return value(ParameterVector{x.flat(), layout}); };
  auto g = [&](const Tensor& x) {
    return corrupt_gradient(theta_gradient_of(model, ParameterVector{x.flat(), layout}, build), corrupt);
  };
  return gradcheck(f, g, flat_tensor(p.theta), step);
}

std::vector<std::pair<std::string, Check>> model_checks() {
  std::vector<std::pair<std::string, Check>> checks;
  checks.emplace_back("task_loss:theta", [](const Model& m, const Point& p, double step, bool corrupt) {
    return check_theta(
        m, p, step, corrupt,
        [&](const ParameterVector& th) {
          return task_loss(m.forward_logits(th, p.batch, m.embed(th, p.batch)), p.batch.targets, m.spec().task);
        },
        [&](Tape&, const ModelVars& v) {
          return task_loss(m.forward_logits(v, p.batch, m.embed(v, p.batch)), p.batch.targets, m.spec().task);
        });
  });
  checks.emplace_back("adversarial_reg:theta", [](const Model& m, const Point& p, double step, bool corrupt) {
    const Tensor& delta = p.deltas.front();
    return check_theta(
        m, p, step, corrupt, [&](const ParameterVector& th) { return adversarial_reg(m, th, p.batch, delta); },
        [&](Tape& t, const ModelVars& v) { return adversarial_reg(m, v, p.batch, t.constant(delta)); });
  });
  checks.emplace_back("adversarial_reg:delta", [](const Model& m, const Point& p, double step, bool corrupt) {
    auto f = [&](const Tensor& d) { return adversarial_reg(m, p.theta, p.batch, d); };
    auto g = [&](const Tensor& d) {
      Tape tape;
      const ModelVars v = m.constants(tape, p.theta);
      tape.set_output(adversarial_reg(m, v, p.batch, tape.input("delta", d.shape())));
      tape.forward({{"delta", d}});
      return corrupt_gradient(tape.backward({"delta"}).at("delta"), corrupt);
    };
    return gradcheck(f, g, p.deltas.front(), step);
  });
  checks.emplace_back("inner_objective:theta", [](const Model& m, const Point& p, double step, bool corrupt) {
    const Tensor& delta = p.deltas.front();
    return check_theta(
        m, p, step, corrupt,
        [&](const ParameterVector& th) { return combined_objective(m, th, p.batch, delta, {p.lambda}); },
        [&](Tape& t, const ModelVars& v) {
          Var clean = m.forward_logits(v, p.batch, m.embed(v, p.batch));
          return task_loss(clean, p.batch.targets, m.spec().task) +
                 p.lambda * adversarial_reg(m, v, p.batch, t.constant(delta), &clean);
        });
  });
  checks.emplace_back("h_mu:theta", [](const Model& m, const Point& p, double step, bool corrupt) {
    const Layout& layout = p.theta.layout;
    auto f = [&](const Tensor& x) {
      const ParameterVector th{x.flat(), layout};
      double total = 0.0;
      for (const Tensor& d : p.deltas) total += combined_objective(m, th, p.batch, d, {p.lambda});
      return total / static_cast<double>(p.deltas.size());
    };
    auto g = [&](const Tensor& x) {
      const ThetaEstimate e = estimate_h_mu(m, ParameterVector{x.flat(), layout}, p.batch, p.deltas, p.lambda);
      return corrupt_gradient(flat_tensor(e.grad), corrupt);
    };
    return gradcheck(f, g, flat_tensor(p.theta), step);
  });
  checks.emplace_back("h_nu:delta", [](const Model& m, const Point& p, double step, bool corrupt) {
    auto f = [&](const Tensor& d) {
      double total = 0.0;
      for (const auto& th : p.thetas) total += p.lambda * adversarial_reg(m, th, p.batch, d);
      return total / static_cast<double>(p.thetas.size());
    };
    auto g = [&](const Tensor& d) {
      return corrupt_gradient(estimate_h_nu(m, p.thetas, d, p.batch, p.lambda).grad, corrupt);
    };
    return gradcheck(f, g, p.deltas.front(), step);
  });
  return checks;
}

double check_sym_kl(std::mt19937_64& rng, Index classes, double step, bool corrupt) {
  std::normal_distribution<double> normal(0.0, 1.5);
  Tensor logits_p = Tensor::zeros({4, classes});
  Tensor logits_q = Tensor::zeros({4, classes});
  for (Index i = 0; i < logits_p.size(); ++i) {
    logits_p(i) = normal(rng);
    logits_q(i) = normal(rng);
  }
  auto f = [&](const Tensor& x) {
    Tape tape;
    Var v = sym_kl(softmax(tape.constant(x)), softmax(tape.constant(logits_q)));
    tape.set_output(v);
    return tape.forward({}).item();
  };
  auto g = [&](const Tensor& x) {
    Tape tape;
    Var in = tape.input("p", x.shape());
    tape.set_output(sym_kl(softmax(in), softmax(tape.constant(logits_q))));
    tape.forward({{"p", x}});
    return corrupt_gradient(tape.backward({"p"}).at("p"), corrupt);
  };
  return gradcheck(f, g, logits_p, step);
}

// ---------------------------------------------------------------------------
// sample

struct SampleRow {
  std::uint64_t seed = 0;
  Index kept = 0;
  double mean = 0.0, variance = 0.0;
  std::optional<double> adjusted_variance;
  std::optional<double> reference_variance;  // variance of the CDF used for KS
  std::string reference = "none";
  double tau = 0.0;
  std::size_t thinned = 0;
  std::optional<double> ks, critical;
  std::optional<double> terminal_distance;
};

}  // namespace

// ---------------------------------------------------------------------------
// checkpoints

void save_checkpoint(const std::string& path, const ParameterVector& theta) {
  auto out = open_output(fs::path(path));
  out << "mat-checkpoint " << kSchemaVersion << '\n';
  out << "slots " << theta.layout.slots().size() << '\n';
  for (const Slot& s : theta.layout.slots()) {
    out << s.name << ' ' << s.offset << ' ' << s.shape.size();
    for (Index d : s.shape) out << ' ' << d;
    out << '\n';
  }
  out << "values " << theta.values.size() << '\n';
  for (Index i = 0; i < theta.values.size(); ++i) out << format_double(theta.values(i)) << '\n';
}

ParameterVector load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open checkpoint: " + path);
  std::string line;
  std::size_t number = 0;
  auto next = [&](const std::string& what) {
    if (!std::getline(in, line)) throw ParseError("unexpected end of file, expected " + what, number + 1);
    ++number;
    std::istringstream s(line);
    s.imbue(std::locale::classic());
    return s;
  };
  std::string word;
  int version = 0;
  if (!(next("header") >> word >> version) || word != "mat-checkpoint") throw ParseError("not a checkpoint", number);
  if (version != kSchemaVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), number);
  std::size_t count = 0;
  if (!(next("slot count") >> word >> count) || word != "slots") throw ParseError("expected 'slots N'", number);
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < count; ++i) {
    auto s = next("slot");
    Slot slot;
    std::size_t rank = 0;
    if (!(s >> slot.name >> slot.offset >> rank)) throw ParseError("malformed slot", number);
    slot.shape.resize(rank);
    for (auto& d : slot.shape) {
      if (!(s >> d)) throw ParseError("malformed slot shape", number);
    }
    slots.push_back(slot);
  }
  Layout layout(slots);
  Index size = 0;
  if (!(next("value count") >> word >> size) || word != "values") throw ParseError("expected 'values N'", number);
  if (size != layout.total_size()) throw ParseError("value count does not match the slot table", number);
  Vector values(size);
  for (Index i = 0; i < size; ++i) {
    const std::string text = (next("value"), line);
    std::size_t used = 0;
    try {
      values(i) = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) throw ParseError("bad value '" + text + "'", number);
  }
  return {values, layout};
}

// ---------------------------------------------------------------------------
// commands

int cmd_solve_game(const ExperimentConfig& config, std::ostream& out) {
  if (!config.game) throw InvalidArgument("solve-game: no game given (use --game or a 'game' section)");
  const fs::path dir = require_out(config);
  MatrixGame<double> game = [&] {
    try {
      return load_game(config.game->path);
    } catch (const ParseError& e) {
      throw InvalidArgument(config.game->path + ": " + e.what());
    }
  }();
  const EmdSolution<double> sol = solve_zero_sum(game, config.game->emd);
  echo_config(config, dir);
  {
    auto csv = open_output(dir / "exploitability.csv");
    csv << "iteration,exploitability\n";
    for (std::size_t t = 0; t < sol.trace.size(); ++t) csv << t + 1 << ',' << format_double(sol.trace[t]) << '\n';
  }
  {
    auto csv = open_output(dir / "strategies.csv");
    csv << "player,index,average,last\n";
    for (Eigen::Index i = 0; i < game.rows(); ++i) {
      csv << "row," << i << ',' << format_double(sol.average_row(i)) << ',' << format_double(sol.last_row(i)) << '\n';
    }
    for (Eigen::Index j = 0; j < game.cols(); ++j) {
      csv << "col," << j << ',' << format_double(sol.average_col(j)) << ',' << format_double(sol.last_col(j)) << '\n';
    }
  }
  const double final_gap = sol.trace.back();
  const double value = sol.average_row.probs().dot(game.payoff() * sol.average_col.probs());
  {
    auto csv = open_output(dir / "summary.csv");
    csv << "rows,cols,eta,iterations,sequential,final_exploitability,game_value\n";
    csv << game.rows() << ',' << game.cols() << ',' << format_double(config.game->emd.eta) << ','
        << config.game->emd.iterations << ',' << (config.game->emd.sequential ? "true" : "false") << ','
        << format_double(final_gap) << ',' << format_double(value) << '\n';
  }
  out << "final exploitability " << format_double(final_gap) << " after " << config.game->emd.iterations
      << " iterations\n";
  if (config.checks.max_exploitability && !(final_gap <= *config.checks.max_exploitability)) {
    out << "check failed: exploitability above " << format_double(*config.checks.max_exploitability) << '\n';
    return 1;
  }
  return 0;
}

int cmd_sample(const ExperimentConfig& config, std::ostream& out) {
  if (!config.sample) throw InvalidArgument("sample: no target given (use --target or a 'sample' section)");
  const SampleSection& sec = *config.sample;
  const Target& target = find_target(sec.target);
  const fs::path dir = require_out(config);
  echo_config(config, dir);

  std::vector<SampleRow> rows(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    SamplerConfig sc = sec.sampler;
    sc.seed = config.seeds[i];
    SamplerRng rng(sc.seed);
    SampleVector<double> init = SampleVector<double>::Zero(target.dim);
    for (std::size_t k = 0; k < sec.init.size(); ++k) init(static_cast<Index>(k)) = sec.init[k];
    const ChainResult<double> chain = sample_chain<double>(target.grad_h, init, sc, 0.0, rng);

    {
      auto csv = open_output(dir / ("samples_seed" + std::to_string(sc.seed) + ".csv"));
      csv << "step";
      for (Index d = 0; d < target.dim; ++d) csv << ",z" << d;
      csv << '\n';
      for (std::size_t s = 0; s < chain.samples.size(); ++s) {
        csv << s + 1;
        for (Index d = 0; d < target.dim; ++d) csv << ',' << format_double(chain.samples[s](d));
        csv << '\n';
      }
    }

    SampleRow row;
    row.seed = sc.seed;
    std::vector<double> first;
    first.reserve(chain.samples.size());
    for (const auto& z : chain.samples) first.push_back(z(0));
    const std::vector<double> kept = burn_in(first, sec.burn_in);
    row.kept = static_cast<Index>(kept.size());
    row.mean = sample_mean(kept);
    row.variance = kept.size() > 1 ? sample_variance(kept) : 0.0;
    if (target.mode) row.terminal_distance = (chain.samples.back() - *target.mode).norm();

    const double eps2 = sc.epsilon * sc.epsilon;
    // Tempered normal-shaped marginals scale with epsilon; the mixture only
    // has a closed form at epsilon = 1.
    const bool gaussian_marginal = target.name != "gaussian-mixture";
    if (target.name == "standard-normal" && sc.epsilon > 0.0) row.adjusted_variance = quadratic_stationary_variance(sc);
    std::function<double(double)> cdf;
    if (sc.epsilon > 0.0) {
      if (sc.kind == SamplerKind::kSgld) {
        if (gaussian_marginal) {
          row.reference = "exact";
          row.reference_variance = eps2;
          const double sd = sc.epsilon;
          cdf = [sd](double x) { return normal_cdf(x, 0.0, sd); };
        } else if (sc.epsilon == 1.0) {
          row.reference = "exact";
          row.reference_variance = target.marginal_variance;
          cdf = target.marginal_cdf;
        }
      } else if (row.adjusted_variance) {
        row.reference = "adjusted";
        row.reference_variance = *row.adjusted_variance;
        const double sd = std::sqrt(*row.adjusted_variance);
        cdf = [sd](double x) { return normal_cdf(x, 0.0, sd); };
      }
    }
    if (cdf && kept.size() > 1) {
      row.tau = autocorrelation_time(kept);
      const auto stride = static_cast<std::size_t>(std::max(1.0, std::ceil(row.tau)));
      const std::vector<double> thinned = thin(kept, stride);
      row.thinned = thinned.size();
      row.ks = ks_statistic(thinned, cdf);
      row.critical = ks_critical_value(thinned.size(), kKsAlpha);
    }
    rows[i] = row;
  });

  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  bool ks_ok = true;
  {
    auto csv = open_output(dir / "summary.csv");
    csv << "seed,target,sampler,gamma,epsilon,steps,burn_in,kept,mean,variance,target_mean,target_variance,"
           "adjusted_variance,reference,reference_variance,tau,thinned,ks_statistic,ks_critical,ks_pass,"
           "terminal_distance\n";
    for (const SampleRow& r : rows) {
      const bool pass = r.ks && *r.ks < *r.critical;
      if (!pass) ks_ok = false;
      csv << r.seed << ',' << target.name << ',' << to_string(sec.sampler.kind) << ','
          << format_double(sec.sampler.gamma) << ',' << format_double(sec.sampler.epsilon) << ','
          << sec.sampler.samples << ',' << format_double(sec.burn_in) << ',' << r.kept << ','
          << format_double(r.mean) << ',' << format_double(r.variance) << ',' << format_double(target.marginal_mean)
          << ',' << format_double(target.marginal_variance) << ',' << opt(r.adjusted_variance) << ',' << r.reference
          << ',' << opt(r.reference_variance) << ',' << format_double(r.tau) << ',' << r.thinned << ','
          << opt(r.ks) << ',' << opt(r.critical) << ',' << (r.ks ? (pass ? "true" : "false") : "") << ','
          << opt(r.terminal_distance) << '\n';
      out << "seed " << r.seed << ": mean " << format_double(r.mean) << " variance " << format_double(r.variance);
      if (r.ks) out << " ks " << format_double(*r.ks) << " (critical " << format_double(*r.critical) << ")";
      out << '\n';
    }
  }
  if (config.checks.ks_below_critical && !ks_ok) {
    out << "check failed: KS statistic not below the critical value\n";
    return 1;
  }
  return 0;
}

namespace {

struct Prepared {
  std::vector<RunCell> cells;
  std::vector<Dataset> datasets;  // per seed
  ModelSpec spec;
};

Prepared prepare_runs(const ExperimentConfig& config, const char* command) {
  if (!config.data) throw InvalidArgument(std::string(command) + ": config has no 'data' section");
  Prepared p;
  for (auto seed : config.seeds) p.datasets.push_back(build_dataset(*config.data, seed));
  p.spec = p.datasets.front().model_spec(config.model.hidden, config.model.embedding_dim, config.model.activation);
  p.spec.validate();
  return p;
}

std::size_t seed_index(const ExperimentConfig& config, std::uint64_t seed) {
  return static_cast<std::size_t>(std::find(config.seeds.begin(), config.seeds.end(), seed) - config.seeds.begin());
}

}  // namespace

int cmd_train(const ExperimentConfig& config, std::ostream& out) {
  if (!config.train) throw InvalidArgument("train: config has no 'train' section");
  const TrainSection& sec = *config.train;
  Prepared p = prepare_runs(config, "train");
  for (auto seed : config.seeds) {
    for (TrainMode mode : sec.modes) {
      RunCell cell;
      cell.mode = mode;
      cell.seed = seed;
      cell.config = cell_config(sec, mode, seed);
      cell.name = to_string(mode) + "_seed" + std::to_string(seed);
      p.cells.push_back(cell);
    }
  }
  const fs::path dir = require_out(config);
  echo_config(config, dir);

  std::vector<RunOutcome> outcomes(p.cells.size());
  parallel_for(p.cells.size(), config.threads, [&](std::size_t i) {
    const RunCell& cell = p.cells[i];
    outcomes[i] = execute_cell(cell, p.spec, p.datasets[seed_index(config, cell.seed)], dir);
  });

  bool ok = true;
  std::map<TrainMode, std::vector<double>> risks, evals;
  {
    auto csv = open_output(dir / "summary.csv");
    csv << "mode,seed,status,steps,samples,budget,grad_evals,final_loss,final_reg,final_eval,adv_risk,"
           "max_delta_norm,clip_violations,error\n";
    for (std::size_t i = 0; i < p.cells.size(); ++i) {
      const RunCell& c = p.cells[i];
      const RunOutcome& o = outcomes[i];
      csv << to_string(c.mode) << ',' << c.seed << ',' << (o.ok ? "ok" : "aborted") << ',' << c.config.steps << ','
          << c.config.samples << ',' << (sec.budget ? std::to_string(*sec.budget) : std::string()) << ',';
      if (o.ok) {
        csv << o.grad_evals << ',' << format_double(o.final_loss) << ',' << format_double(o.final_reg) << ','
            << format_double(o.final_eval) << ',' << (o.adv_risk ? format_double(*o.adv_risk) : "") << ','
            << format_double(o.max_delta_norm) << ',' << o.clip_violations << ",\n";
        if (o.adv_risk) risks[c.mode].push_back(*o.adv_risk);
        evals[c.mode].push_back(o.final_eval);
        if (config.checks.min_eval && o.final_eval < *config.checks.min_eval) {
          out << "check failed: " << c.name << " eval " << format_double(o.final_eval) << " below "
              << format_double(*config.checks.min_eval) << '\n';
          ok = false;
        }
      } else {
        csv << ",,,,,,," << csv_field(o.error) << '\n';
        out << c.name << " aborted: " << o.error << '\n';
        ok = false;
      }
    }
  }
  std::map<TrainMode, double> median_risk;
  for (TrainMode mode : sec.modes) {
    if (evals[mode].empty()) continue;
    out << to_string(mode) << ": median eval " << format_double(median(evals[mode]));
    if (!risks[mode].empty()) {
      median_risk[mode] = median(risks[mode]);
      out << ", median adversarial risk " << format_double(median_risk[mode]);
    }
    out << " over " << evals[mode].size() << " runs\n";
  }
  if (config.checks.mat_median_risk_le_vanilla) {
    if (!median_risk.count(TrainMode::kMat) || !median_risk.count(TrainMode::kVanilla)) {
      out << "check failed: MAT and vanilla medians are both needed\n";
      ok = false;
    } else if (!(median_risk[TrainMode::kMat] <= median_risk[TrainMode::kVanilla])) {
      out << "check failed: MAT median adversarial risk above vanilla\n";
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

int cmd_ablate(const ExperimentConfig& config, std::ostream& out) {
  if (!config.sweep) throw InvalidArgument("ablate: config has no 'sweep' section");
  const SweepSection& sweep = *config.sweep;
  TrainSection sec = config.train.value_or(TrainSection{});
  Prepared p = prepare_runs(config, "ablate");
  for (double v : sweep.values) {
    TrainSection point = sec;
    switch (sweep.axis) {
      case SweepAxis::kSamples: point.base.samples = static_cast<int>(v); break;
      case SweepAxis::kLambda: point.base.lambda = v; break;
      case SweepAxis::kBeta: point.base.beta = v; break;
      case SweepAxis::kGamma: point.base.gamma = v; break;
    }
    for (auto seed : config.seeds) {
      RunCell cell;
      cell.mode = TrainMode::kMat;
      cell.seed = seed;
      cell.config = cell_config(point, TrainMode::kMat, seed);
      cell.axis_value = v;
      cell.name = to_string(sweep.axis) + "=" + short_value(v) + "_seed" + std::to_string(seed);
      p.cells.push_back(cell);
    }
  }
  const fs::path dir = require_out(config);
  echo_config(config, dir);

  std::vector<RunOutcome> outcomes(p.cells.size());
  parallel_for(p.cells.size(), config.threads, [&](std::size_t i) {
    const RunCell& cell = p.cells[i];
    outcomes[i] = execute_cell(cell, p.spec, p.datasets[seed_index(config, cell.seed)], dir);
  });

  bool ok = true;
  auto csv = open_output(dir / "ablation.csv");
  csv << "axis,value,seed,status,steps,grad_evals,final_loss,final_eval,adv_risk,error\n";
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const RunCell& c = p.cells[i];
    const RunOutcome& o = outcomes[i];
    csv << to_string(sweep.axis) << ',' << format_double(*c.axis_value) << ',' << c.seed << ','
        << (o.ok ? "ok" : "aborted") << ',' << c.config.steps << ',';
    if (o.ok) {
      csv << o.grad_evals << ',' << format_double(o.final_loss) << ',' << format_double(o.final_eval) << ','
          << (o.adv_risk ? format_double(*o.adv_risk) : "") << ",\n";
    } else {
      csv << ",,,," << csv_field(o.error) << '\n';
      out << c.name << " aborted: " << o.error << '\n';
      ok = false;
    }
  }
  out << "ablation over " << to_string(sweep.axis) << ": " << sweep.values.size() << " values x "
      << config.seeds.size() << " seeds\n";
  return ok ? 0 : 1;
}

int cmd_gradcheck(const ExperimentConfig& config, std::ostream& out, bool corrupt) {
  const GradcheckSection& gc = config.gradcheck;
  const fs::path dir = require_out(config);
  echo_config(config, dir);

  struct Row {
    std::string objective;
    double worst = 0.0;
  };
  std::vector<Row> rows;
  const auto checks = model_checks();
  for (TaskKind task : {TaskKind::kClassification, TaskKind::kRegression}) {
    ModelSpec spec;
    spec.vocab_size = gc.vocab_size;
    spec.embedding_dim = gc.model.embedding_dim;
    spec.hidden = gc.model.hidden;
    spec.activation = gc.model.activation;
    spec.task = task;
    spec.output_dim = task == TaskKind::kClassification ? gc.classes : 1;
    const Model model(spec);
    for (std::size_t c = 0; c < checks.size(); ++c) {
      Row row{checks[c].first + ":" + to_string(task), 0.0};
      for (auto seed : config.seeds) {
        std::mt19937_64 rng(seed * 1000003ULL + c * 7919ULL + (task == TaskKind::kRegression ? 17ULL : 0ULL));
        for (int i = 0; i < gc.points; ++i) {
          const Point point = random_point(model, gc, rng);
          row.worst = std::max(row.worst, checks[c].second(model, point, gc.step, corrupt));
        }
      }
      rows.push_back(row);
    }
  }
  {
    Row row{"sym_kl:logits", 0.0};
    for (auto seed : config.seeds) {
      std::mt19937_64 rng(seed * 1000003ULL + 99991ULL);
      for (int i = 0; i < gc.points; ++i) row.worst = std::max(row.worst, check_sym_kl(rng, gc.classes, gc.step, corrupt));
    }
    rows.push_back(row);
  }

  double worst = 0.0;
  auto csv = open_output(dir / "gradcheck.csv");
  csv << "objective,points,worst_error,threshold,pass\n";
  for (const Row& r : rows) {
    const bool pass = r.worst < gc.threshold;
    csv << r.objective << ',' << gc.points * static_cast<long>(config.seeds.size()) << ','
        << format_double(r.worst) << ',' << format_double(gc.threshold) << ',' << (pass ? "true" : "false") << '\n';
    out << r.objective << ": " << format_double(r.worst) << '\n';
    worst = std::max(worst, r.worst);
  }
  out << "worst relative error " << format_double(worst) << " (threshold " << format_double(gc.threshold) << ")\n";
  return worst < gc.threshold ? 0 : 1;
}

// ---------------------------------------------------------------------------
// argument handling

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed-strategy adversarial training toolkit", "mat"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_text;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seeds", seeds_text, "comma-separated seed list");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve-game", "solve a zero-sum matrix game by entropy mirror descent");
  std::string game_path;
  std::optional<double> eta;
  std::optional<int> iterations;
  bool sequential = false;
  solve->add_option("--game", game_path, "game file ('R C' then R rows)");
  solve->add_option("--eta", eta, "step size");
  solve->add_option("--iterations,-T", iterations, "iterations");
  solve->add_flag("--sequential", sequential, "alternate updates");

  auto* sample = app.add_subcommand("sample", "run a sampler on a built-in target");
  std::optional<std::string> target, sampler_kind;
  std::optional<double> gamma, epsilon, burn;
  std::optional<int> steps;
  sample->add_option("--target", target, "standard-normal | gaussian-mixture | banana");
  sample->add_option("--sampler", sampler_kind, "sgld | rmsprop-sgld | adam-sgld");
  sample->add_option("--gamma", gamma, "step size");
  sample->add_option("--epsilon", epsilon, "thermal noise");
  sample->add_option("--steps", steps, "chain length");
  sample->add_option("--burn-in", burn, "fraction discarded");
  std::vector<double> init;
  sample->add_option("--init", init, "starting point, comma-separated")->delimiter(',');

  auto* train_cmd = app.add_subcommand("train", "train vanilla / PGD / MAT models over seeds");
  auto* ablate = app.add_subcommand("ablate", "one-axis MAT sweep");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every objective gradient");
  std::optional<int> points;
  std::optional<double> threshold;
  bool corrupt = false;
  grad->add_option("--points", points, "random points per objective");
  grad->add_option("--threshold", threshold, "maximum relative error");
  grad->add_flag("--corrupt", corrupt)->group("");

  for (auto* sub : {solve, sample, train_cmd, ablate, grad}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) {
      config = load_config(config_path);
    } else if (train_cmd->parsed() || ablate->parsed()) {
      throw InvalidArgument("--config is required for this command");
    } else {
      config.source = json::object();
    }
    if (!seeds_text.empty()) config.seeds = parse_seed_list(seeds_text);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (threads > 0) config.threads = threads;

    if (solve->parsed()) {
      if (!game_path.empty()) {
        if (!fs::is_regular_file(game_path)) throw InvalidArgument("game file not found: " + game_path);
        if (!config.game) config.game = GameSection{};
        config.game->path = game_path;
      }
      if ((eta || iterations || sequential) && !config.game) throw InvalidArgument("solve-game: no game given");
      if (config.game) {
        if (eta) config.game->emd.eta = *eta;
        if (iterations) config.game->emd.iterations = *iterations;
        if (sequential) config.game->emd.sequential = true;
        config.game->emd.validate();
        json& g = config.source["game"];
        g["path"] = config.game->path;
        g["eta"] = config.game->emd.eta;
        g["iterations"] = config.game->emd.iterations;
        g["sequential"] = config.game->emd.sequential;
      }
      return cmd_solve_game(config, out);
    }
    if (sample->parsed()) {
      json s = config.source.contains("sample") ? config.source["sample"] : json::object();
      if (!s.contains("sampler")) s["sampler"] = json::object();
      if (target) s["target"] = *target;
      if (sampler_kind) s["sampler"]["kind"] = *sampler_kind;
      if (gamma) s["sampler"]["gamma"] = *gamma;
      if (epsilon) s["sampler"]["epsilon"] = *epsilon;
      if (steps) s["sampler"]["steps"] = *steps;
      if (burn) s["burn_in"] = *burn;
      if (!init.empty()) s["init"] = init;
      if (!s.contains("target") && !config.sample) throw InvalidArgument("sample: no target given");
      json doc = config.source;
      doc["sample"] = s;
      const ExperimentConfig reparsed = parse_config(doc, "");
      config.sample = reparsed.sample;
      config.source = doc;
      return cmd_sample(config, out);
    }
    if (train_cmd->parsed()) return cmd_train(config, out);
    if (ablate->parsed()) return cmd_ablate(config, out);
    if (grad->parsed()) {
      if (points) config.gradcheck.points = *points;
      if (threshold) config.gradcheck.threshold = *threshold;
      if (config.gradcheck.points < 1 || !(config.gradcheck.threshold > 0.0)) {
        throw InvalidArgument("gradcheck: points must be >= 1 and threshold > 0");
      }
      config.source["gradcheck"]["points"] = config.gradcheck.points;
      config.source["gradcheck"]["threshold"] = config.gradcheck.threshold;
      return cmd_gradcheck(config, out, corrupt);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace mat::cli
