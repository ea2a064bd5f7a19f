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

#ifndef MAT_MIRROR_GAME_HPP_
#define MAT_MIRROR_GAME_HPP_

#include "mat/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mat {

template <typename Scalar>
using GameVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using GameMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Two-player zero-sum game. The row player pays `payoff(i, j)` to the column
/// player: rows minimize, columns maximize.
template <typename Scalar = double>
class MatrixGame {
 public:
  explicit MatrixGame(GameMatrix<Scalar> payoff) : payoff_(std::move(payoff)) {
    if (payoff_.rows() < 1 || payoff_.cols() < 1) throw InvalidArgument("game must be at least 1x1");
    if (!payoff_.allFinite()) throw InvalidArgument("game payoffs must be finite");
  }

  const GameMatrix<Scalar>& payoff() const { return payoff_; }
  Eigen::Index rows() const { return payoff_.rows(); }
  Eigen::Index cols() const { return payoff_.cols(); }

 private:
  GameMatrix<Scalar> payoff_;
};

/// Probability vector over a finite strategy set.
template <typename Scalar = double>
class MixedStrategy {
 public:
  static constexpr Scalar kTolerance = Scalar(1e-9);

  explicit MixedStrategy(GameVector<Scalar> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) throw InvalidArgument("strategy must have at least one entry");
    if (!probs_.allFinite() || (probs_.array() < Scalar(0)).any() ||
        std::abs(probs_.sum() - Scalar(1)) > kTolerance) {
      throw InvalidArgument("strategy is not a probability vector");
    }
  }

  static MixedStrategy uniform(Eigen::Index n) {
    return MixedStrategy(GameVector<Scalar>::Constant(n, Scalar(1) / static_cast<Scalar>(n)));
  }

  static MixedStrategy pure(Eigen::Index n, Eigen::Index index) {
    GameVector<Scalar> p = GameVector<Scalar>::Zero(n);
    p(index) = Scalar(1);
    return MixedStrategy(std::move(p));
  }

  const GameVector<Scalar>& probs() const { return probs_; }
  Eigen::Index size() const { return probs_.size(); }
  Scalar operator()(Eigen::Index i) const { return probs_(i); }

 private:
  GameVector<Scalar> probs_;
};

struct EmdConfig {
  double eta = 0.1;
  int iterations = 1000;  // T: number of iterates averaged, including the first
  bool sequential = false;

  void validate() const {
    if (!std::isfinite(eta) || eta <= 0.0) throw InvalidArgument("eta must be finite and > 0");
    if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  }
};

/// Entropy mirror step: z+_i proportional to z_i * exp(-eta * h_i).
///
/// Weights are shifted by the smallest h on the support so the largest
/// factor is exactly 1; entries outside the support stay at zero.
template <typename Scalar, typename Derived>
MixedStrategy<Scalar> emd_step(const MixedStrategy<Scalar>& z, const Eigen::MatrixBase<Derived>& gradient,
                               Scalar eta) {
  const Eigen::Index n = z.size();
  if (gradient.size() != n) throw ShapeError("emd_step: gradient length differs from strategy length");
  Scalar shift = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (z(i) > Scalar(0)) shift = std::min<Scalar>(shift, gradient(i));
  }
  GameVector<Scalar> next(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    next(i) = z(i) > Scalar(0) ? z(i) * std::exp(-eta * (gradient(i) - shift)) : Scalar(0);
  }
  const Scalar total = next.sum();
  if (!(total > Scalar(0)) || !std::isfinite(total) || !next.allFinite()) {
    throw NumericError("emd_step: normalizer collapsed (non-finite gradient or overflow)");
  }
  return MixedStrategy<Scalar>(next / total);
}

enum class Side { kRow, kCol };

template <typename Scalar>
struct BestResponse {
  Eigen::Index index = 0;
  Scalar value = Scalar(0);
};

/// Pure best response of `side` against the opponent's mixed strategy.
/// Rows minimize, columns maximize; ties go to the smallest index.
template <typename Scalar>
BestResponse<Scalar> best_response(const MatrixGame<Scalar>& game, const MixedStrategy<Scalar>& opponent,
                                   Side side) {
  const auto& a = game.payoff();
  BestResponse<Scalar> best;
  if (side == Side::kRow) {
    if (opponent.size() != game.cols()) throw ShapeError("best_response: opponent must be a column strategy");
    const GameVector<Scalar> values = a * opponent.probs();
    best.value = values(0);
    for (Eigen::Index i = 1; i < values.size(); ++i) {
      if (values(i) < best.value) best = {i, values(i)};
    }
  } else {
    if (opponent.size() != game.rows()) throw ShapeError("best_response: opponent must be a row strategy");
    const GameVector<Scalar> values = a.transpose() * opponent.probs();
    best.value = values(0);
    for (Eigen::Index j = 1; j < values.size(); ++j) {
      if (values(j) > best.value) best = {j, values(j)};
    }
  }
  return best;
}

/// Nash gap: best column reply to mu minus best row reply to nu.
template <typename Scalar>
Scalar exploitability(const MatrixGame<Scalar>& game, const MixedStrategy<Scalar>& mu,
                      const MixedStrategy<Scalar>& nu) {
  return best_response(game, mu, Side::kCol).value - best_response(game, nu, Side::kRow).value;
}

template <typename Scalar>
struct EmdSolution {
  MixedStrategy<Scalar> average_row;
  MixedStrategy<Scalar> average_col;
  MixedStrategy<Scalar> last_row;
  MixedStrategy<Scalar> last_col;
  // exploitability of the running averages after each iterate t = 1..T
  std::vector<Scalar> trace;
};

/// Entropy mirror descent self-play from uniform strategies.
///
/// The row player descends on payoff * nu, the column player ascends on
/// payoff^T * mu. Simultaneous updates by default; with `sequential` the
/// column player moves first and the row player answers the new column
/// strategy.
template <typename Scalar>
EmdSolution<Scalar> solve_zero_sum(const MatrixGame<Scalar>& game, const EmdConfig& config) {
  config.validate();
  const auto& a = game.payoff();
  const Scalar eta = static_cast<Scalar>(config.eta);
  MixedStrategy<Scalar> mu = MixedStrategy<Scalar>::uniform(game.rows());
  MixedStrategy<Scalar> nu = MixedStrategy<Scalar>::uniform(game.cols());
  GameVector<Scalar> sum_mu = GameVector<Scalar>::Zero(game.rows());
  GameVector<Scalar> sum_nu = GameVector<Scalar>::Zero(game.cols());
  std::vector<Scalar> trace;
  trace.reserve(static_cast<std::size_t>(config.iterations));

  for (int t = 1; t <= config.iterations; ++t) {
    sum_mu += mu.probs();
    sum_nu += nu.probs();
    const Scalar count = static_cast<Scalar>(t);
    trace.push_back(exploitability(game, MixedStrategy<Scalar>(sum_mu / count), MixedStrategy<Scalar>(sum_nu / count)));
    if (t == config.iterations) break;
    if (config.sequential) {
      nu = emd_step(nu, GameVector<Scalar>(-(a.transpose() * mu.probs())), eta);
      mu = emd_step(mu, GameVector<Scalar>(a * nu.probs()), eta);
    } else {
      GameVector<Scalar> h_row = a * nu.probs();
      GameVector<Scalar> h_col = -(a.transpose() * mu.probs());
      mu = emd_step(mu, h_row, eta);
      nu = emd_step(nu, h_col, eta);
    }
  }
  const Scalar count = static_cast<Scalar>(config.iterations);
  return {MixedStrategy<Scalar>(sum_mu / count), MixedStrategy<Scalar>(sum_nu / count), mu, nu, std::move(trace)};
}

enum class GibbsSign { kDescent, kAscent };

/// Unnormalized log-density of the mirror-descent iterate after the given
/// gradient history: -sum_t h_t (descent) or +sum_t h_t (ascent).
template <typename Scalar>
GameVector<Scalar> gibbs_density_log(const std::vector<GameVector<Scalar>>& history,
                                     GibbsSign sign = GibbsSign::kDescent) {
  if (history.empty()) throw InvalidArgument("gibbs_density_log: empty history");
  GameVector<Scalar> total = GameVector<Scalar>::Zero(history.front().size());
  for (const auto& h : history) {
    if (h.size() != total.size()) throw InvalidArgument("gibbs_density_log: gradient lengths differ");
    total += h;
  }
  return sign == GibbsSign::kDescent ? GameVector<Scalar>(-total) : total;
}

/// softmax of log-weights.
template <typename Scalar>
MixedStrategy<Scalar> normalize_log_weights(const GameVector<Scalar>& log_weights) {
  const Scalar top = log_weights.maxCoeff();
  GameVector<Scalar> w = (log_weights.array() - top).exp();
  return MixedStrategy<Scalar>(w / w.sum());
}

}  // namespace mat

#endif  // MAT_MIRROR_GAME_HPP_
