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

#include "mat/cli/game_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace mat::cli {

namespace {

bool skip_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

// All numbers on the line; throws on anything that does not parse.
std::vector<double> parse_numbers(const std::string& line, std::size_t number) {
  std::istringstream in(line);
  in.imbue(std::locale::classic());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ParseError("not a number: '" + token + "'", number);
    values.push_back(v);
  }
  return values;
}

}  // namespace

MatrixGame<double> read_game(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  long rows = -1, cols = -1;
  std::vector<std::vector<double>> body;
  while (std::getline(in, line)) {
    ++number;
    if (skip_line(line)) continue;
    const std::vector<double> values = parse_numbers(line, number);
    if (rows < 0) {
      if (values.size() != 2 || values[0] != static_cast<long>(values[0]) ||
          values[1] != static_cast<long>(values[1]) || values[0] < 1 || values[1] < 1) {
        throw ParseError("expected header 'R C' with positive integers", number);
      }
      rows = static_cast<long>(values[0]);
      cols = static_cast<long>(values[1]);
      continue;
    }
    if (static_cast<long>(body.size()) == rows) throw ParseError("extra row after " + std::to_string(rows) + " rows", number);
    if (static_cast<long>(values.size()) != cols) {
      throw ParseError("expected " + std::to_string(cols) + " entries, got " + std::to_string(values.size()), number);
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ParseError("payoff is not finite", number);
    }
    body.push_back(values);
  }
  if (rows < 0) throw ParseError("missing 'R C' header", number + 1);
  if (static_cast<long>(body.size()) != rows) {
    throw ParseError("expected " + std::to_string(rows) + " rows, got " + std::to_string(body.size()), number + 1);
  }
  GameMatrix<double> a(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) a(i, j) = body[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return MatrixGame<double>(std::move(a));
}

MatrixGame<double> load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open game file: " + path);
  return read_game(in);
}

void write_game(std::ostream& out, const MatrixGame<double>& game) {
  out << game.rows() << ' ' << game.cols() << '\n';
  const auto precision = out.precision(17);
  for (Eigen::Index i = 0; i < game.rows(); ++i) {
    for (Eigen::Index j = 0; j < game.cols(); ++j) out << (j ? " " : "") << game.payoff()(i, j);
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace mat::cli
