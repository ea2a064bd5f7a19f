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

#ifndef MAT_CLI_GAME_IO_HPP_
#define MAT_CLI_GAME_IO_HPP_

#include "mat/mirror_game.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace mat::cli {

/// Plain-text game: a "R C" line, then R rows of C numbers. Blank lines and
/// lines starting with '#' are skipped. Errors carry 1-based line numbers.
MatrixGame<double> read_game(std::istream& in);
MatrixGame<double> load_game(const std::string& path);
void write_game(std::ostream& out, const MatrixGame<double>& game);

}  // namespace mat::cli

#endif  // MAT_CLI_GAME_IO_HPP_
