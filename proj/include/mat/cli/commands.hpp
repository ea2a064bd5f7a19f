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

#ifndef MAT_CLI_COMMANDS_HPP_
#define MAT_CLI_COMMANDS_HPP_

#include "mat/cli/config.hpp"
#include "mat/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mat::cli {

/// Entry point shared by the `mat` binary and the tests. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_solve_game(const ExperimentConfig& config, std::ostream& out);
int cmd_sample(const ExperimentConfig& config, std::ostream& out);
int cmd_train(const ExperimentConfig& config, std::ostream& out);
int cmd_ablate(const ExperimentConfig& config, std::ostream& out);
// `corrupt` perturbs every analytic gradient (fault injection for tests).
int cmd_gradcheck(const ExperimentConfig& config, std::ostream& out, bool corrupt = false);

// Checkpoint text format: "mat-checkpoint 1", a slot table, then the values.
void save_checkpoint(const std::string& path, const ParameterVector& theta);
ParameterVector load_checkpoint(const std::string& path);

/// Locale-independent "%.17g".
std::string format_double(double value);

}  // namespace mat::cli

#endif  // MAT_CLI_COMMANDS_HPP_
