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

#ifndef MAT_GRADCHECK_HPP_
#define MAT_GRADCHECK_HPP_

#include "mat/tape.hpp"

#include <functional>

namespace mat {

using ScalarFunction = std::function<double(const Tensor&)>;
using GradientFunction = std::function<Tensor(const Tensor&)>;

// Builds a scalar graph from a single tape input.
using GraphBuilder = std::function<Var(Tape&, Var)>;

/// Max over coordinates of |analytic - central difference| / max(1, |central difference|).
double gradcheck(const ScalarFunction& f, const GradientFunction& grad, const Tensor& point,
                 double step);

/// Same check with the analytic gradient taken from reverse mode on the graph
/// produced by `build`. The graph is recorded once and replayed for every
/// finite-difference evaluation.
double gradcheck(const GraphBuilder& build, const Tensor& point, double step);

}  // namespace mat

#endif  // MAT_GRADCHECK_HPP_
