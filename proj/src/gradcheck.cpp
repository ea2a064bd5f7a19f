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

#include "mat/gradcheck.hpp"

#include "mat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mat {

double gradcheck(const ScalarFunction& f, const GradientFunction& grad, const Tensor& point,
                 double step) {
  if (!(step > 0.0)) throw InvalidArgument("gradcheck: step must be positive");
  const Tensor analytic = grad(point);
  if (!analytic.same_shape(point)) throw ShapeError("gradcheck: gradient shape differs from point");
  double worst = 0.0;
  Tensor probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    const double x = point(i);
    probe(i) = x + step;
    const double up = f(probe);
    probe(i) = x - step;
    const double down = f(probe);
    probe(i) = x;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic(i) - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

double gradcheck(const GraphBuilder& build, const Tensor& point, double step) {
  Tape tape;
  Var x = tape.input("x", point.shape());
  tape.set_output(build(tape, x));
  auto value = [&tape](const Tensor& at) { return tape.forward({{"x", at}}).item(); };
  auto gradient = [&tape](const Tensor& at) {
    tape.forward({{"x", at}});
    return tape.backward({"x"}).at("x");
  };
  return gradcheck(value, gradient, point, step);
}

}  // namespace mat
