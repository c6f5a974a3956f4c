// Copyright 2026 The dcanet Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dcanet/tape.hpp"

namespace dcanet {

struct GradCheckEntry {
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int failures = 0;
  // Coordinates passed over because L was not smooth across [v-h, v+h].
  int kinks = 0;

  bool passed() const { return failures == 0; }
  std::string summary() const;
};

/// |a - n| / max(|a|, |n|); absolute difference when both are below 1e-10.
double relative_error(double analytic, double numeric);

/// Central differences (L(v+h) - L(v-h)) / 2h compared against the full
/// analytic gradient at `count` coordinates of `values`, visited in a seeded
/// random order. A coordinate whose one-sided differences (L(v+h) - L(v)) / h
/// and (L(v) - L(v-h)) / h disagree by more than `tolerance` has a
/// ReLU/max kink inside the stencil; it is counted in `kinks` and replaced by
/// the next one. At most `count` replacements are made; running out of smooth
/// coordinates is a failure. `values` is restored afterwards.
GradCheckReport central_difference_check(const std::function<double()>& loss, std::span<double> values,
                                         std::span<const double> analytic, int count, uint64_t seed,
                                         double step, double tolerance);

/// All of [0, n) in a seeded random order.
std::vector<int64_t> coordinate_order(int64_t n, uint64_t seed);

using TensorFn = std::function<Var<double>(Tape<double>&, Var<double>)>;

/// Checks the tape gradient of f at x in 64-bit arithmetic. Non-scalar
/// outputs are reduced to a scalar through a fixed random projection.
/// step must lie in [1e-6, 1e-2].
GradCheckReport grad_check(const TensorFn& f, const Tensor<double>& x, double step, double tolerance,
                           int coordinates = 10, uint64_t seed = 7);

}  // namespace dcanet
