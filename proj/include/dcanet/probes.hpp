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
#include <string>
#include <vector>

namespace dcanet {

struct ProbeCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity (max relative error, density, ...)
  double tolerance = 0.0;  // bound the value was compared against
  std::string detail;
  int kinks = 0;  // gradient checks only: coordinates resampled off a kink
};

struct ProbeReport {
  std::string kind;
  std::vector<ProbeCheck> checks;

  bool passed() const;
  /// {"probe": kind, "passed": bool, "checks": [...]} on one line.
  std::string json() const;
};

/// Finite-difference checks in double precision: every differentiable op at
/// tolerance 1e-4, each loss at 1e-4 and the full model forward plus MSE at
/// 1e-3, both with respect to the input and to a few parameter tensors.
ProbeReport probe_gradcheck(uint64_t seed, int model_width = 8, int coordinates = 10);

/// Gradient-mask density of the default dilation schedule (expects 1.0) and
/// of a constant-rate-2 control (expects < 1.0).
ProbeReport probe_gridding(int width = 8);

/// Two identical short training runs must produce identical loss curves.
ProbeReport probe_determinism(uint64_t seed, int iterations = 50);

}  // namespace dcanet
