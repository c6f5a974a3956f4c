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
#include <map>
#include <string>

#include "dcanet/model.hpp"

namespace dcanet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with per-parameter moments keyed by parameter name.
class Adam {
 public:
  struct Moments {
    Tensor<float> m;
    Tensor<float> v;
  };

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update of every parameter; throws if a parameter has no gradient.
  void step(Model<float>& model, double lr);
  void step(Parameter<float>& p, double lr);
  /// Advances the shared step counter; call once per step() sweep.
  void begin_step() { ++t_; }

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return config_; }
  std::map<std::string, Moments>& moments() { return moments_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }

 private:
  AdamConfig config_;
  int64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

struct Schedule {
  enum class Kind { kStepHalving, kCosine };
  Kind kind = Kind::kStepHalving;
  double init = 1e-4;
  int64_t halve_every = 100000;
  double floor = 1e-6;
  double horizon = 120.0;  // epochs, cosine only
};

Schedule step_halving_schedule(double init = 1e-4, int64_t halve_every = 100000);
Schedule cosine_schedule(double horizon_epochs, double init = 2e-4, double floor = 1e-6);

/// Step halving: init * 2^-floor(step / halve_every). Cosine:
/// floor + (init - floor) * (1 + cos(pi * e / E)) / 2, held at floor past E.
double lr_at(const Schedule& s, double step_or_epoch);

}  // namespace dcanet
