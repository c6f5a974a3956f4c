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

#include "dcanet/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcanet/kernels/kernels.hpp"

namespace dcanet {

void Adam::step(Model<float>& model, double lr) {
  begin_step();
  model.for_each_parameter([&](Parameter<float>& p) { step(p, lr); });
}

void Adam::step(Parameter<float>& p, double lr) {
  if (!p.has_grad) throw Error("adam: parameter '" + p.name + "' has no gradient");
  if (t_ < 1) throw Error("adam: begin_step() must precede parameter updates");
  auto it = moments_.find(p.name);
  if (it == moments_.end()) {
    it = moments_.emplace(p.name, Moments{Tensor<float>(p.value.shape()), Tensor<float>(p.value.shape())}).first;
  }
  Moments& mv = it->second;
  if (!(mv.m.shape() == p.value.shape())) throw ShapeError("adam: moment shape mismatch for '" + p.name + "'");

  simd::AdamCoefficients k;
  k.beta1 = static_cast<float>(config_.beta1);
  k.beta2 = static_cast<float>(config_.beta2);
  k.one_minus_beta1 = static_cast<float>(1.0 - config_.beta1);
  k.one_minus_beta2 = static_cast<float>(1.0 - config_.beta2);
  k.bias_correction1 = static_cast<float>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  k.bias_correction2 = static_cast<float>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  k.lr = static_cast<float>(lr);
  k.eps = static_cast<float>(config_.eps);
  simd::active_kernels().adam_update(p.value.ptr(), p.grad.ptr(), mv.m.ptr(), mv.v.ptr(), p.value.numel(), k);
}

Schedule step_halving_schedule(double init, int64_t halve_every) {
  Schedule s;
  s.kind = Schedule::Kind::kStepHalving;
  s.init = init;
  s.halve_every = halve_every;
  return s;
}

Schedule cosine_schedule(double horizon_epochs, double init, double floor) {
  Schedule s;
  s.kind = Schedule::Kind::kCosine;
  s.init = init;
  s.floor = floor;
  s.horizon = horizon_epochs;
  return s;
}

double lr_at(const Schedule& s, double step_or_epoch) {
  if (step_or_epoch < 0) throw Error("lr_at: step must be non-negative");
  if (s.kind == Schedule::Kind::kStepHalving) {
    const double halvings = std::floor(step_or_epoch / static_cast<double>(s.halve_every));
    return s.init * std::exp2(-halvings);
  }
  const double e = std::min(step_or_epoch, s.horizon);
  return s.floor + (s.init - s.floor) * (1.0 + std::cos(std::numbers::pi * e / s.horizon)) / 2.0;
}

}  // namespace dcanet
