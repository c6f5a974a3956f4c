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

#include "dcanet/nn.hpp"

namespace dcanet {

enum class LossMode { kMse, kReal };

struct LossConfig {
  LossMode mode = LossMode::kMse;
  double lambda_edge = 0.1;
  double lambda_tv = 0.05;
  double epsilon = 1e-3;
  // Average the Charbonnier terms over images instead of taking one norm over the batch.
  bool per_image = false;
};

/// Sum of squared differences divided by twice the batch size.
template <typename T>
Var<T> mse_loss(Var<T> prediction, Var<T> target);

/// sqrt(||prediction - target||^2 + eps^2).
template <typename T>
Var<T> charbonnier_loss(Var<T> prediction, Var<T> target, double eps, bool per_image = false);

/// Charbonnier penalty on the difference of Laplacians.
template <typename T>
Var<T> edge_loss(Var<T> prediction, Var<T> target, double eps, bool per_image = false);

/// Squared forward differences of the noise map, both directions.
template <typename T>
Var<T> tv_loss(Var<T> noise_map);

/// MSE alone in kMse mode; Charbonnier + edge + TV in kReal mode.
template <typename T>
Var<T> total_loss(Var<T> prediction, Var<T> target, Var<T> noise_map, const LossConfig& cfg);

}  // namespace dcanet
