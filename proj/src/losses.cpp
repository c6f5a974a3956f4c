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

#include "dcanet/losses.hpp"

namespace dcanet {

namespace {

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": prediction " + a.shape().str() + " vs target " + b.shape().str());
  }
}

}  // namespace

template <typename T>
Var<T> mse_loss(Var<T> prediction, Var<T> target) {
  require_same(prediction, target, "mse_loss");
  const int64_t n = prediction.shape().rank() == 4 ? prediction.shape().n() : 1;
  return scale(sum_squares(sub(prediction, target)), static_cast<T>(0.5 / static_cast<double>(n)));
}

template <typename T>
Var<T> charbonnier_loss(Var<T> prediction, Var<T> target, double eps, bool per_image) {
  require_same(prediction, target, "charbonnier_loss");
  const T eps2 = static_cast<T>(eps * eps);
  Var<T> diff = sub(prediction, target);
  if (!per_image || prediction.shape().rank() != 4) return sqrt(add_scalar(sum_squares(diff), eps2));
  Var<T> per = reduce(ReduceKind::kSum, mul(diff, diff), {1, 2, 3});
  return mean_all(sqrt(add_scalar(per, eps2)));
}

template <typename T>
Var<T> edge_loss(Var<T> prediction, Var<T> target, double eps, bool per_image) {
  require_same(prediction, target, "edge_loss");
  return charbonnier_loss(laplacian(prediction), laplacian(target), eps, per_image);
}

template <typename T>
Var<T> tv_loss(Var<T> noise_map) {
  auto [gh, gv] = spatial_gradients(noise_map);
  return add(sum_squares(gh), sum_squares(gv));
}

template <typename T>
Var<T> total_loss(Var<T> prediction, Var<T> target, Var<T> noise_map, const LossConfig& cfg) {
  if (cfg.mode == LossMode::kMse) return mse_loss(prediction, target);
  Var<T> loss = charbonnier_loss(prediction, target, cfg.epsilon, cfg.per_image);
  if (cfg.lambda_edge != 0.0) {
    loss = add(loss, scale(edge_loss(prediction, target, cfg.epsilon, cfg.per_image), static_cast<T>(cfg.lambda_edge)));
  }
  if (cfg.lambda_tv != 0.0) loss = add(loss, scale(tv_loss(noise_map), static_cast<T>(cfg.lambda_tv)));
  return loss;
}

#define DCANET_INSTANTIATE_LOSSES(T)                                 \
  template Var<T> mse_loss(Var<T>, Var<T>);                          \
  template Var<T> charbonnier_loss(Var<T>, Var<T>, double, bool);    \
  template Var<T> edge_loss(Var<T>, Var<T>, double, bool);           \
  template Var<T> tv_loss(Var<T>);                                   \
  template Var<T> total_loss(Var<T>, Var<T>, Var<T>, const LossConfig&);

DCANET_INSTANTIATE_LOSSES(float)
DCANET_INSTANTIATE_LOSSES(double)

}  // namespace dcanet
