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

#include <utility>

#include "dcanet/ops.hpp"

namespace dcanet {

/// Stride-1 convolution layer with zero padding. Weight is O x C x k x k.
template <typename T>
struct Conv2dParams {
  Parameter<T> weight;
  Parameter<T> bias;
  int dilation = 1;
  int padding = 1;

  int64_t out_channels() const { return weight.value.shape()[0]; }
  int64_t in_channels() const { return weight.value.shape()[1]; }
  int64_t kernel() const { return weight.value.shape()[2]; }
};

/// Builds a conv layer with zeroed tensors; padding = dilation*(k-1)/2 so
/// spatial extents are preserved.
template <typename T>
Conv2dParams<T> make_conv(const std::string& name, int64_t in, int64_t out, int kernel, int dilation = 1);

enum class BnMode { kTrain, kEval };

template <typename T>
struct BatchNormParams {
  Parameter<T> gamma;
  Parameter<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;
};

template <typename T>
BatchNormParams<T> make_batch_norm(const std::string& name, int64_t channels);

/// out[n,o,i,j] = bias[o] + sum_{c,u,v} w[o,c,u,v] * x_pad[n,c,i+u*d,j+v*d]
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, int dilation, int padding);

template <typename T>
Var<T> conv2d(Tape<T>& tape, Var<T> x, Conv2dParams<T>& p) {
  return conv2d(x, tape.param(p.weight), tape.param(p.bias), p.dilation, p.padding);
}

/// 2x2 max pooling, stride 2. Odd extents are replicate-padded on the
/// right/bottom first. Ties go to the first element in scan order.
template <typename T>
Var<T> max_pool2(Var<T> x);

/// Scale-2 bilinear upsampling, src = (dst + 0.5) / 2 - 0.5, clamped to the edge.
template <typename T>
Var<T> bilinear_upsample2(Var<T> x);

/// Center crop of the spatial axes to (h, w).
template <typename T>
Var<T> center_crop(Var<T> x, int64_t h, int64_t w);

/// Train mode normalizes with batch statistics (and differentiates through
/// them) and updates the running stats; eval mode uses the running stats.
template <typename T>
Var<T> batch_norm(Tape<T>& tape, Var<T> x, BatchNormParams<T>& p, BnMode mode);

template <typename T>
Var<T> relu(Var<T> x);
/// Single learnable slope shared across all elements; slope has shape [1].
template <typename T>
Var<T> prelu(Var<T> x, Var<T> slope);
template <typename T>
Var<T> tanh(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);

/// Per-pixel statistic across channels: N x C x H x W -> N x 1 x H x W.
template <typename T>
Var<T> channel_pool(ReduceKind kind, Var<T> x);

/// Per-channel spatial mean: N x C x H x W -> N x C x 1 x 1.
template <typename T>
Var<T> spatial_gap(Var<T> x);

/// Fixed 3x3 kernel [[0,1,0],[1,-4,1],[0,1,0]] per channel, zero padding.
template <typename T>
Var<T> laplacian(Var<T> x);

/// Forward differences: horizontal N x C x H x (W-1), vertical N x C x (H-1) x W.
template <typename T>
std::pair<Var<T>, Var<T>> spatial_gradients(Var<T> x);

}  // namespace dcanet
