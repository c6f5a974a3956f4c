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

#include <vector>

#include "dcanet/tape.hpp"

namespace dcanet {

enum class ElementwiseKind { kAdd, kSub, kMul };
enum class ReduceKind { kMean, kMax, kSum };

/// a (op) b. b may broadcast over a along axes where its extent is 1 (both
/// operands must have the same rank). The result has a's shape; gradients
/// reaching b are summed over the broadcast axes.
template <typename T>
Var<T> elementwise(ElementwiseKind kind, Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return elementwise(ElementwiseKind::kAdd, a, b);
}
template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return elementwise(ElementwiseKind::kSub, a, b);
}
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return elementwise(ElementwiseKind::kMul, a, b);
}

template <typename T>
Var<T> scale(Var<T> a, T factor);
template <typename T>
Var<T> add_scalar(Var<T> a, T value);

/// Concatenation along the channel axis (axis 1) of rank-4 tensors.
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// Channels [begin, end) of a rank-4 tensor.
template <typename T>
Var<T> slice_channels(Var<T> x, int64_t begin, int64_t end);

/// Reduction over the listed axes; reduced axes are kept with extent 1.
/// Max routes its gradient to the first maximal element in row-major order.
template <typename T>
Var<T> reduce(ReduceKind kind, Var<T> x, const std::vector<int>& axes);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

/// Full reductions return shape [1].
template <typename T>
Var<T> sum_all(Var<T> x);
template <typename T>
Var<T> mean_all(Var<T> x);
/// Sum of squared elements as a single-element tensor (shape [1]).
template <typename T>
Var<T> sum_squares(Var<T> x);

template <typename T>
Var<T> sqrt(Var<T> x);

// Plain-tensor helpers shared by the ops (no tape).
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int64_t begin, int64_t end);

}  // namespace dcanet
