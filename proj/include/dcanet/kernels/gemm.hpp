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

#include "dcanet/kernels/kernels.hpp"

namespace dcanet::simd {

/// Read-only strided matrix: element (i, j) lives at data[i*row_stride + j*col_stride].
/// Transposes are expressed by swapping the strides.
template <typename T>
struct MatrixView {
  const T* data = nullptr;
  int64_t row_stride = 0;
  int64_t col_stride = 1;

  T operator()(int64_t i, int64_t j) const { return data[i * row_stride + j * col_stride]; }
  MatrixView transposed() const { return {data, col_stride, row_stride}; }
};

template <typename T>
MatrixView<T> row_major(const T* data, int64_t ld) {
  return {data, ld, 1};
}

/// C[M x N] = A[M x K] * B[K x N], or C += A*B when accumulate is set.
/// C is row-major with leading dimension ldc. The float overload uses the
/// active kernel table and splits columns across num_threads() workers.
void gemm(int64_t m, int64_t n, int64_t k, MatrixView<float> a, MatrixView<float> b, float* c, int64_t ldc,
          bool accumulate);
void gemm(int64_t m, int64_t n, int64_t k, MatrixView<double> a, MatrixView<double> b, double* c, int64_t ldc,
          bool accumulate);

/// Same as the float overload but pinned to one kernel table, single-threaded.
void gemm_with(const KernelTable& table, int64_t m, int64_t n, int64_t k, MatrixView<float> a,
               MatrixView<float> b, float* c, int64_t ldc, bool accumulate);

}  // namespace dcanet::simd
