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

// Reference implementations. Plain loops in a fixed order; every SIMD table
// is tested against these.

#include <cmath>

#include "dcanet/kernels/kernels.hpp"

namespace dcanet::simd {
namespace {

void gemm_tile(int64_t kc, const float* a, const float* b, float* c, int64_t ldc, bool accumulate) {
  float acc[kGemmMr][kGemmNr] = {};
  for (int64_t p = 0; p < kc; ++p) {
    const float* ap = a + p * kGemmMr;
    const float* bp = b + p * kGemmNr;
    for (int i = 0; i < kGemmMr; ++i) {
      for (int j = 0; j < kGemmNr; ++j) acc[i][j] += ap[i] * bp[j];
    }
  }
  for (int i = 0; i < kGemmMr; ++i) {
    float* row = c + i * ldc;
    for (int j = 0; j < kGemmNr; ++j) row[j] = accumulate ? row[j] + acc[i][j] : acc[i][j];
  }
}

void add(const float* a, const float* b, float* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const float* a, const float* b, float* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(float alpha, const float* x, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(float* param, const float* grad, float* m, float* v, int64_t n, const AdamCoefficients& k) {
  for (int64_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = k.beta1 * m[i] + k.one_minus_beta1 * g;
    v[i] = k.beta2 * v[i] + k.one_minus_beta2 * (g * g);
    const float m_hat = m[i] / k.bias_correction1;
    const float v_hat = v[i] / k.bias_correction2;
    param[i] -= k.lr * (m_hat / (std::sqrt(v_hat) + k.eps));
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::kScalar, gemm_tile, add, mul, axpy, adam_update};
  return table;
}

}  // namespace dcanet::simd
