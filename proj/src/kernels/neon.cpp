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

// AArch64 NEON variants. Only compiled on arm64 targets, where NEON is part
// of the baseline ISA.

#include <arm_neon.h>

#include "dcanet/kernels/kernels.hpp"

namespace dcanet::simd {
namespace {

static_assert(kGemmNr == 16 && kGemmMr == 6, "NEON microkernel is written for a 6x16 tile");

void gemm_tile(int64_t kc, const float* a, const float* b, float* c, int64_t ldc, bool accumulate) {
  float32x4_t acc[kGemmMr][4];
  for (auto& row : acc) {
    for (auto& q : row) q = vdupq_n_f32(0.0f);
  }
  for (int64_t p = 0; p < kc; ++p) {
    const float32x4_t b0 = vld1q_f32(b), b1 = vld1q_f32(b + 4), b2 = vld1q_f32(b + 8), b3 = vld1q_f32(b + 12);
    for (int i = 0; i < kGemmMr; ++i) {
      const float32x4_t ai = vdupq_n_f32(a[i]);
      acc[i][0] = vfmaq_f32(acc[i][0], ai, b0);
      acc[i][1] = vfmaq_f32(acc[i][1], ai, b1);
      acc[i][2] = vfmaq_f32(acc[i][2], ai, b2);
      acc[i][3] = vfmaq_f32(acc[i][3], ai, b3);
    }
    a += kGemmMr;
    b += kGemmNr;
  }
  for (int i = 0; i < kGemmMr; ++i) {
    float* row = c + i * ldc;
    for (int q = 0; q < 4; ++q) {
      float32x4_t out = acc[i][q];
      if (accumulate) out = vaddq_f32(vld1q_f32(row + 4 * q), out);
      vst1q_f32(row + 4 * q, out);
    }
  }
}

void add(const float* a, const float* b, float* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul(const float* a, const float* b, float* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy(float alpha, const float* x, float* y, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_n_f32(vld1q_f32(y + i), vld1q_f32(x + i), alpha));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(float* param, const float* grad, float* m, float* v, int64_t n, const AdamCoefficients& k) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t g = vld1q_f32(grad + i);
    const float32x4_t mi = vaddq_f32(vmulq_n_f32(vld1q_f32(m + i), k.beta1), vmulq_n_f32(g, k.one_minus_beta1));
    const float32x4_t vi =
        vaddq_f32(vmulq_n_f32(vld1q_f32(v + i), k.beta2), vmulq_n_f32(vmulq_f32(g, g), k.one_minus_beta2));
    vst1q_f32(m + i, mi);
    vst1q_f32(v + i, vi);
    const float32x4_t m_hat = vdivq_f32(mi, vdupq_n_f32(k.bias_correction1));
    const float32x4_t v_hat = vdivq_f32(vi, vdupq_n_f32(k.bias_correction2));
    const float32x4_t step =
        vmulq_n_f32(vdivq_f32(m_hat, vaddq_f32(vsqrtq_f32(v_hat), vdupq_n_f32(k.eps))), k.lr);
    vst1q_f32(param + i, vsubq_f32(vld1q_f32(param + i), step));
  }
  if (i < n) scalar_kernels().adam_update(param + i, grad + i, m + i, v + i, n - i, k);
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{Isa::kNeon, gemm_tile, add, mul, axpy, adam_update};
  return table;
}

}  // namespace dcanet::simd
