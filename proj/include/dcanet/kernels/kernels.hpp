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

namespace dcanet::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string isa_name(Isa isa);
Isa parse_isa(const std::string& name);

// Register tile of the float GEMM microkernel; shared by every ISA so the
// packed panel layout does not depend on dispatch.
inline constexpr int kGemmMr = 6;
inline constexpr int kGemmNr = 16;

struct AdamCoefficients {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float one_minus_beta1 = 0.1f;
  float one_minus_beta2 = 0.001f;
  float bias_correction1 = 1.0f;  // 1 - beta1^t
  float bias_correction2 = 1.0f;  // 1 - beta2^t
  float lr = 1e-4f;
  float eps = 1e-8f;
};

/// Per-ISA implementations of the data-parallel inner loops.
struct KernelTable {
  Isa isa = Isa::kScalar;

  // c[MR x NR] (+)= a_panel(kc x MR) * b_panel(kc x NR); row stride ldc.
  void (*gemm_tile)(int64_t kc, const float* a, const float* b, float* c, int64_t ldc, bool accumulate) = nullptr;

  void (*add)(const float* a, const float* b, float* out, int64_t n) = nullptr;
  void (*mul)(const float* a, const float* b, float* out, int64_t n) = nullptr;
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, int64_t n) = nullptr;
  void (*adam_update)(float* param, const float* grad, float* m, float* v, int64_t n,
                      const AdamCoefficients& k) = nullptr;
};

const KernelTable& scalar_kernels();
#if defined(DCANET_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(DCANET_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

/// ISAs compiled into this build and supported by the running CPU.
std::vector<Isa> available_isas();
const KernelTable& kernels_for(Isa isa);

/// Table used by the tensor ops. Defaults to the best available ISA, or the
/// one named by the DCANET_ISA environment variable.
const KernelTable& active_kernels();
void set_active_isa(Isa isa);
Isa active_isa();

}  // namespace dcanet::simd
