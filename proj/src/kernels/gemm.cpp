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

// Packed, cache-blocked GEMM driver. Panels are packed once per (k-block,
// column-block) and fed to the per-ISA register-tile microkernel.

#include "dcanet/kernels/gemm.hpp"

#include <algorithm>
#include <vector>

#include "dcanet/parallel.hpp"

namespace dcanet::simd {
namespace {

constexpr int64_t kKc = 256;
constexpr int64_t kMc = 96;
constexpr int64_t kNc = 2048;

template <int Mr, typename T>
void pack_a(MatrixView<T> a, int64_t i0, int64_t mc, int64_t p0, int64_t kc, T* out) {
  for (int64_t ir = 0; ir < mc; ir += Mr) {
    const int64_t mr = std::min<int64_t>(Mr, mc - ir);
    for (int64_t p = 0; p < kc; ++p) {
      for (int64_t i = 0; i < Mr; ++i) *out++ = i < mr ? a(i0 + ir + i, p0 + p) : T(0);
    }
  }
}

template <int Nr, typename T>
void pack_b(MatrixView<T> b, int64_t p0, int64_t kc, int64_t j0, int64_t nc, T* out) {
  for (int64_t jr = 0; jr < nc; jr += Nr) {
    const int64_t nr = std::min<int64_t>(Nr, nc - jr);
    for (int64_t p = 0; p < kc; ++p) {
      if (nr == Nr && b.col_stride == 1) {
        const T* src = b.data + (p0 + p) * b.row_stride + j0 + jr;
        std::copy(src, src + Nr, out);
        out += Nr;
      } else {
        for (int64_t j = 0; j < Nr; ++j) *out++ = j < nr ? b(p0 + p, j0 + jr + j) : T(0);
      }
    }
  }
}

template <typename T, int Mr, int Nr>
void scalar_tile(int64_t kc, const T* a, const T* b, T* c, int64_t ldc, bool accumulate) {
  T acc[Mr][Nr] = {};
  for (int64_t p = 0; p < kc; ++p) {
    for (int i = 0; i < Mr; ++i) {
      for (int j = 0; j < Nr; ++j) acc[i][j] += a[p * Mr + i] * b[p * Nr + j];
    }
  }
  for (int i = 0; i < Mr; ++i) {
    for (int j = 0; j < Nr; ++j) c[i * ldc + j] = accumulate ? c[i * ldc + j] + acc[i][j] : acc[i][j];
  }
}

template <typename T>
struct PackBuffers {
  std::vector<T> a;
  std::vector<T> b;
};

template <typename T>
PackBuffers<T>& pack_buffers() {
  thread_local PackBuffers<T> buffers;
  return buffers;
}

template <typename T, int Mr, int Nr, typename Tile>
void gemm_columns(Tile tile, int64_t m, int64_t n0, int64_t n1, int64_t k, MatrixView<T> a, MatrixView<T> b, T* c,
                  int64_t ldc, bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (int64_t i = 0; i < m; ++i) std::fill(c + i * ldc + n0, c + i * ldc + n1, T(0));
    }
    return;
  }
  auto& buf = pack_buffers<T>();
  const int64_t mc_max = std::min(kMc, (m + Mr - 1) / Mr * Mr);
  buf.a.resize(static_cast<size_t>(mc_max * kKc));
  buf.b.resize(static_cast<size_t>(kNc * kKc));
  T edge[Mr * Nr];

  for (int64_t jc = n0; jc < n1; jc += kNc) {
    const int64_t nc = std::min(kNc, n1 - jc);
    for (int64_t pc = 0; pc < k; pc += kKc) {
      const int64_t kc = std::min(kKc, k - pc);
      const bool acc = accumulate || pc > 0;
      pack_b<Nr>(b, pc, kc, jc, nc, buf.b.data());
      for (int64_t ic = 0; ic < m; ic += kMc) {
        const int64_t mc = std::min(kMc, m - ic);
        pack_a<Mr>(a, ic, mc, pc, kc, buf.a.data());
        for (int64_t jr = 0; jr < nc; jr += Nr) {
          const int64_t nr = std::min<int64_t>(Nr, nc - jr);
          const T* bp = buf.b.data() + jr * kc;
          for (int64_t ir = 0; ir < mc; ir += Mr) {
            const int64_t mr = std::min<int64_t>(Mr, mc - ir);
            const T* ap = buf.a.data() + ir * kc;
            T* cp = c + (ic + ir) * ldc + jc + jr;
            if (mr == Mr && nr == Nr) {
              tile(kc, ap, bp, cp, ldc, acc);
            } else {
              tile(kc, ap, bp, edge, Nr, false);
              for (int64_t i = 0; i < mr; ++i) {
                for (int64_t j = 0; j < nr; ++j) {
                  cp[i * ldc + j] = acc ? cp[i * ldc + j] + edge[i * Nr + j] : edge[i * Nr + j];
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

void gemm_with(const KernelTable& table, int64_t m, int64_t n, int64_t k, MatrixView<float> a,
               MatrixView<float> b, float* c, int64_t ldc, bool accumulate) {
  gemm_columns<float, kGemmMr, kGemmNr>(table.gemm_tile, m, 0, n, k, a, b, c, ldc, accumulate);
}

void gemm(int64_t m, int64_t n, int64_t k, MatrixView<float> a, MatrixView<float> b, float* c, int64_t ldc,
          bool accumulate) {
  if (m == 0 || n == 0) return;
  const KernelTable& table = active_kernels();
  const int64_t panels = (n + kGemmNr - 1) / kGemmNr;
  parallel_for(panels, [&](int64_t begin, int64_t end) {
    gemm_columns<float, kGemmMr, kGemmNr>(table.gemm_tile, m, begin * kGemmNr, std::min(n, end * kGemmNr), k, a,
                                          b, c, ldc, accumulate);
  });
}

void gemm(int64_t m, int64_t n, int64_t k, MatrixView<double> a, MatrixView<double> b, double* c, int64_t ldc,
          bool accumulate) {
  if (m == 0 || n == 0) return;
  gemm_columns<double, 4, 8>(scalar_tile<double, 4, 8>, m, 0, n, k, a, b, c, ldc, accumulate);
}

}  // namespace dcanet::simd
