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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dcanet/kernels/gemm.hpp"
#include "dcanet/parallel.hpp"

using namespace dcanet::simd;

namespace {

std::vector<float> random_floats(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double reference_entry(int64_t i, int64_t j, int64_t k, MatrixView<float> a, MatrixView<float> b) {
  double acc = 0.0;
  for (int64_t p = 0; p < k; ++p) acc += static_cast<double>(a(i, p)) * b(p, j);
  return acc;
}

}  // namespace

TEST_CASE("every available ISA matches the scalar reference") {
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::kScalar);
  MESSAGE("available ISAs: " << isas.size());

  struct Dims {
    int64_t m, n, k;
    bool ta, tb;
  };
  const Dims cases[] = {{1, 1, 1, false, false},   {6, 16, 8, false, false},  {7, 17, 3, true, false},
                        {13, 40, 300, false, true}, {64, 33, 576, true, true}, {100, 2100, 27, false, false},
                        {5, 9, 0, false, false}};
  for (Isa isa : isas) {
    const KernelTable& table = kernels_for(isa);
    CAPTURE(isa_name(isa));
    for (const auto& d : cases) {
      CAPTURE(d.m);
      CAPTURE(d.n);
      CAPTURE(d.k);
      const auto abuf = random_floats(static_cast<size_t>(d.m * d.k) + 1, 1);
      const auto bbuf = random_floats(static_cast<size_t>(d.k * d.n) + 1, 2);
      MatrixView<float> a = d.ta ? row_major(abuf.data(), d.m).transposed() : row_major(abuf.data(), d.k);
      MatrixView<float> b = d.tb ? row_major(bbuf.data(), d.k).transposed() : row_major(bbuf.data(), d.n);
      for (bool acc : {false, true}) {
        std::vector<float> c(static_cast<size_t>(d.m * d.n), 0.5f);
        gemm_with(table, d.m, d.n, d.k, a, b, c.data(), d.n, acc);
        double worst = 0.0;
        for (int64_t i = 0; i < d.m; ++i) {
          for (int64_t j = 0; j < d.n; ++j) {
            const double ref = reference_entry(i, j, d.k, a, b) + (acc ? 0.5 : 0.0);
            worst = std::max(worst, std::abs(ref - c[static_cast<size_t>(i * d.n + j)]));
          }
        }
        CHECK(worst < 1e-5 * std::max<int64_t>(1, d.k));
      }
    }

    const size_t n = 1037;
    const auto x = random_floats(n, 3), y = random_floats(n, 4);
    std::vector<float> ref(n), got(n);
    scalar_kernels().add(x.data(), y.data(), ref.data(), n);
    table.add(x.data(), y.data(), got.data(), n);
    CHECK(ref == got);
    scalar_kernels().mul(x.data(), y.data(), ref.data(), n);
    table.mul(x.data(), y.data(), got.data(), n);
    CHECK(ref == got);
    ref = y;
    got = y;
    scalar_kernels().axpy(0.3f, x.data(), ref.data(), n);
    table.axpy(0.3f, x.data(), got.data(), n);
    for (size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-6));

    AdamCoefficients k;
    k.bias_correction1 = 0.19f;
    k.bias_correction2 = 0.002f;
    k.lr = 1e-3f;
    std::vector<float> p1 = x, p2 = x, m1(n, 0.01f), m2(n, 0.01f), v1(n, 0.02f), v2(n, 0.02f);
    for (int step = 0; step < 3; ++step) {
      scalar_kernels().adam_update(p1.data(), y.data(), m1.data(), v1.data(), n, k);
      table.adam_update(p2.data(), y.data(), m2.data(), v2.data(), n, k);
    }
    CHECK(p1 == p2);
    CHECK(m1 == m2);
    CHECK(v1 == v2);
  }
}

TEST_CASE("threaded gemm is deterministic and matches the single-threaded path") {
  const int64_t m = 64, n = 900, k = 200;
  const auto abuf = random_floats(m * k, 5), bbuf = random_floats(k * n, 6);
  std::vector<float> single(m * n), threaded(m * n), again(m * n);
  gemm_with(active_kernels(), m, n, k, row_major(abuf.data(), k), row_major(bbuf.data(), n), single.data(), n,
            false);
  const int saved = dcanet::num_threads();
  dcanet::set_num_threads(3);
  gemm(m, n, k, row_major(abuf.data(), k), row_major(bbuf.data(), n), threaded.data(), n, false);
  gemm(m, n, k, row_major(abuf.data(), k), row_major(bbuf.data(), n), again.data(), n, false);
  dcanet::set_num_threads(saved);
  CHECK(single == threaded);
  CHECK(threaded == again);
}

TEST_CASE("isa names round-trip") {
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) CHECK(parse_isa(isa_name(isa)) == isa);
}
