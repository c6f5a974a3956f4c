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

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dcanet/gradcheck.hpp"
#include "dcanet/tensor.hpp"

namespace dcanet::testing {

template <typename T = double>
Tensor<T> random_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

// Direct sliding-window cross-correlation straight from the definition,
// evaluated in double. Independent of the im2col/GEMM path.
inline Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                                   int dilation, int padding) {
  const Shape& xs = x.shape();
  const int64_t o_c = w.shape()[0], k = w.shape()[2];
  const int64_t oh = xs.h() + 2 * padding - dilation * (k - 1);
  const int64_t ow = xs.w() + 2 * padding - dilation * (k - 1);
  Tensor<double> out(Shape::nchw(xs.n(), o_c, oh, ow));
  for (int64_t n = 0; n < xs.n(); ++n) {
    for (int64_t o = 0; o < o_c; ++o) {
      for (int64_t i = 0; i < oh; ++i) {
        for (int64_t j = 0; j < ow; ++j) {
          double acc = b[o];
          for (int64_t c = 0; c < xs.c(); ++c) {
            for (int64_t u = 0; u < k; ++u) {
              for (int64_t v = 0; v < k; ++v) {
                const int64_t yy = i + u * dilation - padding;
                const int64_t xx = j + v * dilation - padding;
                if (yy < 0 || yy >= xs.h() || xx < 0 || xx >= xs.w()) continue;
                acc += w.at(o, c, u, v) * x.at(n, c, yy, xx);
              }
            }
          }
          out.at(n, o, i, j) = acc;
        }
      }
    }
  }
  return out;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

// Compares the tape gradient of a scalar loss with respect to one parameter
// against central differences on that parameter's values.
inline GradCheckReport parameter_grad_check(const std::function<Var<double>(Tape<double>&)>& loss,
                                            Parameter<double>& p, int coordinates, double step, double tol,
                                            uint64_t seed = 3) {
  p.zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  const std::vector<double> analytic(p.grad.data().begin(), p.grad.data().end());
  p.zero_grad();
  auto eval = [&] {
    Tape<double> tape;
    return loss(tape).value()[0];
  };
  return central_difference_check(eval, p.value.data(), analytic, coordinates, seed, step, tol);
}

}  // namespace dcanet::testing
