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

#include "dcanet/losses.hpp"
#include "test_util.hpp"

using namespace dcanet;
using dcanet::testing::random_tensor;

namespace {

double value_of(const std::function<Var<double>(Tape<double>&)>& f) {
  Tape<double> tape;
  return f(tape).value()[0];
}

}  // namespace

TEST_CASE("mse loss") {
  const auto x = random_tensor(Shape{2, 1, 4, 4}, 1);
  CHECK(value_of([&](Tape<double>& t) { return mse_loss(t.constant(x), t.constant(x)); }) == 0.0);

  Tensor<double> a(Shape{1, 1, 2, 2}, 0.0), b(Shape{1, 1, 2, 2}, 0.1);
  CHECK(value_of([&](Tape<double>& t) { return mse_loss(t.constant(a), t.constant(b)); }) ==
        doctest::Approx(0.02).epsilon(1e-12));

  // duplicating the pair along the batch axis keeps the value
  Tensor<double> a2(Shape{2, 1, 2, 2}, 0.0), b2(Shape{2, 1, 2, 2}, 0.1);
  CHECK(value_of([&](Tape<double>& t) { return mse_loss(t.constant(a2), t.constant(b2)); }) ==
        doctest::Approx(0.02).epsilon(1e-12));

  // permuting pixels of both arguments together
  const auto p = random_tensor(Shape{1, 1, 3, 3}, 2), q = random_tensor(Shape{1, 1, 3, 3}, 3);
  Tensor<double> pp(p.shape()), qp(q.shape());
  for (int64_t i = 0; i < 9; ++i) {
    pp[(i * 4) % 9] = p[i];
    qp[(i * 4) % 9] = q[i];
  }
  CHECK(value_of([&](Tape<double>& t) { return mse_loss(t.constant(p), t.constant(q)); }) ==
        doctest::Approx(value_of([&](Tape<double>& t) { return mse_loss(t.constant(pp), t.constant(qp)); })));

  Tape<double> tape;
  CHECK_THROWS_AS(mse_loss(tape.constant(a), tape.constant(x)), ShapeError);
}

TEST_CASE("charbonnier loss") {
  const auto x = random_tensor(Shape{1, 1, 4, 4}, 4);
  CHECK(std::abs(value_of([&](Tape<double>& t) { return charbonnier_loss(t.constant(x), t.constant(x), 1e-3); }) -
                 1e-3) <= 1e-9);
  Tensor<double> y = x;
  y[5] += 0.3;
  CHECK(std::abs(value_of([&](Tape<double>& t) { return charbonnier_loss(t.constant(y), t.constant(x), 1e-3); }) -
                 std::sqrt(0.09 + 1e-6)) <= 1e-7);
  CHECK(std::sqrt(0.09 + 1e-6) == doctest::Approx(0.3000017).epsilon(1e-7));

  // finite, bounded gradient at the minimum
  Tape<double> tape;
  auto v = tape.leaf(x);
  tape.backward(charbonnier_loss(v, tape.constant(x), 1e-3));
  double norm = 0;
  for (double g : v.grad().data()) norm += g * g;
  CHECK(std::isfinite(norm));
  CHECK(std::sqrt(norm) <= 1.0);
}

TEST_CASE("edge loss") {
  const auto x = random_tensor(Shape{1, 1, 5, 5}, 5);
  CHECK(std::abs(value_of([&](Tape<double>& t) { return edge_loss(t.constant(x), t.constant(x), 1e-3); }) - 1e-3) <=
        1e-9);

  // A constant shift only shows up where zero padding cuts the stencil:
  // corners lose two neighbours, other border pixels lose one.
  const double c = 0.2;
  Tensor<double> shifted = x;
  for (auto& v : shifted.data()) v += c;
  const double corners = 4 * (2 * c) * (2 * c);
  const double edges = 4 * 3 * c * c;
  const double expected = std::sqrt(corners + edges + 1e-6);
  CHECK(std::abs(value_of([&](Tape<double>& t) { return edge_loss(t.constant(shifted), t.constant(x), 1e-3); }) -
                 expected) <= 1e-7);

  const double via_laplacian = value_of([&](Tape<double>& t) {
    return charbonnier_loss(laplacian(t.constant(shifted)), laplacian(t.constant(x)), 1e-3);
  });
  CHECK(via_laplacian ==
        value_of([&](Tape<double>& t) { return edge_loss(t.constant(shifted), t.constant(x), 1e-3); }));
}

TEST_CASE("total variation") {
  CHECK(value_of([](Tape<double>& t) { return tv_loss(t.constant(Tensor<double>(Shape{1, 1, 4, 4}, 0.3))); }) == 0.0);
  CHECK(value_of([](Tape<double>& t) {
          return tv_loss(t.constant(Tensor<double>(Shape{1, 1, 1, 3}, std::vector<double>{0, 1, 0})));
        }) == 2.0);
  const double s = 0.25;
  const int h = 6, w = 7;
  Tensor<double> step(Shape{1, 1, h, w});
  for (int i = 3; i < h; ++i) {
    for (int j = 0; j < w; ++j) step.at(0, 0, i, j) = s;
  }
  CHECK(std::abs(value_of([&](Tape<double>& t) { return tv_loss(t.constant(step)); }) - w * s * s) <= 1e-7);
}

TEST_CASE("total loss") {
  LossConfig cfg;
  CHECK(cfg.lambda_edge == 0.1);
  CHECK(cfg.lambda_tv == 0.05);
  CHECK(cfg.epsilon == 1e-3);
  cfg.mode = LossMode::kReal;

  const auto x = random_tensor(Shape{1, 1, 5, 5}, 6);
  const Tensor<double> flat(Shape{1, 1, 5, 5}, 0.1);
  // edge term of identical inputs is eps, TV of a constant map is 0
  CHECK(std::abs(value_of([&](Tape<double>& t) { return total_loss(t.constant(x), t.constant(x), t.constant(flat), cfg); }) -
                 (1e-3 + 0.1 * 1e-3)) <= 1e-9);

  const auto y = random_tensor(Shape{1, 1, 5, 5}, 7);
  const auto sigma = random_tensor(Shape{1, 1, 5, 5}, 8);
  LossConfig plain = cfg;
  plain.lambda_edge = plain.lambda_tv = 0.0;
  CHECK(value_of([&](Tape<double>& t) { return total_loss(t.constant(y), t.constant(x), t.constant(sigma), plain); }) ==
        value_of([&](Tape<double>& t) { return charbonnier_loss(t.constant(y), t.constant(x), 1e-3); }));

  double previous = -1.0;
  for (double lambda : {0.0, 0.05, 0.1, 0.5, 1.0}) {
    LossConfig c = cfg;
    c.lambda_edge = lambda;
    c.lambda_tv = lambda;
    const double v =
        value_of([&](Tape<double>& t) { return total_loss(t.constant(y), t.constant(x), t.constant(sigma), c); });
    CHECK(v >= previous);
    previous = v;
  }

  LossConfig mse;
  CHECK(value_of([&](Tape<double>& t) { return total_loss(t.constant(y), t.constant(x), t.constant(sigma), mse); }) ==
        value_of([&](Tape<double>& t) { return mse_loss(t.constant(y), t.constant(x)); }));
}

TEST_CASE("losses are non-negative and bounded below by eps") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = random_tensor(Shape{2, 1, 4, 4}, seed), b = random_tensor(Shape{2, 1, 4, 4}, seed + 10);
    CHECK(value_of([&](Tape<double>& t) { return mse_loss(t.constant(a), t.constant(b)); }) >= 0.0);
    CHECK(value_of([&](Tape<double>& t) { return charbonnier_loss(t.constant(a), t.constant(b), 1e-3); }) >= 1e-3);
    CHECK(value_of([&](Tape<double>& t) { return edge_loss(t.constant(a), t.constant(b), 1e-3); }) >= 1e-3);
    CHECK(value_of([&](Tape<double>& t) { return tv_loss(t.constant(a)); }) >= 0.0);
  }
}

TEST_CASE("per-image Charbonnier averages image norms") {
  Tensor<double> a(Shape{2, 1, 1, 2}, 0.0), b(Shape{2, 1, 1, 2}, std::vector<double>{0.3, 0.4, 0.0, 0.0});
  const double v =
      value_of([&](Tape<double>& t) { return charbonnier_loss(t.constant(a), t.constant(b), 1e-3, true); });
  CHECK(v == doctest::Approx((std::sqrt(0.25 + 1e-6) + 1e-3) / 2.0).epsilon(1e-12));
}

TEST_CASE("loss gradients on random 1x1x6x6 inputs") {
  const auto target = random_tensor(Shape{1, 1, 6, 6}, 20);
  const auto x = random_tensor(Shape{1, 1, 6, 6}, 21);
  LossConfig real;
  real.mode = LossMode::kReal;
  const std::vector<std::pair<const char*, TensorFn>> cases = {
      {"mse", [&](Tape<double>& t, Var<double> v) { return mse_loss(v, t.constant(target)); }},
      {"charbonnier", [&](Tape<double>& t, Var<double> v) { return charbonnier_loss(v, t.constant(target), 1e-3); }},
      {"charbonnier per image",
       [&](Tape<double>& t, Var<double> v) { return charbonnier_loss(v, t.constant(target), 1e-3, true); }},
      {"edge", [&](Tape<double>& t, Var<double> v) { return edge_loss(v, t.constant(target), 1e-3); }},
      {"tv", [](Tape<double>&, Var<double> v) { return tv_loss(v); }},
      {"total", [&](Tape<double>& t, Var<double> v) { return total_loss(v, t.constant(target), v, real); }},
  };
  for (const auto& [name, f] : cases) {
    const auto r = grad_check(f, x, 1e-6, 1e-4, 12);
    CHECK_MESSAGE(r.passed(), name, ": ", r.summary());
  }
}
