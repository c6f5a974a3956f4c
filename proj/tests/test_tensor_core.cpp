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

#include "dcanet/gradcheck.hpp"
#include "dcanet/ops.hpp"
#include "test_util.hpp"

using namespace dcanet;
using dcanet::testing::random_tensor;

TEST_CASE("tensor invariants") {
  Tensor<float> t(Shape{2, 3, 4, 5});
  CHECK(t.numel() == 120);
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 2}, std::vector<float>(3)), ShapeError);
  CHECK_THROWS_AS(Shape({1, 2, 3, 4, 5}), ShapeError);
  CHECK(t.reshaped(Shape{120}).numel() == 120);
}

TEST_CASE("elementwise add and broadcast mul") {
  Tape<double> tape;
  auto a = tape.leaf(Tensor<double>(Shape{2}, std::vector<double>{1, 2}));
  auto b = tape.leaf(Tensor<double>(Shape{2}, std::vector<double>{3, 4}));
  auto s = add(a, b);
  CHECK(s.value()[0] == 4);
  CHECK(s.value()[1] == 6);

  auto ones = tape.leaf(Tensor<double>(Shape{1, 3, 4, 4}, 1.0));
  auto half = tape.leaf(Tensor<double>(Shape{1, 1, 4, 4}, 0.5));
  auto m = mul(ones, half);
  CHECK(m.shape() == Shape({1, 3, 4, 4}));
  for (double v : m.value().data()) CHECK(v == 0.5);

  auto bad = tape.leaf(Tensor<double>(Shape{1, 2, 4, 4}));
  CHECK_THROWS_WITH_AS(add(ones, bad), doctest::Contains("[1x2x4x4]"), ShapeError);
}

TEST_CASE("grad of mul wrt a equals b (finite differences)") {
  const Tensor<double> b = random_tensor(Shape{1, 2, 3, 3}, 11);
  auto f = [&](Tape<double>& t, Var<double> x) { return mul(x, t.constant(b)); };
  const auto report = grad_check(f, random_tensor(Shape{1, 2, 3, 3}, 12), 1e-5, 1e-4, 5);
  CHECK_MESSAGE(report.passed(), report.summary());

  Tape<double> tape;
  auto x = tape.leaf(random_tensor(Shape{1, 2, 3, 3}, 12));
  tape.backward(sum_all(mul(x, tape.constant(b))));
  CHECK(testing::max_abs_diff(x.grad(), b) == 0.0);
}

TEST_CASE("broadcast gradients sum over singleton axes") {
  const Tensor<double> a = random_tensor(Shape{2, 3, 4, 4}, 3);
  auto f_spatial = [&](Tape<double>& t, Var<double> w) { return mul(t.constant(a), w); };
  CHECK(grad_check(f_spatial, random_tensor(Shape{2, 1, 4, 4}, 4), 1e-5, 1e-4, 20).passed());
  CHECK(grad_check(f_spatial, random_tensor(Shape{2, 3, 1, 1}, 5), 1e-5, 1e-4, 20).passed());
  auto f_sub = [&](Tape<double>& t, Var<double> w) { return sub(t.constant(a), w); };
  CHECK(grad_check(f_sub, random_tensor(Shape{2, 3, 1, 1}, 6), 1e-5, 1e-4, 20).passed());
}

TEST_CASE("concat and slice") {
  Tape<double> tape;
  const auto ta = random_tensor(Shape{1, 2, 2, 2}, 1);
  const auto tb = random_tensor(Shape{1, 2, 2, 2}, 2);
  auto a = tape.leaf(ta), b = tape.leaf(tb);
  auto c = concat_channels<double>({a, b});
  CHECK(c.shape() == Shape({1, 4, 2, 2}));
  CHECK(testing::max_abs_diff(slice_channels(c, 0, 2).value(), ta) == 0.0);
  CHECK(testing::max_abs_diff(slice_channels(c, 2, 4).value(), tb) == 0.0);

  tape.backward(sum_all(c));
  for (double v : a.grad().data()) CHECK(v == 1.0);
  for (double v : b.grad().data()) CHECK(v == 1.0);

  Tape<double> t2;
  auto wrong = t2.leaf(Tensor<double>(Shape{1, 1, 3, 2}));
  CHECK_THROWS_AS(concat_channels<double>({t2.leaf(ta), wrong}), ShapeError);
}

TEST_CASE("concat gradient matches finite differences") {
  const auto other = random_tensor(Shape{2, 1, 3, 3}, 9);
  auto f = [&](Tape<double>& t, Var<double> x) { return concat_channels<double>({x, t.constant(other), x}); };
  CHECK(grad_check(f, random_tensor(Shape{2, 2, 3, 3}, 10), 1e-5, 1e-4, 36).passed());
}

TEST_CASE("slice then concat is the identity, bit-exactly") {
  const auto x = random_tensor<float>(Shape{3, 5, 4, 2}, 21);
  const auto left = slice_channels(x, 0, 2);
  const auto right = slice_channels(x, 2, 5);
  const auto joined = concat_channels(std::vector<const Tensor<float>*>{&left, &right});
  CHECK(joined.shape() == x.shape());
  CHECK(std::equal(joined.data().begin(), joined.data().end(), x.data().begin()));
}

TEST_CASE("reductions") {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>(Shape{2, 2}, std::vector<double>{1, 3, 5, 7}));
  CHECK(mean_all(x).value()[0] == 4.0);

  Tensor<double> delta(Shape{1, 1, 5, 5});
  delta.at(0, 0, 2, 3) = 2.5;
  auto d = tape.leaf(delta);
  CHECK(reduce(ReduceKind::kMax, d, {2, 3}).value()[0] == 2.5);
  CHECK_THROWS_AS(reduce(ReduceKind::kSum, d, {4}), ShapeError);
}

TEST_CASE("reduce gradients") {
  for (auto kind : {ReduceKind::kMean, ReduceKind::kSum, ReduceKind::kMax}) {
    auto f = [&](Tape<double>&, Var<double> x) { return reduce(kind, x, {1, 3}); };
    const auto r = grad_check(f, random_tensor(Shape{2, 3, 4, 5}, 31), 1e-6, 1e-4, 30);
    CHECK_MESSAGE(r.passed(), r.summary());
  }
  Tape<double> tape;
  auto x = tape.leaf(random_tensor(Shape{1, 2, 3, 3}, 4));
  tape.backward(mean_all(x));
  for (double v : x.grad().data()) CHECK(v == doctest::Approx(1.0 / 18.0).epsilon(1e-15));
}

TEST_CASE("max reduce breaks ties toward the first element") {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>(Shape{1, 4}, std::vector<double>{1, 3, 3, 0}));
  tape.backward(reduce(ReduceKind::kMax, x, {1}));
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("backward contract") {
  SUBCASE("sum gives ones, half sum of squares gives x") {
    Tape<double> tape;
    const auto xv = random_tensor(Shape{3, 4}, 5);
    auto x = tape.leaf(xv);
    auto l = scale(sum_squares(x), 0.5);
    tape.backward(l);
    CHECK(testing::max_abs_diff(x.grad(), xv) < 1e-15);

    Tape<double> t2;
    auto y = t2.leaf(xv);
    t2.backward(sum_all(y));
    for (double v : y.grad().data()) CHECK(v == 1.0);
  }
  SUBCASE("non-scalar loss and repeated backward are errors") {
    Tape<double> tape;
    auto x = tape.leaf(random_tensor(Shape{3}, 1));
    CHECK_THROWS_AS(tape.backward(x), Error);
    auto l = sum_all(x);
    tape.backward(l);
    CHECK_THROWS_AS(tape.backward(l), Error);
  }
  SUBCASE("loss from another tape is rejected") {
    Tape<double> t1, t2;
    auto l = sum_all(t1.leaf(random_tensor(Shape{3}, 1)));
    CHECK_THROWS_AS(t2.backward(l), Error);
  }
  SUBCASE("parameter gradients must be reset between steps") {
    Parameter<double> p{"w", random_tensor(Shape{4}, 2), {}, false};
    {
      Tape<double> tape;
      tape.backward(sum_all(tape.param(p)));
    }
    CHECK(p.has_grad);
    Tape<double> tape;
    auto l = sum_all(tape.param(p));
    CHECK_THROWS_WITH(tape.backward(l), doctest::Contains("'w'"));
    p.zero_grad();
    Tape<double> t3;
    t3.backward(sum_all(t3.param(p)));
    for (double v : p.grad.data()) CHECK(v == 1.0);
  }
}

TEST_CASE("fan-out gradients accumulate exactly") {
  Tape<double> tape;
  const auto xv = random_tensor(Shape{2, 3}, 8);
  auto x = tape.leaf(xv);
  auto f = sum_squares(x);        // grad 2x
  auto g = sum_all(scale(x, 3.0));  // grad 3
  tape.backward(add(f, g));
  for (int64_t i = 0; i < xv.numel(); ++i) CHECK(x.grad()[i] == 2.0 * xv[i] + 3.0);
}

TEST_CASE("grad_check harness") {
  auto identity = [](Tape<double>&, Var<double> x) { return x; };
  const auto r = grad_check(identity, random_tensor(Shape{1, 1, 4, 4}, 3), 1e-4, 1e-9, 16);
  CHECK(r.passed());
  CHECK(r.max_rel_error < 1e-9);

  auto th = [](Tape<double>&, Var<double> x) { return sum_all(dcanet::sqrt(add_scalar(sum_squares(x), 1.0))); };
  CHECK(grad_check(th, random_tensor(Shape{5}, 4), 1e-5, 1e-5).passed());
  CHECK_THROWS_AS(grad_check(identity, random_tensor(Shape{2}, 1), 1e-1, 1e-4), Error);
}

TEST_CASE("central differences skip kinks inside the stencil") {
  // L(v) = sum |v_i| + 0.5 v_i^2; coordinates 0 and 1 sit within the step of the kink.
  std::vector<double> v = {3e-7, -6e-7, 0.4, -0.7, 1.3, -0.2, 0.9};
  auto loss = [&] {
    double s = 0.0;
    for (double x : v) s += std::abs(x) + 0.5 * x * x;
    return s;
  };
  std::vector<double> grad;
  for (double x : v) grad.push_back((x > 0 ? 1.0 : -1.0) + x);

  const auto ok = central_difference_check(loss, v, grad, 5, 11, 1e-6, 1e-6);
  CHECK(ok.passed());
  CHECK(ok.entries.size() == 5);
  for (const auto& e : ok.entries) CHECK(e.index >= 2);

  auto wrong = grad;
  wrong[4] *= 1.01;
  CHECK_FALSE(central_difference_check(loss, v, wrong, 7, 11, 1e-6, 1e-6).passed());

  // Too few smooth coordinates to fill the request is a failure, not a pass.
  const auto short_of = central_difference_check(loss, v, grad, 7, 11, 1e-6, 1e-6);
  CHECK_FALSE(short_of.passed());
  CHECK(short_of.kinks == 2);
  CHECK(short_of.entries.size() == 5);
  CHECK(v[0] == 3e-7);
}

TEST_CASE("curvature is not mistaken for a kink") {
  std::vector<double> v = {0.3, -1.1, 2.0};
  auto loss = [&] { return std::exp(v[0]) + std::cosh(3.0 * v[1]) + v[2] * v[2] * v[2]; };
  const std::vector<double> grad = {std::exp(0.3), 3.0 * std::sinh(-3.3), 12.0};
  const auto r = central_difference_check(loss, v, grad, 3, 1, 1e-3, 1e-5);
  CHECK(r.passed());
  CHECK(r.kinks == 0);
}
