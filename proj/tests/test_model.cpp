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
#include <map>

#include "dcanet/losses.hpp"
#include "dcanet/model.hpp"
#include "test_util.hpp"

using namespace dcanet;
using dcanet::testing::max_abs_diff;
using dcanet::testing::parameter_grad_check;
using dcanet::testing::random_tensor;

namespace {

// Independent parameter arithmetic for the documented layout.
int64_t conv_p(int64_t in, int64_t out, int64_t k) { return out * in * k * k + out; }
int64_t bn_p(int64_t c) { return 2 * c; }

int64_t expected_params(int c, Variant v) {
  const int64_t w = 64;
  const int64_t block = conv_p(w, w, 3) + bn_p(w);
  const int64_t estimator = conv_p(c, w, 3) + 5 * block + conv_p(w, c, 3);
  const int64_t head = conv_p(2 * c, w, 3);
  const int64_t sam = conv_p(2, 1, 7) + bn_p(1);
  const int64_t cam = conv_p(w, w / 8, 1) + conv_p(w / 8, w, 1);
  const int64_t attention_core = 2 * conv_p(w, w, 3) + 1;
  const int64_t upper = 12 * block + conv_p(w, c, 3);
  const int64_t lower = 16 * block + conv_p(w, c, 3);
  switch (v) {
    case Variant::kNoScam:
      return estimator + head + upper + lower + conv_p(2 * c, c, 3);
    case Variant::kNoSam:
      return estimator + head + attention_core + cam + conv_p(w, w, 3) + upper + lower + conv_p(2 * c, c, 3);
    case Variant::kNoCam:
      return estimator + head + attention_core + sam + conv_p(w, w, 3) + upper + lower + conv_p(2 * c, c, 3);
    case Variant::kSerialSamCam:
    case Variant::kSerialCamSam:
      return estimator + head + attention_core + sam + cam + conv_p(w, w, 3) + upper + lower + conv_p(2 * c, c, 3);
    case Variant::kUpperOnly:
      return estimator + head + attention_core + sam + cam + conv_p(2 * w, w, 3) + upper + conv_p(c, c, 3);
    case Variant::kLowerOnly:
      return estimator + head + attention_core + sam + cam + conv_p(2 * w, w, 3) + lower + conv_p(c, c, 3);
    default:
      return estimator + head + attention_core + sam + cam + conv_p(2 * w, w, 3) + upper + lower +
             conv_p(2 * c, c, 3);
  }
}

template <typename T>
int64_t param_count(const Model<T>& m) {
  int64_t n = 0;
  m.for_each_parameter([&](const Parameter<T>& p) { n += p.value.numel(); });
  return n;
}

template <typename T>
void zero_conv(Conv2dParams<T>& c) {
  c.weight.value.fill(T(0));
  c.bias.value.fill(T(0));
}

ModelConfig small_config(int c = 1, Variant v = Variant::kFull) {
  ModelConfig cfg;
  cfg.in_channels = c;
  cfg.width = 8;
  cfg.cam_reduction = 4;
  cfg.variant = v;
  return cfg;
}

}  // namespace

TEST_CASE("parameter counts follow the layer arithmetic") {
  for (int c : {1, 3}) {
    for (Variant v : all_variants()) {
      ModelConfig cfg;
      cfg.in_channels = c;
      cfg.variant = v;
      const Model<float> m(cfg);
      CAPTURE(variant_name(v));
      CHECK(param_count(m) == expected_params(c, v));
      int64_t from_inventory = 0;
      for (const auto& l : m.inventory()) from_inventory += l.params;
      CHECK(from_inventory == param_count(m));
    }
  }
  const Model<float> gray(ModelConfig{});
  CHECK(param_count(gray) == 1375300);
  CHECK(std::abs(param_count(gray) - 1382000.0) <= 138200.0);
  ModelConfig color_cfg;
  color_cfg.in_channels = 3;
  CHECK(std::abs(param_count(Model<float>(color_cfg)) - 1389000.0) <= 138900.0);
}

TEST_CASE("skip-rewiring variants keep the parameter count; layer removal lowers it") {
  const int64_t full = param_count(Model<float>(ModelConfig{}));
  for (Variant v : all_variants()) {
    ModelConfig cfg;
    cfg.variant = v;
    const int64_t n = param_count(Model<float>(cfg));
    CAPTURE(variant_name(v));
    if (v == Variant::kFull || v == Variant::kNoShortSkip || v == Variant::kNoLongSkip) {
      CHECK(n == full);
    } else {
      CHECK(n < full);
    }
  }
}

TEST_CASE("variant names round-trip") {
  for (Variant v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("bogus"), Error);
}

TEST_CASE("build_model is deterministic per seed and consistent across precisions") {
  const auto cfg = small_config();
  const auto a = build_model<float>(cfg, 5), b = build_model<float>(cfg, 5), c = build_model<float>(cfg, 6);
  std::vector<float> va, vb, vc;
  a.for_each_parameter([&](const Parameter<float>& p) { va.insert(va.end(), p.value.data().begin(), p.value.data().end()); });
  b.for_each_parameter([&](const Parameter<float>& p) { vb.insert(vb.end(), p.value.data().begin(), p.value.data().end()); });
  c.for_each_parameter([&](const Parameter<float>& p) { vc.insert(vc.end(), p.value.data().begin(), p.value.data().end()); });
  CHECK(va == vb);
  CHECK(va != vc);

  const auto d = build_model<double>(cfg, 5);
  std::vector<double> vd;
  d.for_each_parameter([&](const Parameter<double>& p) { vd.insert(vd.end(), p.value.data().begin(), p.value.data().end()); });
  REQUIRE(vd.size() == va.size());
  for (size_t i = 0; i < va.size(); ++i) CHECK(static_cast<float>(vd[i]) == va[i]);

  const auto e = a.cast<double>();
  std::vector<double> ve;
  e.for_each_parameter([&](const Parameter<double>& p) { ve.insert(ve.end(), p.value.data().begin(), p.value.data().end()); });
  for (size_t i = 0; i < va.size(); ++i) CHECK(ve[i] == static_cast<double>(va[i]));
}

TEST_CASE("He-uniform bounds, zero biases, unit BN scale") {
  auto m = build_model<float>(ModelConfig{}, 1);
  m.for_each_parameter([](const Parameter<float>& p) {
    const Shape& s = p.value.shape();
    if (s.rank() == 4) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s[1] * s[2] * s[3]));
      for (float v : p.value.data()) CHECK(std::abs(v) <= bound);
    } else if (p.name.ends_with(".bias") || p.name.ends_with(".beta")) {
      for (float v : p.value.data()) CHECK(v == 0.0f);
    } else if (p.name.ends_with(".gamma")) {
      for (float v : p.value.data()) CHECK(v == 1.0f);
    } else {
      CHECK(p.name == "attention.prelu.slope");
      CHECK(p.value[0] == 0.25f);
    }
  });
}

TEST_CASE("parameter and buffer names are unique") {
  const Model<float> m(ModelConfig{});
  std::map<std::string, int> seen;
  m.for_each_parameter([&](const Parameter<float>& p) { ++seen[p.name]; });
  m.for_each_buffer([&](const std::string& n, const Tensor<float>&) { ++seen[n]; });
  for (const auto& [name, count] : seen) CHECK_MESSAGE(count == 1, name);
  // 7 + 1 + 6 + 13 + 17 + 1 convs, 5 + 1 + 12 + 16 BNs, one PReLU slope
  CHECK(seen.size() == 45 * 2 + 34 * 2 + 1 + 34 * 2);
}

TEST_CASE("noise estimator") {
  auto m = build_model<float>(small_config(), 3);
  Tape<float> tape;
  auto y = tape.leaf(random_tensor<float>(Shape{2, 1, 9, 11}, 1, -5.0, 5.0));
  const auto out = m.estimate_noise(tape, y, BnMode::kTrain).value();
  CHECK(out.shape() == y.shape());
  for (float v : out.data()) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }
  for (auto& c : m.estimator().convs) zero_conv(c);
  Tape<float> t2;
  for (float v : m.estimate_noise(t2, t2.leaf(random_tensor<float>(Shape{1, 1, 6, 6}, 2)), BnMode::kTrain).value().data()) {
    CHECK(v == 0.0f);
  }
}

TEST_CASE("gradient reaches the first estimator layer") {
  auto m = build_model<double>(small_config(), 4);
  const auto yv = random_tensor(Shape{1, 1, 8, 8}, 5);
  auto loss = [&](Tape<double>& tape) {
    m.zero_grad();
    return sum_squares(m.estimate_noise(tape, tape.constant(yv), BnMode::kTrain));
  };
  const auto r = parameter_grad_check(loss, m.estimator().convs[0].weight, 9, 1e-6, 1e-3);
  CHECK_MESSAGE(r.passed(), r.summary());
}

TEST_CASE("attention module") {
  SUBCASE("zero fusion conv leaves the residual input") {
    auto m = build_model<float>(small_config(), 7);
    zero_conv(m.attention().fuse);
    Tape<float> tape;
    const auto xv = random_tensor<float>(Shape{1, 8, 6, 6}, 8);
    const auto out = m.attention().forward(tape, tape.leaf(xv), BnMode::kTrain, m.config()).value();
    CHECK(max_abs_diff(out, xv) == 0.0);
  }
  SUBCASE("zeroed channel attention halves its input") {
    auto m = build_model<float>(small_config(), 7);
    zero_conv(m.attention().cam_down);
    zero_conv(m.attention().cam_up);
    Tape<float> tape;
    const auto xv = random_tensor<float>(Shape{2, 8, 5, 5}, 9);
    const auto out = m.attention().channel_attention(tape, tape.leaf(xv)).value();
    for (int64_t i = 0; i < xv.numel(); ++i) CHECK(out[i] == 0.5f * xv[i]);
  }
  SUBCASE("every variant preserves the feature shape") {
    for (Variant v : all_variants()) {
      ModelConfig cfg;
      cfg.variant = v;
      if (!cfg.has_scam()) continue;
      auto m = build_model<float>(cfg, 1);
      Tape<float> tape;
      auto out = m.attention().forward(tape, tape.leaf(random_tensor<float>(Shape{1, 64, 8, 8}, 2)), BnMode::kTrain, cfg);
      CHECK(out.shape() == Shape({1, 64, 8, 8}));
    }
  }
}

TEST_CASE("upper branch") {
  auto m = build_model<float>(small_config(), 11);
  for (int64_t size : {16, 20, 17, 10, 4, 7}) {
    Tape<float> tape;
    auto out = m.upper().forward(tape, tape.leaf(random_tensor<float>(Shape{1, 8, size, size + 1}, 1)),
                                 BnMode::kTrain, true);
    CHECK(out.shape() == Shape({1, 1, size, size + 1}));
  }
  Tape<float> tape;
  CHECK_THROWS_AS(m.upper().forward(tape, tape.leaf(Tensor<float>(Shape{1, 8, 3, 8})), BnMode::kTrain, true),
                  ShapeError);
  zero_conv(m.upper().proj);
  Tape<float> t2;
  for (float v : m.upper().forward(t2, t2.leaf(random_tensor<float>(Shape{1, 8, 16, 16}, 1)), BnMode::kTrain, true)
                     .value()
                     .data()) {
    CHECK(v == 0.0f);
  }
}

TEST_CASE("lower branch") {
  auto m = build_model<float>(ModelConfig{}, 12);
  CHECK(m.lower().rates() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 7, 6, 5, 4, 3, 2, 1, 1});
  Tape<float> tape;
  Var<float> h = tape.leaf(random_tensor<float>(Shape{1, 64, 32, 32}, 3));
  for (auto& layer : m.lower().layers) {
    h = layer.forward(tape, h, BnMode::kTrain);
    CHECK(h.shape() == Shape({1, 64, 32, 32}));
  }
  zero_conv(m.lower().proj);
  Tape<float> t2;
  for (float v : m.lower().forward(t2, t2.leaf(random_tensor<float>(Shape{1, 64, 12, 12}, 1)), BnMode::kTrain, true)
                     .value()
                     .data()) {
    CHECK(v == 0.0f);
  }
  ModelConfig bad;
  bad.lower_rates.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("lower branch skips add the stored layer inputs") {
  auto m = build_model<double>(small_config(), 13);
  // Zero layer 13 so its output is relu(beta) = 0; the skip then carries layer 3's input.
  auto& l13 = m.lower().layers[12];
  zero_conv(l13.conv);
  Tape<double> tape;
  auto x = tape.leaf(random_tensor(Shape{1, 8, 7, 7}, 4));
  std::vector<Var<double>> inputs;
  Var<double> h = x;
  for (size_t i = 0; i < 16; ++i) {
    inputs.push_back(h);
    h = m.lower().layers[i].forward(tape, h, BnMode::kEval);
    if (i == 10) h = add(h, inputs[4]);
    if (i == 12) {
      CHECK(max_abs_diff(add(h, inputs[2]).value(), inputs[2].value()) == 0.0);
      h = add(h, inputs[2]);
    }
  }
  Tape<double> t2;
  const auto features = m.lower().features(t2, t2.leaf(x.value()), BnMode::kEval, true).value();
  CHECK(max_abs_diff(features, h.value()) == 0.0);
  Tape<double> t3;
  const auto plain = m.lower().features(t3, t3.leaf(x.value()), BnMode::kEval, false).value();
  CHECK(max_abs_diff(plain, h.value()) > 0.0);
}

TEST_CASE("full model shapes") {
  for (auto [c, s] : {std::pair{3, 24}, std::pair{1, 17}}) {
    ModelConfig cfg;
    cfg.in_channels = c;
    auto m = build_model<float>(cfg, 1);
    Tape<float> tape;
    auto r = m.forward(tape, tape.leaf(random_tensor<float>(Shape{1, c, s, s}, 2)), BnMode::kTrain);
    CHECK(r.denoised.shape() == Shape({1, c, s, s}));
    CHECK(r.noise_map.shape() == Shape({1, c, s, s}));
  }
  auto gray = build_model<float>(ModelConfig{}, 1);
  Tape<float> tape;
  CHECK_THROWS_AS(gray.forward(tape, tape.leaf(Tensor<float>(Shape{1, 3, 16, 16})), BnMode::kEval), ShapeError);
}

TEST_CASE("global residual identities") {
  const auto yv = random_tensor<float>(Shape{2, 1, 12, 12}, 21);
  SUBCASE("all conv weights zero") {
    auto m = build_model<float>(ModelConfig{}, 1);
    m.for_each_parameter([](Parameter<float>& p) {
      if (p.value.shape().rank() == 4) p.value.fill(0.0f);
    });
    Tape<float> tape;
    CHECK(max_abs_diff(m.forward(tape, tape.leaf(yv), BnMode::kTrain).denoised.value(), yv) == 0.0);
  }
  SUBCASE("final fusion conv zero") {
    auto m = build_model<float>(ModelConfig{}, 2);
    zero_conv(m.tail());
    Tape<float> tape;
    CHECK(max_abs_diff(m.forward(tape, tape.leaf(yv), BnMode::kTrain).denoised.value(), yv) == 0.0);
  }
}

TEST_CASE("full forward plus MSE passes the gradient check (reduced width)") {
  auto m = build_model<double>(small_config(), 31);
  const auto yv = random_tensor(Shape{1, 1, 16, 16}, 32, 0.0, 1.0);
  const auto xv = random_tensor(Shape{1, 1, 16, 16}, 33, 0.0, 1.0);
  auto f = [&](Tape<double>& t, Var<double> y) {
    m.zero_grad();
    return mse_loss(m.forward(t, y, BnMode::kTrain).denoised, t.constant(xv));
  };
  const auto r = grad_check(f, yv, 1e-6, 1e-3, 12);
  CHECK_MESSAGE(r.passed(), r.summary());
  auto loss = [&](Tape<double>& t) {
    m.zero_grad();
    return mse_loss(m.forward(t, t.constant(yv), BnMode::kTrain).denoised, t.constant(xv));
  };
  for (auto* p : {&m.head().weight, &m.attention().slope, &m.lower().layers[7].conv.weight, &m.upper().blocks[5].bn.gamma}) {
    const auto rp = parameter_grad_check(loss, *p, 6, 1e-6, 1e-3);
    CHECK_MESSAGE(rp.passed(), p->name, ": ", rp.summary());
  }
}

TEST_CASE("all ten variants run forward and backward on 1x1x16x16") {
  const auto yv = random_tensor<float>(Shape{1, 1, 16, 16}, 41, 0.0, 1.0);
  for (Variant v : all_variants()) {
    CAPTURE(variant_name(v));
    ModelConfig cfg;
    cfg.variant = v;
    auto m = build_model<float>(cfg, 1);
    Tape<float> tape;
    auto r = m.forward(tape, tape.leaf(yv), BnMode::kTrain);
    CHECK(r.denoised.shape() == yv.shape());
    tape.backward(mse_loss(r.denoised, tape.constant(yv)));
    int with_grad = 0, total = 0;
    m.for_each_parameter([&](const Parameter<float>& p) {
      ++total;
      with_grad += p.has_grad;
      CHECK(p.grad.all_finite());
    });
    CHECK(with_grad == total);
  }
}

TEST_CASE("no_long_skip drops the final residual") {
  ModelConfig cfg = small_config(1, Variant::kNoLongSkip);
  auto m = build_model<float>(cfg, 3);
  zero_conv(m.tail());
  Tape<float> tape;
  for (float v : m.forward(tape, tape.leaf(random_tensor<float>(Shape{1, 1, 8, 8}, 1)), BnMode::kEval).denoised.value().data()) {
    CHECK(v == 0.0f);
  }
}

TEST_CASE("inventory") {
  ModelConfig cfg;
  cfg.variant = Variant::kLowerOnly;
  const Model<float> lower_only(cfg);
  for (const auto& l : lower_only.inventory()) CHECK(!l.name.starts_with("upper"));
  const auto full = Model<float>(ModelConfig{}).inventory();
  int convs = 0, level2 = 0;
  for (const auto& l : full) {
    convs += l.kind == LayerKind::kConv;
    level2 += l.kind == LayerKind::kConv && l.pool_level == 2;
  }
  CHECK(convs == 45);
  CHECK(level2 == 4);
}
