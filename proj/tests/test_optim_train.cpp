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
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dcanet/checkpoint.hpp"
#include "dcanet/train.hpp"

using namespace dcanet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("dcanet_train_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Parameter<float> scalar_param(float value, float grad) {
  Parameter<float> p;
  p.name = "w";
  p.value = Tensor<float>(Shape{1}, value);
  p.grad = Tensor<float>(Shape{1}, grad);
  p.has_grad = true;
  return p;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.width = 8;
  return cfg;
}

TrainingData small_data() {
  TrainingData d;
  for (uint64_t s = 0; s < 3; ++s) d.clean.push_back(synthetic_image(24, 24, 1, s));
  return d;
}

TrainConfig small_train(int64_t iters) {
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.patch = 16;
  cfg.iters = iters;
  cfg.sigma_min = cfg.sigma_max = 25.0;
  cfg.seed = 5;
  cfg.log_every = 0;
  cfg.schedule = step_halving_schedule(1e-3, 4);
  return cfg;
}

std::vector<float> flat_params(const Model<float>& m) {
  std::vector<float> out;
  m.for_each_parameter([&](const Parameter<float>& p) { out.insert(out.end(), p.value.data().begin(), p.value.data().end()); });
  m.for_each_buffer([&](const std::string&, const Tensor<float>& t) { out.insert(out.end(), t.data().begin(), t.data().end()); });
  return out;
}

}  // namespace

TEST_CASE("first Adam step moves by lr against the gradient sign") {
  Adam adam;
  auto p = scalar_param(0.0f, 1.0f);
  adam.begin_step();
  adam.step(p, 1e-4);
  CHECK(p.value[0] == doctest::Approx(-1e-4).epsilon(1e-6));

  auto q = scalar_param(0.5f, 0.0f);
  Adam other;
  other.begin_step();
  other.step(q, 1e-4);
  CHECK(q.value[0] == 0.5f);

  Parameter<float> bare;
  bare.name = "bare";
  bare.value = Tensor<float>(Shape{1}, 1.0f);
  CHECK_THROWS_WITH_AS(other.step(bare, 1e-4), doctest::Contains("bare"), Error);
}

TEST_CASE("Adam is invariant to gradient scale and deterministic") {
  auto run = [](float scale) {
    Adam adam;
    auto p = scalar_param(1.0f, 0.0f);
    std::vector<float> trace;
    for (int i = 0; i < 10; ++i) {
      p.grad[0] = scale * std::sin(static_cast<float>(i) + 1.0f);
      adam.begin_step();
      adam.step(p, 1e-2);
      trace.push_back(p.value[0]);
    }
    return trace;
  };
  const auto a = run(1.0f), b = run(1.0f), c = run(10.0f);
  CHECK(a == b);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(c[i]).epsilon(1e-5));
}

TEST_CASE("learning rate schedules") {
  const auto halving = step_halving_schedule();
  CHECK(lr_at(halving, 0) == 1e-4);
  CHECK(lr_at(halving, 99999) == 1e-4);
  CHECK(lr_at(halving, 100000) == 5e-5);
  CHECK(lr_at(halving, 250000) == 2.5e-5);
  CHECK_THROWS_AS(lr_at(halving, -1), Error);

  const auto cosine = cosine_schedule(120);
  CHECK(lr_at(cosine, 0) == doctest::Approx(2e-4));
  CHECK(lr_at(cosine, 60) == doctest::Approx((2e-4 + 1e-6) / 2));
  CHECK(lr_at(cosine, 120) == doctest::Approx(1e-6));
  CHECK(lr_at(cosine, 500) == doctest::Approx(1e-6));
  double prev = 1.0;
  for (int e = 0; e <= 130; ++e) {
    const double lr = lr_at(cosine, e);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("checkpoint round trip is byte identical") {
  auto model = build_model<float>(small_config(), 3);
  Adam adam;
  Tape<float> tape;
  auto out = model.forward(tape, tape.constant(to_tensor(synthetic_image(8, 8, 1, 1))), BnMode::kTrain);
  tape.backward(mean_all(out.denoised));
  adam.step(model, 1e-3);

  const auto tensors = checkpoint_tensors(model, &adam, 7);
  const auto bytes = encode_checkpoint(tensors);
  const auto state = restore_checkpoint(decode_checkpoint(bytes));
  REQUIRE(state.adam.has_value());
  CHECK(state.step == 7);
  CHECK(state.adam->t() == 1);
  CHECK(encode_checkpoint(checkpoint_tensors(state.model, &*state.adam, state.step)) == bytes);

  const auto path = (scratch_dir() / "rt.dcan").string();
  save_checkpoint(path, model, &adam, 7);
  const auto loaded = load_checkpoint(path);
  CHECK(flat_params(loaded.model) == flat_params(model));

  // without optimizer state
  const auto plain = restore_checkpoint(checkpoint_tensors(model, nullptr, 0));
  CHECK_FALSE(plain.adam.has_value());
}

TEST_CASE("checkpoint tensor count follows the layer inventory") {
  const auto model = build_model<float>(ModelConfig{}, 1);
  int64_t convs = 0, bns = 0, prelus = 0;
  for (const auto& l : model.inventory()) {
    convs += l.kind == LayerKind::kConv;
    bns += l.kind == LayerKind::kBatchNorm;
    prelus += l.kind == LayerKind::kPrelu;
  }
  // weight + bias per conv; gamma, beta, running mean and variance per BN;
  // one PReLU slope; config echo and step counter
  const int64_t expected = convs * 2 + bns * 4 + prelus + 2;
  CHECK(static_cast<int64_t>(checkpoint_tensors(model, nullptr, 0).size()) == expected);
  Adam adam;
  int64_t params = 0;
  model.for_each_parameter([&](const Parameter<float>&) { ++params; });
  // Adam adds t plus m and v per parameter, zeros for a fresh optimizer
  CHECK(static_cast<int64_t>(checkpoint_tensors(model, &adam, 0).size()) == expected + 1 + 2 * params);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto model = build_model<float>(small_config(), 2);
  auto bytes = encode_checkpoint(checkpoint_tensors(model, nullptr, 0));

  SUBCASE("flipped byte") {
    bytes[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(decode_checkpoint(bytes), CheckpointHashError);
  }
  SUBCASE("wrong magic") {
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bytes), CheckpointError);
  }
  SUBCASE("truncated") {
    bytes.resize(bytes.size() - 9);
    CHECK_THROWS_AS(decode_checkpoint(bytes), CheckpointError);
  }
  SUBCASE("future version") {
    const auto v2 = encode_checkpoint(checkpoint_tensors(model, nullptr, 0), 2);
    CHECK_THROWS_AS(decode_checkpoint(v2), CheckpointVersionError);
  }
  SUBCASE("unknown tensor name") {
    auto tensors = checkpoint_tensors(model, nullptr, 0);
    tensors.emplace_back("mystery.weight", Tensor<float>(Shape{1}));
    CHECK_THROWS_WITH_AS(restore_checkpoint(decode_checkpoint(encode_checkpoint(tensors))),
                         doctest::Contains("mystery.weight"), CheckpointNameError);
  }
  SUBCASE("missing tensor") {
    auto tensors = checkpoint_tensors(model, nullptr, 0);
    tensors.erase(tensors.begin() + 4);
    CHECK_THROWS_AS(restore_checkpoint(tensors), CheckpointNameError);
  }
  SUBCASE("wrong shape") {
    auto tensors = checkpoint_tensors(model, nullptr, 0);
    tensors[4].second = Tensor<float>(Shape{3});
    CHECK_THROWS_AS(restore_checkpoint(tensors), CheckpointError);
  }
}

TEST_CASE("model config survives encoding") {
  ModelConfig cfg;
  cfg.in_channels = 3;
  cfg.variant = Variant::kSerialCamSam;
  cfg.lower_rates[3] = 5;
  const auto back = decode_config(encode_config(cfg));
  CHECK(back.in_channels == 3);
  CHECK(back.variant == Variant::kSerialCamSam);
  CHECK(back.lower_rates == cfg.lower_rates);
  CHECK(back.upper_blocks == cfg.upper_blocks);
}

TEST_CASE("batches depend only on seed and iteration") {
  const auto data = small_data();
  const auto cfg = small_train(1);
  const auto a = sample_batch(data, cfg, 3), b = sample_batch(data, cfg, 3), c = sample_batch(data, cfg, 4);
  CHECK(a.noisy.shape() == Shape({2, 1, 16, 16}));
  CHECK(std::ranges::equal(a.noisy.data(), b.noisy.data()));
  CHECK_FALSE(std::ranges::equal(a.clean.data(), c.clean.data()));
  auto too_big = cfg;
  too_big.patch = 40;
  CHECK_THROWS_AS(sample_batch(data, too_big, 0), Error);
}

TEST_CASE("resumed training matches an uninterrupted run") {
  const auto data = small_data();
  const auto cfg = small_train(6);
  const auto dir = scratch_dir() / "resume";

  auto straight = build_model<float>(small_config(), 9);
  Adam adam_straight;
  const auto full = train_loop(straight, adam_straight, data, cfg);
  REQUIRE(full.size() == 6);

  auto first = build_model<float>(small_config(), 9);
  Adam adam_first;
  auto half = cfg;
  half.iters = 3;
  train_loop(first, adam_first, data, half);
  const auto path = (dir.parent_path() / "resume.dcan").string();
  save_checkpoint(path, first, &adam_first, 3);

  auto state = load_checkpoint(path);
  REQUIRE(state.adam.has_value());
  const auto rest = train_loop(state.model, *state.adam, data, cfg, state.step);
  REQUIRE(rest.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(rest[i].iter == full[i + 3].iter);
    CHECK(rest[i].loss == full[i + 3].loss);
  }
  CHECK(flat_params(state.model) == flat_params(straight));
}

TEST_CASE("training lowers the loss and writes logs and checkpoints") {
  const auto data = small_data();
  auto cfg = small_train(40);
  cfg.schedule = step_halving_schedule(2e-3, 1000);
  cfg.log_every = 10;
  cfg.checkpoint_every = 20;
  const auto dir = scratch_dir() / "run";
  fs::remove_all(dir);
  cfg.checkpoint_dir = dir.string();
  cfg.log_path = (scratch_dir() / "run.log").string();
  fs::remove(cfg.log_path);

  auto model = build_model<float>(small_config(), 4);
  Adam adam;
  int logged = 0;
  const auto history = train_loop(model, adam, data, cfg, 0, {[&](const TrainLogEntry&) { ++logged; }});
  double early = 0, late = 0;
  for (int i = 0; i < 5; ++i) {
    early += history[static_cast<size_t>(i)].loss;
    late += history[history.size() - 1 - static_cast<size_t>(i)].loss;
  }
  CHECK(late < early);
  CHECK(logged == 4);
  CHECK(fs::exists(dir / "iter20.dcan"));
  CHECK(fs::exists(dir / "iter40.dcan"));
  std::ifstream log(cfg.log_path);
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("non-finite loss stops training with a diagnostic checkpoint") {
  auto data = small_data();
  data.clean[0].pixels[0] = std::nanf("");
  data.clean[1].pixels[0] = std::nanf("");
  data.clean[2].pixels[0] = std::nanf("");
  auto cfg = small_train(3);
  cfg.patch = 24;
  const auto dir = scratch_dir() / "nan";
  cfg.checkpoint_dir = dir.string();
  auto model = build_model<float>(small_config(), 4);
  Adam adam;
  CHECK_THROWS_WITH_AS(train_loop(model, adam, data, cfg), doctest::Contains("non-finite"), TrainingError);
  CHECK(fs::exists(dir / "nonfinite_iter1.dcan"));
}

TEST_CASE("identity start zeroes only the tail weights") {
  ModelConfig mc;
  mc.width = 8;
  TrainConfig cfg;
  cfg.seed = 4;
  const auto plain = build_training_model(mc, cfg);
  const auto reference = build_model<float>(mc, 4);
  CHECK(std::ranges::equal(plain.cast<float>().tail().weight.value.data(),
                           reference.cast<float>().tail().weight.value.data()));

  cfg.zero_init_tail = true;
  CHECK(desk_train_config().zero_init_tail);
  auto model = build_training_model(mc, cfg);
  CHECK(std::ranges::all_of(model.tail().weight.value.data(), [](float v) { return v == 0.0f; }));
  CHECK(std::ranges::equal(model.head().weight.value.data(), reference.cast<float>().head().weight.value.data()));

  Tensor<float> y(Shape{1, 1, 12, 12});
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = static_cast<float>(i % 7) / 7.0f;
  Tape<float> tape;
  model.zero_grad();
  const auto out = model.forward(tape, tape.constant(y), BnMode::kTrain);
  CHECK(std::ranges::equal(out.denoised.value().data(), y.data()));
  tape.backward(mse_loss(out.denoised, tape.constant(Tensor<float>(y.shape(), 0.5f))));
  CHECK(std::ranges::any_of(model.tail().weight.grad.data(), [](float g) { return g != 0.0f; }));
}
