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

#include "dcanet/probes.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include <json.hpp>

#include "dcanet/gradcheck.hpp"
#include "dcanet/losses.hpp"
#include "dcanet/metrics.hpp"
#include "dcanet/train.hpp"

namespace dcanet {

bool ProbeReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

std::string ProbeReport::json() const {
  nlohmann::json out;
  out["probe"] = kind;
  out["passed"] = passed();
  out["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j{{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    if (c.kinks > 0) j["kinks_skipped"] = c.kinks;
    out["checks"].push_back(std::move(j));
  }
  return out.dump();
}

namespace {

Tensor<double> uniform_tensor(const Shape& shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

ProbeCheck from_report(const std::string& name, const GradCheckReport& r) {
  ProbeCheck c{name, r.passed(), r.max_rel_error, r.tolerance, {}, r.kinks};
  if (!r.passed()) c.detail = r.summary();
  return c;
}

GradCheckReport parameter_check(const std::function<Var<double>(Tape<double>&)>& loss, Parameter<double>& p,
                                int coordinates, uint64_t seed, double tolerance) {
  p.zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  const std::vector<double> analytic(p.grad.data().begin(), p.grad.data().end());
  auto evaluate = [&] {
    Tape<double> tape;
    return loss(tape).value()[0];
  };
  return central_difference_check(evaluate, p.value.data(), analytic, coordinates, seed, 1e-6, tolerance);
}

}  // namespace

ProbeReport probe_gradcheck(uint64_t seed, int model_width, int coordinates) {
  ProbeReport report{"gradcheck", {}};
  constexpr double kOpTol = 1e-4, kModelTol = 1e-3, kStep = 1e-6;
  const auto x = uniform_tensor(Shape{2, 3, 5, 5}, seed + 1);
  const auto w = uniform_tensor(Shape{4, 3, 3, 3}, seed + 2);
  const auto b = uniform_tensor(Shape{4}, seed + 3);
  const auto other = uniform_tensor(Shape{2, 3, 5, 5}, seed + 4);
  const Tensor<double> slope(Shape{1}, 0.25);
  auto bn = make_batch_norm<double>("probe.bn", 3);
  bn.gamma.value = uniform_tensor(Shape{3}, seed + 5, 0.5, 1.5);
  bn.beta.value = uniform_tensor(Shape{3}, seed + 6);

  const std::vector<std::pair<std::string, TensorFn>> ops = {
      {"conv2d", [&](Tape<double>& t, Var<double> v) { return conv2d(v, t.constant(w), t.constant(b), 1, 1); }},
      {"conv2d_dilated", [&](Tape<double>& t, Var<double> v) { return conv2d(v, t.constant(w), t.constant(b), 2, 2); }},
      {"conv2d_dilation3", [&](Tape<double>& t, Var<double> v) { return conv2d(v, t.constant(w), t.constant(b), 3, 3); }},
      {"batch_norm_train", [&](Tape<double>& t, Var<double> v) { return batch_norm(t, v, bn, BnMode::kTrain); }},
      {"max_pool2", [](Tape<double>&, Var<double> v) { return max_pool2(v); }},
      {"bilinear_upsample2", [](Tape<double>&, Var<double> v) { return bilinear_upsample2(v); }},
      {"center_crop", [](Tape<double>&, Var<double> v) { return center_crop(v, 4, 3); }},
      {"relu", [](Tape<double>&, Var<double> v) { return relu(v); }},
      {"prelu", [&](Tape<double>& t, Var<double> v) { return prelu(v, t.constant(slope)); }},
      {"tanh", [](Tape<double>&, Var<double> v) { return dcanet::tanh(v); }},
      {"sigmoid", [](Tape<double>&, Var<double> v) { return sigmoid(v); }},
      {"channel_mean", [](Tape<double>&, Var<double> v) { return channel_pool(ReduceKind::kMean, v); }},
      {"channel_max", [](Tape<double>&, Var<double> v) { return channel_pool(ReduceKind::kMax, v); }},
      {"spatial_gap", [](Tape<double>&, Var<double> v) { return spatial_gap(v); }},
      {"laplacian", [](Tape<double>&, Var<double> v) { return laplacian(v); }},
      {"spatial_gradients", [](Tape<double>&, Var<double> v) { return spatial_gradients(v).first; }},
      {"concat_slice", [&](Tape<double>& t, Var<double> v) {
         return slice_channels(concat_channels<double>({t.constant(other), v}), 2, 5);
       }},
      {"elementwise", [&](Tape<double>& t, Var<double> v) {
         return mul(sub(v, t.constant(other)), add_scalar(scale(v, 0.5), 2.0));
       }},
      {"sqrt", [](Tape<double>&, Var<double> v) { return dcanet::sqrt(add_scalar(mul(v, v), 0.1)); }},
  };
  for (const auto& [name, f] : ops) {
    report.checks.push_back(from_report(name, grad_check(f, x, kStep, kOpTol, coordinates, seed)));
  }
  auto fw = [&](Tape<double>& t, Var<double> v) { return conv2d(t.constant(x), v, t.constant(b), 2, 2); };
  report.checks.push_back(from_report("conv2d_wrt_weight", grad_check(fw, w, kStep, kOpTol, coordinates, seed)));
  auto fs = [&](Tape<double>& t, Var<double> v) { return prelu(t.constant(x), v); };
  report.checks.push_back(from_report("prelu_wrt_slope", grad_check(fs, slope, kStep, kOpTol, 1, seed)));

  const auto target = uniform_tensor(Shape{1, 1, 6, 6}, seed + 7, 0.0, 1.0);
  const auto pred = uniform_tensor(Shape{1, 1, 6, 6}, seed + 8, 0.0, 1.0);
  LossConfig real;
  real.mode = LossMode::kReal;
  const std::vector<std::pair<std::string, TensorFn>> losses = {
      {"loss_mse", [&](Tape<double>& t, Var<double> v) { return mse_loss(v, t.constant(target)); }},
      {"loss_charbonnier", [&](Tape<double>& t, Var<double> v) { return charbonnier_loss(v, t.constant(target), 1e-3); }},
      {"loss_edge", [&](Tape<double>& t, Var<double> v) { return edge_loss(v, t.constant(target), 1e-3); }},
      {"loss_tv", [](Tape<double>&, Var<double> v) { return tv_loss(v); }},
      {"loss_total_real", [&](Tape<double>& t, Var<double> v) { return total_loss(v, t.constant(target), v, real); }},
  };
  for (const auto& [name, f] : losses) {
    report.checks.push_back(from_report(name, grad_check(f, pred, kStep, kOpTol, coordinates, seed)));
  }

  ModelConfig cfg;
  cfg.width = model_width;
  auto model = build_model<double>(cfg, seed);
  const auto y = uniform_tensor(Shape{1, 1, 16, 16}, seed + 9, 0.0, 1.0);
  const auto clean = uniform_tensor(Shape{1, 1, 16, 16}, seed + 10, 0.0, 1.0);
  auto wrt_input = [&](Tape<double>& t, Var<double> v) {
    model.zero_grad();
    return mse_loss(model.forward(t, v, BnMode::kTrain).denoised, t.constant(clean));
  };
  report.checks.push_back(from_report("model_wrt_input", grad_check(wrt_input, y, kStep, kModelTol, coordinates, seed)));
  auto loss = [&](Tape<double>& t) {
    model.zero_grad();
    return mse_loss(model.forward(t, t.constant(y), BnMode::kTrain).denoised, t.constant(clean));
  };
  for (auto* p : {&model.estimator().convs[0].weight, &model.head().weight, &model.attention().slope,
                  &model.attention().cam_down.weight, &model.upper().blocks[5].conv.weight,
                  &model.lower().layers[7].conv.weight, &model.lower().layers[3].bn.gamma, &model.tail().bias}) {
    const int count = std::min<int>(coordinates, static_cast<int>(p->value.numel()));
    report.checks.push_back(from_report("model_wrt_" + p->name, parameter_check(loss, *p, count, seed, kModelTol)));
  }
  return report;
}

ProbeReport probe_gridding(int width) {
  ProbeReport report{"gridding", {}};
  const auto hdc = gridding_probe(ModelConfig{}.lower_rates, width);
  report.checks.push_back({"default_rates_density", hdc.density == 1.0, hdc.density, 1.0,
                           "receptive field " + std::to_string(hdc.receptive_field)});
  const auto control = gridding_probe(std::vector<int>(16, 2), width);
  report.checks.push_back({"constant_rate2_density_below_one", control.density < 1.0, control.density, 1.0,
                           "receptive field " + std::to_string(control.receptive_field)});
  return report;
}

ProbeReport probe_determinism(uint64_t seed, int iterations) {
  ProbeReport report{"determinism", {}};
  TrainingData data;
  for (uint64_t s = 0; s < 4; ++s) data.clean.push_back(synthetic_image(32, 32, 1, seed + s));
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.patch = 16;
  cfg.iters = iterations;
  cfg.sigma_min = 0.0;
  cfg.sigma_max = 75.0;
  cfg.seed = seed;
  cfg.log_every = 0;
  cfg.schedule = step_halving_schedule(1e-3, 1000);
  ModelConfig mcfg;
  mcfg.width = 8;
  auto run = [&] {
    auto model = build_model<float>(mcfg, seed);
    Adam adam;
    std::vector<double> losses;
    for (const auto& e : train_loop(model, adam, data, cfg)) losses.push_back(e.loss);
    return losses;
  };
  const auto a = run(), b = run();
  int64_t first_diff = -1;
  for (size_t i = 0; i < a.size() && first_diff < 0; ++i) {
    if (a[i] != b[i]) first_diff = static_cast<int64_t>(i);
  }
  report.checks.push_back({"identical_loss_curves", first_diff < 0 && a.size() == b.size(),
                           static_cast<double>(a.size()), static_cast<double>(iterations),
                           first_diff < 0 ? "" : "first difference at iteration " + std::to_string(first_diff + 1)});
  return report;
}

}  // namespace dcanet
