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

#include "dcanet/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dcanet/checkpoint.hpp"

namespace dcanet {

TrainConfig desk_train_config() {
  TrainConfig cfg;
  cfg.patch = 48;
  cfg.batch = 4;
  cfg.iters = 500;
  cfg.schedule = step_halving_schedule(1e-3, 500);
  cfg.log_every = 10;
  cfg.checkpoint_every = 250;
  cfg.zero_init_tail = true;
  return cfg;
}

Model<float> build_training_model(const ModelConfig& model, const TrainConfig& cfg) {
  auto m = build_model<float>(model, cfg.seed);
  if (cfg.zero_init_tail) m.tail().weight.value.fill(0.0f);
  return m;
}

TrainingData load_training_data(const DatasetManifest& manifest, Split split, int channels) {
  TrainingData data;
  auto convert = [&](ImageBuffer img, const std::string& path) {
    if (img.channels == channels) return img;
    if (channels == 1) return to_grayscale(img);
    throw ImageError(path + ": single-channel image cannot feed a 3-channel model");
  };
  for (const auto& e : manifest.with_split(split)) {
    data.clean.push_back(convert(load_image(e.clean), e.clean));
    if (e.noisy) data.noisy.push_back(convert(load_image(*e.noisy), *e.noisy));
  }
  if (data.clean.empty()) throw Error("no '" + split_name(split) + "' images in manifest");
  return data;
}

Batch sample_batch(const TrainingData& data, const TrainConfig& cfg, int64_t iteration) {
  if (data.clean.empty()) throw Error("sample_batch: empty dataset");
  if (cfg.sigma_min < 0 || cfg.sigma_max < cfg.sigma_min) throw Error("sample_batch: invalid sigma range");
  std::vector<ImageBuffer> noisy, clean;
  Batch batch;
  for (int k = 0; k < cfg.batch; ++k) {
    std::seed_seq seq{static_cast<uint32_t>(cfg.seed), static_cast<uint32_t>(cfg.seed >> 32),
                      static_cast<uint32_t>(iteration), static_cast<uint32_t>(iteration >> 32),
                      static_cast<uint32_t>(k)};
    std::mt19937_64 rng(seq);
    // Images smaller than the patch are skipped by redrawing.
    int index = -1;
    for (int attempt = 0; attempt < 64 && index < 0; ++attempt) {
      const int candidate = std::uniform_int_distribution<int>(0, static_cast<int>(data.size()) - 1)(rng);
      const ImageBuffer& img = data.clean[static_cast<size_t>(candidate)];
      if (img.height >= cfg.patch && img.width >= cfg.patch) index = candidate;
    }
    if (index < 0) throw Error("sample_batch: no image is at least " + std::to_string(cfg.patch) + " pixels");
    const ImageBuffer& src = data.clean[static_cast<size_t>(index)];
    const int y = std::uniform_int_distribution<int>(0, src.height - cfg.patch)(rng);
    const int x = std::uniform_int_distribution<int>(0, src.width - cfg.patch)(rng);
    const int transform = cfg.augment ? std::uniform_int_distribution<int>(0, 7)(rng) : 0;
    ImageBuffer c = augment(crop(src, y, x, cfg.patch, cfg.patch), transform);
    ImageBuffer n;
    double sigma = 0.0;
    if (data.paired()) {
      n = augment(crop(data.noisy[static_cast<size_t>(index)], y, x, cfg.patch, cfg.patch), transform);
    } else {
      sigma = cfg.sigma_min == cfg.sigma_max ? cfg.sigma_min
                                             : std::uniform_real_distribution<double>(cfg.sigma_min, cfg.sigma_max)(rng);
      n = add_awgn(c, sigma, rng);
    }
    batch.sigmas.push_back(sigma);
    clean.push_back(std::move(c));
    noisy.push_back(std::move(n));
  }
  batch.noisy = to_tensor(noisy);
  batch.clean = to_tensor(clean);
  return batch;
}

double lr_for_iteration(const TrainConfig& cfg, int64_t iteration, int64_t dataset_size) {
  if (cfg.schedule.kind == Schedule::Kind::kStepHalving) return lr_at(cfg.schedule, static_cast<double>(iteration));
  const int64_t per_epoch = std::max<int64_t>(1, (dataset_size + cfg.batch - 1) / cfg.batch);
  return lr_at(cfg.schedule, static_cast<double>(iteration / per_epoch));
}

std::string format_log_line(const TrainLogEntry& e) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%lld\t%.6g\t%.9g", static_cast<long long>(e.iter), e.lr, e.loss);
  return buf;
}

std::vector<TrainLogEntry> train_loop(Model<float>& model, Adam& adam, const TrainingData& data,
                                      const TrainConfig& cfg, int64_t start, const TrainCallbacks& callbacks) {
  if (cfg.batch < 1 || cfg.patch < 1) throw Error("train: batch and patch must be positive");
  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path, std::ios::app);
    if (!log) throw Error("train: cannot open log " + cfg.log_path);
  }
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);
  auto checkpoint_path = [&](const std::string& stem) {
    return (std::filesystem::path(cfg.checkpoint_dir) / (stem + ".dcan")).string();
  };

  std::vector<TrainLogEntry> history;
  model.zero_grad();
  for (int64_t it = start; it < cfg.iters; ++it) {
    const double lr = lr_for_iteration(cfg, it, data.size());
    const Batch batch = sample_batch(data, cfg, it);
    double loss_value = 0.0;
    {
      Tape<float> tape;
      auto out = model.forward(tape, tape.constant(batch.noisy), BnMode::kTrain);
      Var<float> loss = total_loss(out.denoised, tape.constant(batch.clean), out.noise_map, cfg.loss);
      if (cfg.estimator_weight > 0.0 && !data.paired()) {
        Tensor<float> target(out.noise_map.shape());
        const int64_t per = target.numel() / cfg.batch;
        for (int64_t i = 0; i < target.numel(); ++i) {
          target[i] = static_cast<float>(batch.sigmas[static_cast<size_t>(i / per)] / 255.0);
        }
        loss = add(loss, scale(mse_loss(out.noise_map, tape.constant(target)), static_cast<float>(cfg.estimator_weight)));
      }
      loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        std::string where;
        if (!cfg.checkpoint_dir.empty()) {
          where = checkpoint_path("nonfinite_iter" + std::to_string(it + 1));
          save_checkpoint(where, model, &adam, it);
          where = "; state saved to " + where;
        }
        throw TrainingError("train: non-finite loss at iteration " + std::to_string(it + 1) + where);
      }
      tape.backward(loss);
    }
    adam.step(model, lr);
    model.zero_grad();

    const TrainLogEntry entry{it + 1, lr, loss_value};
    history.push_back(entry);
    if (cfg.log_every > 0 && entry.iter % cfg.log_every == 0) {
      if (log.is_open()) log << format_log_line(entry) << '\n' << std::flush;
      if (callbacks.on_log) callbacks.on_log(entry);
    }
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && entry.iter % cfg.checkpoint_every == 0) {
      save_checkpoint(checkpoint_path("iter" + std::to_string(entry.iter)), model, &adam, entry.iter);
    }
  }
  return history;
}

}  // namespace dcanet
