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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcanet/data.hpp"
#include "dcanet/losses.hpp"
#include "dcanet/optim.hpp"

namespace dcanet {

struct TrainConfig {
  LossConfig loss;
  Schedule schedule;
  int batch = 24;
  int patch = 140;
  int64_t iters = 300000;
  // Per-sample noise level drawn uniformly from [sigma_min, sigma_max] (8-bit units).
  double sigma_min = 0.0;
  double sigma_max = 75.0;
  bool augment = true;
  uint64_t seed = 0;
  int64_t log_every = 50;
  int64_t checkpoint_every = 1000;
  std::string log_path;        // empty: no log file
  std::string checkpoint_dir;  // empty: no checkpoints
  // Weight of an optional MSE term pulling the estimator output toward
  // sigma / 255 on synthetic noise. Off by default.
  double estimator_weight = 0.0;
  // Start a fresh run with zero tail weights, so the untrained network is
  // the identity map y -> y.
  bool zero_init_tail = false;
};

/// Desk-scale preset: 48 x 48 patches, batch 4, 500 iterations at a
/// constant learning rate of 1e-3, starting from the identity map.
TrainConfig desk_train_config();

/// Freshly initialized model for a training run, seeded with cfg.seed.
Model<float> build_training_model(const ModelConfig& model, const TrainConfig& cfg);

/// Images held in memory for patch sampling.
struct TrainingData {
  std::vector<ImageBuffer> clean;
  std::vector<ImageBuffer> noisy;  // empty unless paired

  bool paired() const { return !noisy.empty(); }
  int64_t size() const { return static_cast<int64_t>(clean.size()); }
};

/// Loads the manifest entries of one split, converting to the model's channel
/// count (RGB to gray allowed, gray to RGB rejected).
TrainingData load_training_data(const DatasetManifest& manifest, Split split, int channels);

struct Batch {
  Tensor<float> noisy;
  Tensor<float> clean;
  std::vector<double> sigmas;
};

/// Batch for one iteration. Each sample draws its image, crop, transform and
/// noise from a generator seeded by (seed, iteration, sample), so a batch
/// depends on nothing but those three numbers.
Batch sample_batch(const TrainingData& data, const TrainConfig& cfg, int64_t iteration);

struct TrainLogEntry {
  int64_t iter = 0;  // 1-based count of completed steps
  double lr = 0.0;
  double loss = 0.0;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

struct TrainCallbacks {
  std::function<void(const TrainLogEntry&)> on_log;
};

/// Runs iterations [start, cfg.iters) and returns one entry per iteration.
/// A non-finite loss writes "nonfinite_iter<k>.dcan" (when a checkpoint
/// directory is set) and throws TrainingError.
std::vector<TrainLogEntry> train_loop(Model<float>& model, Adam& adam, const TrainingData& data,
                                      const TrainConfig& cfg, int64_t start = 0, const TrainCallbacks& callbacks = {});

/// Learning rate for an iteration; cosine schedules count epochs of
/// ceil(images / batch) iterations.
double lr_for_iteration(const TrainConfig& cfg, int64_t iteration, int64_t dataset_size);

std::string format_log_line(const TrainLogEntry& e);

}  // namespace dcanet
