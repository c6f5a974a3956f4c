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
#include <limits>
#include <string>
#include <vector>

#include "dcanet/data.hpp"
#include "dcanet/model.hpp"

namespace dcanet {

/// PSNR in dB between two images after clamping and 8-bit quantization,
/// MAX = 255. Identical quantized images give +infinity.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean SSIM over valid 11x11 Gaussian windows (std 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1. Multi-channel inputs average the channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// "inf" for the identical-image sentinel, otherwise fixed-point text.
std::string format_db(double db, int precision = 2);

/// Learnable scalars: conv weights and biases, BN scale and shift, PReLU
/// slopes. Running statistics are not counted.
template <typename T>
int64_t count_params(const Model<T>& model);

/// Multiply-accumulates of every conv for one H x W input. Layers at pool
/// level k see extents halved k times (rounded up); global layers see 1x1.
int64_t count_macs(const std::vector<LayerInfo>& inventory, int64_t height, int64_t width);

/// Receptive field side length along a layer sequence.
int64_t receptive_field(const std::vector<RfStep>& steps);

struct GriddingReport {
  int64_t receptive_field = 0;
  int64_t covered = 0;  // nonzero gradient pixels inside the RF square
  int64_t total = 0;    // RF square area
  double density = 0.0;
  std::vector<uint8_t> mask;  // receptive_field^2, row-major
};

/// Builds a dilated conv-BN-ReLU stack with the given rates, positive
/// weights, zero biases and identity BN, and measures which input pixels
/// reach the centre output pixel through the backward pass.
GriddingReport gridding_probe(const std::vector<int>& rates, int width = 8, bool short_skips = true);

/// Eval-mode forward of one image; returns the denoised image unclamped.
ImageBuffer denoise_image(Model<float>& model, const ImageBuffer& noisy);
ImageBuffer estimate_noise_map(Model<float>& model, const ImageBuffer& noisy);

struct MetricRow {
  std::string image;
  double sigma = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double ms_per_image = 0.0;
  double input_psnr_db = 0.0;  // noisy input against clean
  double input_ssim = 0.0;
};

struct MetricError {
  std::string image;
  std::string message;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<MetricError> errors;

  std::vector<double> sigmas() const;
  /// Arithmetic means over the rows at one noise level.
  MetricRow mean_at(double sigma) const;

  std::string csv() const;
  /// One line per noise level, one column per image, then the mean.
  std::string table() const;
};

using Denoiser = std::function<ImageBuffer(const ImageBuffer& noisy)>;

struct BenchOptions {
  std::vector<double> sigmas = {15.0, 25.0, 50.0};
  uint64_t seed = 0;
  int channels = 1;  // RGB inputs are converted to gray for 1-channel runs
};

/// Synthetic-noise evaluation. Each (image, sigma) pair draws its noise from
/// a generator seeded by (seed, image index, sigma). Paired entries are
/// evaluated once with sigma reported as 0. Unreadable entries are recorded
/// in `errors` and skipped.
MetricReport bench_run(const Denoiser& denoiser, const std::vector<ManifestEntry>& entries,
                       const BenchOptions& options);

}  // namespace dcanet
