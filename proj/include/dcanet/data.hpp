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

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcanet/tensor.hpp"

namespace dcanet {

/// Planar (channel-major) image with float pixels, nominally in [0, 1].
struct ImageBuffer {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  ImageBuffer() = default;
  ImageBuffer(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), pixels(static_cast<size_t>(c) * h * w, fill) {}

  float& at(int c, int y, int x) { return pixels[(static_cast<size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return pixels[(static_cast<size_t>(c) * height + y) * width + x]; }
  size_t size() const { return pixels.size(); }
  bool same_dims(const ImageBuffer& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

class ImageError : public Error {
 public:
  using Error::Error;
};

/// PNG (8-bit gray, RGB or palette; alpha is dropped) or binary PGM/PPM.
ImageBuffer load_image(const std::string& path);
/// Format chosen by extension: .png, .pgm (1 channel) or .ppm (3 channels).
void save_image(const ImageBuffer& img, const std::string& path);

/// Clamp to [0, 1] and round half up to 8 bits.
uint8_t quantize_8bit(float v);
ImageBuffer quantized(const ImageBuffer& img);
ImageBuffer clamped(const ImageBuffer& img);

/// BT.601 luma; single-channel input is returned unchanged.
ImageBuffer to_grayscale(const ImageBuffer& img);

/// Adds N(0, (sigma_255 / 255)^2) to every pixel. Output is not clamped.
ImageBuffer add_awgn(const ImageBuffer& img, double sigma_255, std::mt19937_64& rng);

struct PatchCorner {
  int y = 0;
  int x = 0;
};

/// Uniform top-left corners for `count` patches of size x size; empty (with a
/// warning on stderr) when the image is smaller than the patch.
std::vector<PatchCorner> sample_corners(const ImageBuffer& img, int size, int count, std::mt19937_64& rng);
ImageBuffer crop(const ImageBuffer& img, int y, int x, int h, int w);
std::vector<ImageBuffer> sample_patches(const ImageBuffer& img, int size, int count, std::mt19937_64& rng);

/// Dihedral transforms: id % 4 quarter turns counter-clockwise, applied
/// after a horizontal flip when id >= 4. id 0 is the identity.
ImageBuffer augment(const ImageBuffer& img, int transform_id);
int inverse_transform(int transform_id);

/// Stacks same-sized images into an N x C x H x W tensor and back.
Tensor<float> to_tensor(const std::vector<ImageBuffer>& images);
Tensor<float> to_tensor(const ImageBuffer& image);
ImageBuffer from_tensor(const Tensor<float>& t, int64_t index = 0);

enum class Split { kTrain, kVal, kTest };
std::string split_name(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string clean;
  std::optional<std::string> noisy;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  enum class Mode { kSynthetic, kPaired };
  Mode mode = Mode::kSynthetic;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> with_split(Split s) const;
};

/// Reads a JSON array of {clean, noisy?, split}. Relative paths are resolved
/// against the manifest's directory. Every referenced image is opened and,
/// for paired entries, dimension-checked before returning.
DatasetManifest load_manifest(const std::string& path);

/// Procedural test image: smooth shading, flat shapes with sharp edges and a
/// patch of oriented texture. Deterministic per seed.
ImageBuffer synthetic_image(int height, int width, int channels, uint64_t seed);

}  // namespace dcanet
