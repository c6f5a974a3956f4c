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

#include "dcanet/data.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <sstream>

namespace dcanet {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

ImageBuffer from_interleaved(const std::vector<uint8_t>& raw, int c, int h, int w) {
  ImageBuffer img(c, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        img.at(k, y, x) = static_cast<float>(raw[(static_cast<size_t>(y) * w + x) * c + k]) / 255.0f;
      }
    }
  }
  return img;
}

std::vector<uint8_t> to_interleaved(const ImageBuffer& img) {
  std::vector<uint8_t> raw(img.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int k = 0; k < img.channels; ++k) {
        raw[(static_cast<size_t>(y) * img.width + x) * img.channels + k] = quantize_8bit(img.at(k, y, x));
      }
    }
  }
  return raw;
}

ImageBuffer load_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageError(path + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw ImageError(path + ": 16-bit PNG is not supported (8-bit gray or RGB expected)");
  }
  const bool rgb = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int c = rgb ? 3 : 1;
  std::vector<uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError(path + ": " + msg);
  }
  return from_interleaved(raw, c, static_cast<int>(image.height), static_cast<int>(image.width));
}

void save_png(const ImageBuffer& img, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto raw = to_interleaved(img);
  if (!png_image_write_to_file(&image, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw ImageError(path + ": " + image.message);
  }
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string netpbm_token(std::istream& in, const std::string& path) {
  std::string tok;
  while (tok.empty()) {
    const int ch = in.get();
    if (ch == EOF) throw ImageError(path + ": truncated PNM header");
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while (in.peek() != EOF && !std::isspace(in.peek())) tok.push_back(static_cast<char>(in.get()));
    }
  }
  return tok;
}

ImageBuffer load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(path + ": cannot open");
  const std::string magic = netpbm_token(in, path);
  if (magic != "P5" && magic != "P6") throw ImageError(path + ": expected binary PGM (P5) or PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(netpbm_token(in, path));
    h = std::stoi(netpbm_token(in, path));
    maxval = std::stoi(netpbm_token(in, path));
  } catch (const std::logic_error&) {
    throw ImageError(path + ": malformed PNM header");
  }
  if (w <= 0 || h <= 0) throw ImageError(path + ": invalid PNM dimensions");
  if (maxval > 255) throw ImageError(path + ": 16-bit PNM is not supported");
  if (maxval <= 0) throw ImageError(path + ": invalid PNM maxval");
  in.get();  // single whitespace after maxval
  const int c = magic == "P6" ? 3 : 1;
  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * c);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw ImageError(path + ": truncated PNM data");
  ImageBuffer img = from_interleaved(raw, c, h, w);
  if (maxval != 255) {
    for (float& v : img.pixels) v = std::min(1.0f, v * 255.0f / static_cast<float>(maxval));
  }
  return img;
}

void save_pnm(const ImageBuffer& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError(path + ": cannot open for writing");
  out << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  const auto raw = to_interleaved(img);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ImageError(path + ": write failed");
}

ImageBuffer rotate_ccw(const ImageBuffer& img) {
  ImageBuffer out(img.channels, img.width, img.height);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = img.at(c, x, img.width - 1 - y);
    }
  }
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    }
  }
  return out;
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ImageError(path + ": cannot open");
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return load_png(path);
  if (sig[0] == 'P') return load_pnm(path);
  throw ImageError(path + ": unrecognised image format (PNG, PGM or PPM expected)");
}

void save_image(const ImageBuffer& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) throw ImageError(path + ": images must have 1 or 3 channels");
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    save_png(img, path);
  } else if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (img.channels == 1)) throw ImageError(path + ": channel count does not match extension");
    save_pnm(img, path);
  } else {
    throw ImageError(path + ": unsupported extension '" + ext + "'");
  }
}

uint8_t quantize_8bit(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<uint8_t>(std::floor(c * 255.0 + 0.5));
}

ImageBuffer quantized(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (float& v : out.pixels) v = static_cast<float>(quantize_8bit(v)) / 255.0f;
  return out;
}

ImageBuffer clamped(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw ImageError("to_grayscale: expected 1 or 3 channels");
  ImageBuffer out(1, img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(0, y, x) = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
    }
  }
  return out;
}

ImageBuffer add_awgn(const ImageBuffer& img, double sigma_255, std::mt19937_64& rng) {
  if (!(sigma_255 >= 0.0 && sigma_255 <= 100.0)) throw Error("add_awgn: sigma must lie in [0, 100]");
  ImageBuffer out = img;
  if (sigma_255 == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma_255 / 255.0);
  for (float& v : out.pixels) v = static_cast<float>(v + noise(rng));
  return out;
}

std::vector<PatchCorner> sample_corners(const ImageBuffer& img, int size, int count, std::mt19937_64& rng) {
  if (size <= 0) throw Error("sample_patches: patch size must be positive");
  if (size > img.height || size > img.width) {
    std::cerr << "warning: " << img.height << "x" << img.width << " image is smaller than " << size
              << " patches; skipped\n";
    return {};
  }
  std::uniform_int_distribution<int> ys(0, img.height - size), xs(0, img.width - size);
  std::vector<PatchCorner> out;
  for (int i = 0; i < count; ++i) {
    const int y = ys(rng);
    out.push_back({y, xs(rng)});
  }
  return out;
}

ImageBuffer crop(const ImageBuffer& img, int y, int x, int h, int w) {
  if (y < 0 || x < 0 || y + h > img.height || x + w > img.width) throw Error("crop: window outside image");
  ImageBuffer out(img.channels, h, w);
  for (int c = 0; c < img.channels; ++c) {
    for (int i = 0; i < h; ++i) {
      const auto src = img.pixels.begin() + static_cast<std::ptrdiff_t>((static_cast<size_t>(c) * img.height + y + i) * img.width + x);
      std::copy_n(src, w, &out.at(c, i, 0));
    }
  }
  return out;
}

std::vector<ImageBuffer> sample_patches(const ImageBuffer& img, int size, int count, std::mt19937_64& rng) {
  std::vector<ImageBuffer> out;
  for (const auto& c : sample_corners(img, size, count, rng)) out.push_back(crop(img, c.y, c.x, size, size));
  return out;
}

ImageBuffer augment(const ImageBuffer& img, int transform_id) {
  if (transform_id < 0 || transform_id > 7) throw Error("augment: transform id must lie in 0..7");
  const int turns = transform_id % 4;
  if (turns % 2 == 1 && img.height != img.width) {
    throw Error("augment: quarter-turn rotation needs a square patch");
  }
  ImageBuffer out = transform_id >= 4 ? flip_horizontal(img) : img;
  for (int i = 0; i < turns; ++i) out = rotate_ccw(out);
  return out;
}

int inverse_transform(int transform_id) { return transform_id < 4 ? (4 - transform_id) % 4 : transform_id; }

Tensor<float> to_tensor(const std::vector<ImageBuffer>& images) {
  if (images.empty()) throw Error("to_tensor: no images");
  const ImageBuffer& first = images.front();
  Tensor<float> t(Shape::nchw(static_cast<int64_t>(images.size()), first.channels, first.height, first.width));
  for (size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_dims(first)) throw ShapeError("to_tensor: images differ in size");
    std::copy(images[i].pixels.begin(), images[i].pixels.end(), t.ptr() + i * first.size());
  }
  return t;
}

Tensor<float> to_tensor(const ImageBuffer& image) { return to_tensor(std::vector<ImageBuffer>{image}); }

ImageBuffer from_tensor(const Tensor<float>& t, int64_t index) {
  const Shape& s = t.shape();
  if (s.rank() != 4 || index < 0 || index >= s.n()) throw ShapeError("from_tensor: bad shape or index");
  ImageBuffer img(static_cast<int>(s.c()), static_cast<int>(s.h()), static_cast<int>(s.w()));
  const float* src = t.ptr() + index * static_cast<int64_t>(img.size());
  std::copy(src, src + img.size(), img.pixels.begin());
  return img;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw Error("unknown split '" + s + "'");
}

std::vector<ManifestEntry> DatasetManifest::with_split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("manifest " + path + ": cannot open");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw Error("manifest " + path + ": expected a JSON array of entries");
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };

  DatasetManifest m;
  size_t paired = 0;
  for (size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "manifest " + path + " entry " + std::to_string(i);
    if (!item.is_object() || !item.contains("clean") || !item["clean"].is_string()) {
      throw Error(where + ": missing string field 'clean'");
    }
    ManifestEntry e;
    e.clean = resolve(item["clean"].get<std::string>());
    if (item.contains("noisy") && !item["noisy"].is_null()) {
      e.noisy = resolve(item["noisy"].get<std::string>());
      ++paired;
    }
    e.split = parse_split(item.value("split", std::string("train")));
    m.entries.push_back(std::move(e));
  }
  if (paired != 0 && paired != m.entries.size()) {
    throw Error("manifest " + path + ": mixes paired and clean-only entries");
  }
  m.mode = paired != 0 ? DatasetManifest::Mode::kPaired : DatasetManifest::Mode::kSynthetic;
  for (const auto& e : m.entries) {
    const ImageBuffer clean = load_image(e.clean);
    if (e.noisy && !load_image(*e.noisy).same_dims(clean)) {
      throw Error("manifest " + path + ": " + *e.noisy + " and " + e.clean + " differ in size");
    }
  }
  return m;
}

ImageBuffer synthetic_image(int height, int width, int channels, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(channels, height, width);
  const double gx = u(rng) - 0.5, gy = u(rng) - 0.5, base = 0.3 + 0.4 * u(rng);
  const double fx = 2.0 + 4.0 * u(rng), fy = 2.0 + 4.0 * u(rng), phase = 2.0 * std::numbers::pi * u(rng);
  for (int c = 0; c < channels; ++c) {
    const double tint = 0.9 + 0.2 * u(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double sx = static_cast<double>(x) / width, sy = static_cast<double>(y) / height;
        const double v = base + 0.3 * (gx * sx + gy * sy) + 0.08 * std::sin(fx * sx + fy * sy + phase);
        img.at(c, y, x) = static_cast<float>(v * tint);
      }
    }
  }

  const int shapes = 6 + static_cast<int>(u(rng) * 8);
  for (int s = 0; s < shapes; ++s) {
    const bool disc = u(rng) < 0.5;
    const double cy = u(rng) * height, cx = u(rng) * width;
    const double ry = (0.05 + 0.2 * u(rng)) * height, rx = (0.05 + 0.2 * u(rng)) * width;
    std::vector<double> value(static_cast<size_t>(channels));
    const double level = 0.1 + 0.8 * u(rng);
    for (auto& v : value) v = std::clamp(level + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dy = (y - cy) / ry, dx = (x - cx) / rx;
        const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < channels; ++c) img.at(c, y, x) = static_cast<float>(value[static_cast<size_t>(c)]);
      }
    }
  }

  // oriented stripes in one rectangular region
  const int th = std::max(1, height / 3), tw = std::max(1, width / 3);
  const int ty = static_cast<int>(u(rng) * (height - th)), tx = static_cast<int>(u(rng) * (width - tw));
  const double angle = std::numbers::pi * u(rng), period = 3.0 + 6.0 * u(rng);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = ty; y < ty + th; ++y) {
    for (int x = tx; x < tx + tw; ++x) {
      const double stripe = 0.12 * std::sin(2.0 * std::numbers::pi * (ca * x + sa * y) / period);
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = static_cast<float>(img.at(c, y, x) + stripe);
    }
  }
  for (float& v : img.pixels) v = std::clamp(v, 0.02f, 0.98f);
  return img;
}

}  // namespace dcanet
