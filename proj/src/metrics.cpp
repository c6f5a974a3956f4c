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

#include "dcanet/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

namespace dcanet {

namespace {

void require_same_dims(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_dims(b)) {
    throw ShapeError(std::string(what) + ": image dimensions differ (" + std::to_string(a.channels) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.channels) + "x" + std::to_string(b.height) + "x" + std::to_string(b.width) +
                     ")");
  }
}

constexpr int kWindow = 11;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  double total = 0.0;
  for (int y = 0; y < kWindow; ++y) {
    for (int x = 0; x < kWindow; ++x) {
      const double dy = y - kWindow / 2, dx = x - kWindow / 2;
      w[static_cast<size_t>(y * kWindow + x)] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      total += w[static_cast<size_t>(y * kWindow + x)];
    }
  }
  for (double& v : w) v /= total;
  return w;
}

double ssim_channel(const ImageBuffer& a, const ImageBuffer& b, int c) {
  static const auto window = gaussian_window();
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0.0;
  int64_t count = 0;
  for (int y = 0; y + kWindow <= a.height; ++y) {
    for (int x = 0; x + kWindow <= a.width; ++x) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int u = 0; u < kWindow; ++u) {
        for (int v = 0; v < kWindow; ++v) {
          const double w = window[static_cast<size_t>(u * kWindow + v)];
          const double p = a.at(c, y + u, x + v), q = b.at(c, y + u, x + v);
          mx += w * p;
          my += w * q;
          xx += w * p * p;
          yy += w * q * q;
          xy += w * (p * q);
        }
      }
      const double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
      sum += ((2 * (mx * my) + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a, b, "psnr");
  if (a.size() == 0) throw Error("psnr: empty image");
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(quantize_8bit(a.pixels[i])) - quantize_8bit(b.pixels[i]);
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (sq / static_cast<double>(a.size())));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a, b, "ssim");
  if (a.height < kWindow || a.width < kWindow) {
    throw Error("ssim: image must be at least 11x11, got " + std::to_string(a.height) + "x" + std::to_string(a.width));
  }
  if (a.pixels == b.pixels) return 1.0;
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) total += ssim_channel(a, b, c);
  return total / a.channels;
}

std::string format_db(double db, int precision) {
  if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, db);
  return buf;
}

template <typename T>
int64_t count_params(const Model<T>& model) {
  int64_t n = 0;
  model.for_each_parameter([&](const Parameter<T>& p) { n += p.value.numel(); });
  return n;
}

template int64_t count_params(const Model<float>&);
template int64_t count_params(const Model<double>&);

int64_t count_macs(const std::vector<LayerInfo>& inventory, int64_t height, int64_t width) {
  int64_t total = 0;
  for (const auto& l : inventory) {
    if (l.kind != LayerKind::kConv) continue;
    int64_t h = height, w = width;
    if (l.global) {
      h = w = 1;
    } else {
      for (int k = 0; k < l.pool_level; ++k) {
        h = (h + 1) / 2;
        w = (w + 1) / 2;
      }
    }
    total += h * w * l.out_channels * l.in_channels * l.kernel * l.kernel;
  }
  return total;
}

int64_t receptive_field(const std::vector<RfStep>& steps) {
  int64_t rf = 1, stride = 1;
  for (const auto& s : steps) {
    switch (s.kind) {
      case RfStepKind::kConv:
        rf += static_cast<int64_t>(s.kernel - 1) * s.dilation * stride;
        break;
      case RfStepKind::kPool:
        rf += stride;
        stride *= 2;
        break;
      case RfStepKind::kUpsample:
        stride = std::max<int64_t>(1, stride / 2);
        break;
    }
  }
  return rf;
}

GriddingReport gridding_probe(const std::vector<int>& rates, int width, bool short_skips) {
  if (rates.empty() || width < 1) throw Error("gridding_probe: need at least one layer and a positive width");
  std::vector<RfStep> steps;
  for (int r : rates) steps.push_back({RfStepKind::kConv, 3, r});
  GriddingReport report;
  report.receptive_field = receptive_field(steps);
  const int64_t side = report.receptive_field;

  LowerBranch<double> stack;
  for (size_t i = 0; i < rates.size(); ++i) {
    const std::string name = "probe.layer" + std::to_string(i);
    ConvBnRelu<double> block{make_conv<double>(name + ".conv", width, width, 3, rates[i]),
                             make_batch_norm<double>(name + ".bn", width)};
    // Mean-preserving positive weights keep activations near one.
    block.conv.weight.value.fill(1.0 / (9.0 * width));
    block.bn.eps = 0.0;
    stack.layers.push_back(std::move(block));
  }

  Tape<double> tape;
  auto input = tape.leaf(Tensor<double>(Shape{1, width, side, side}, 1.0));
  auto features = stack.features(tape, input, BnMode::kEval, short_skips);
  Tensor<double> pick(features.shape());
  for (int64_t c = 0; c < width; ++c) pick.at(0, c, side / 2, side / 2) = 1.0;
  tape.backward(sum_all(mul(features, tape.constant(pick))));

  const Tensor<double>& grad = input.grad();
  report.mask.assign(static_cast<size_t>(side * side), 0);
  for (int64_t y = 0; y < side; ++y) {
    for (int64_t x = 0; x < side; ++x) {
      bool hit = false;
      for (int64_t c = 0; c < width; ++c) hit |= grad.at(0, c, y, x) != 0.0;
      report.mask[static_cast<size_t>(y * side + x)] = hit;
      report.covered += hit;
    }
  }
  report.total = side * side;
  report.density = static_cast<double>(report.covered) / static_cast<double>(report.total);
  return report;
}

ImageBuffer denoise_image(Model<float>& model, const ImageBuffer& noisy) {
  Tape<float> tape;
  auto out = model.forward(tape, tape.constant(to_tensor(noisy)), BnMode::kEval);
  return from_tensor(out.denoised.value());
}

ImageBuffer estimate_noise_map(Model<float>& model, const ImageBuffer& noisy) {
  Tape<float> tape;
  return from_tensor(model.estimate_noise(tape, tape.constant(to_tensor(noisy)), BnMode::kEval).value());
}

std::vector<double> MetricReport::sigmas() const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.sigma) == out.end()) out.push_back(r.sigma);
  }
  return out;
}

MetricRow MetricReport::mean_at(double sigma) const {
  MetricRow mean;
  mean.image = "mean";
  mean.sigma = sigma;
  int n = 0;
  for (const auto& r : rows) {
    if (r.sigma != sigma) continue;
    mean.psnr_db += r.psnr_db;
    mean.ssim += r.ssim;
    mean.ms_per_image += r.ms_per_image;
    mean.input_psnr_db += r.input_psnr_db;
    mean.input_ssim += r.input_ssim;
    ++n;
  }
  if (n > 0) {
    mean.psnr_db /= n;
    mean.ssim /= n;
    mean.ms_per_image /= n;
    mean.input_psnr_db /= n;
    mean.input_ssim /= n;
  }
  return mean;
}

std::string MetricReport::csv() const {
  std::ostringstream out;
  out << "image,sigma,psnr_db,ssim,ms_per_image\n";
  char buf[160];
  auto emit = [&](const MetricRow& r) {
    std::snprintf(buf, sizeof(buf), "%s,%g,%s,%.6f,%.3f\n", r.image.c_str(), r.sigma, format_db(r.psnr_db, 4).c_str(),
                  r.ssim, r.ms_per_image);
    out << buf;
  };
  for (double s : sigmas()) {
    for (const auto& r : rows) {
      if (r.sigma == s) emit(r);
    }
    emit(mean_at(s));
  }
  return out.str();
}

std::string MetricReport::table() const {
  std::vector<std::string> images;
  for (const auto& r : rows) {
    if (std::find(images.begin(), images.end(), r.image) == images.end()) images.push_back(r.image);
  }
  size_t col = 14;
  for (const auto& i : images) col = std::max(col, i.size() + 2);
  auto pad = [&](const std::string& s) { return s + std::string(col > s.size() ? col - s.size() : 1, ' '); };

  std::ostringstream out;
  out << pad("sigma");
  for (const auto& i : images) out << pad(i);
  out << pad("mean") << "\n";
  for (double s : sigmas()) {
    char label[32];
    std::snprintf(label, sizeof(label), "%g", s);
    out << pad(label);
    for (const auto& i : images) {
      std::string cell = "-";
      for (const auto& r : rows) {
        if (r.sigma == s && r.image == i) {
          char buf[48];
          std::snprintf(buf, sizeof(buf), "%s/%.4f", format_db(r.psnr_db).c_str(), r.ssim);
          cell = buf;
        }
      }
      out << pad(cell);
    }
    const auto m = mean_at(s);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s/%.4f", format_db(m.psnr_db).c_str(), m.ssim);
    out << pad(buf) << "\n";
  }
  for (const auto& e : errors) out << "error: " << e.image << ": " << e.message << "\n";
  return out.str();
}

MetricReport bench_run(const Denoiser& denoiser, const std::vector<ManifestEntry>& entries,
                       const BenchOptions& options) {
  MetricReport report;
  auto prepare = [&](const std::string& path) {
    ImageBuffer img = load_image(path);
    if (img.channels == options.channels) return img;
    if (options.channels == 1) return to_grayscale(img);
    throw ImageError(path + ": expected " + std::to_string(options.channels) + " channels");
  };
  auto evaluate = [&](const std::string& name, const ImageBuffer& clean, const ImageBuffer& noisy, double sigma) {
    const auto start = std::chrono::steady_clock::now();
    const ImageBuffer out = denoiser(noisy);
    const auto stop = std::chrono::steady_clock::now();
    MetricRow row;
    row.image = name;
    row.sigma = sigma;
    row.psnr_db = psnr(out, clean);
    row.ssim = ssim(quantized(out), quantized(clean));
    row.ms_per_image = std::chrono::duration<double, std::milli>(stop - start).count();
    row.input_psnr_db = psnr(noisy, clean);
    row.input_ssim = ssim(quantized(noisy), quantized(clean));
    report.rows.push_back(row);
  };

  for (size_t index = 0; index < entries.size(); ++index) {
    const auto& e = entries[index];
    const std::string name = std::filesystem::path(e.clean).stem().string();
    try {
      const ImageBuffer clean = prepare(e.clean);
      if (e.noisy) {
        evaluate(name, clean, prepare(*e.noisy), 0.0);
        continue;
      }
      for (double sigma : options.sigmas) {
        std::seed_seq seq{static_cast<uint32_t>(options.seed), static_cast<uint32_t>(options.seed >> 32),
                          static_cast<uint32_t>(index), static_cast<uint32_t>(std::lround(sigma * 1000.0))};
        std::mt19937_64 rng(seq);
        evaluate(name, clean, add_awgn(clean, sigma, rng), sigma);
      }
    } catch (const Error& err) {
      report.errors.push_back({name, err.what()});
    }
  }
  return report;
}

}  // namespace dcanet
