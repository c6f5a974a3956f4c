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

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcanet/checkpoint.hpp"
#include "dcanet/metrics.hpp"
#include "dcanet/parallel.hpp"
#include "dcanet/probes.hpp"
#include "dcanet/train.hpp"

using namespace dcanet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { kInt, kDouble, kString, kBool };

struct Key {
  const char* name;
  KeyType type;
  const char* help;
};

// Settings shared by the JSON config file and the command line. Flags use
// the kebab-case spelling of the same names.
const std::vector<Key>& model_keys() {
  static const std::vector<Key> keys = {
      {"in_channels", KeyType::kInt, "image channels, 1 or 3"},
      {"width", KeyType::kInt, "feature channels"},
      {"variant", KeyType::kString, "architecture variant"},
      {"cam_reduction", KeyType::kInt, "channel attention reduction ratio"},
      {"sam_kernel", KeyType::kInt, "spatial attention kernel size"},
  };
  return keys;
}

const std::vector<Key>& train_keys() {
  static const std::vector<Key> keys = {
      {"manifest", KeyType::kString, "dataset manifest (JSON)"},
      {"mode", KeyType::kString, "awgn (MSE loss) or real (Charbonnier + edge + TV)"},
      {"sigma_min", KeyType::kDouble, "lowest synthetic noise level (8-bit units)"},
      {"sigma_max", KeyType::kDouble, "highest synthetic noise level (8-bit units)"},
      {"batch", KeyType::kInt, "patches per iteration"},
      {"patch", KeyType::kInt, "patch side length"},
      {"iters", KeyType::kInt, "total iterations"},
      {"schedule", KeyType::kString, "step or cosine"},
      {"lr", KeyType::kDouble, "initial learning rate"},
      {"halve_every", KeyType::kInt, "iterations between halvings (step schedule)"},
      {"lr_floor", KeyType::kDouble, "final learning rate (cosine schedule)"},
      {"epochs", KeyType::kDouble, "cosine horizon in epochs"},
      {"lambda_edge", KeyType::kDouble, "edge loss weight (real mode)"},
      {"lambda_tv", KeyType::kDouble, "noise-map TV weight (real mode)"},
      {"epsilon", KeyType::kDouble, "Charbonnier epsilon"},
      {"per_image", KeyType::kBool, "per-image Charbonnier norms"},
      {"augment", KeyType::kBool, "random flips and rotations"},
      {"estimator_weight", KeyType::kDouble, "auxiliary noise-map supervision weight"},
      {"zero_init_tail", KeyType::kBool, "start from the identity map (zero tail weights)"},
      {"log_every", KeyType::kInt, "iterations between log lines"},
      {"checkpoint_every", KeyType::kInt, "iterations between checkpoints"},
      {"checkpoint_dir", KeyType::kString, "checkpoint directory"},
      {"log_path", KeyType::kString, "log file (default: <checkpoint_dir>/train.log)"},
      {"resume", KeyType::kString, "checkpoint to resume from"},
  };
  return keys;
}

std::string kebab(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

json default_settings() {
  const ModelConfig m;
  const TrainConfig t;
  return json{
      {"in_channels", m.in_channels},
      {"width", m.width},
      {"variant", variant_name(m.variant)},
      {"cam_reduction", m.cam_reduction},
      {"sam_kernel", m.sam_kernel},
      {"manifest", ""},
      {"mode", "awgn"},
      {"sigma_min", t.sigma_min},
      {"sigma_max", t.sigma_max},
      {"batch", t.batch},
      {"patch", t.patch},
      {"iters", t.iters},
      {"schedule", "step"},
      {"lr", t.schedule.init},
      {"halve_every", t.schedule.halve_every},
      {"lr_floor", t.schedule.floor},
      {"epochs", t.schedule.horizon},
      {"lambda_edge", t.loss.lambda_edge},
      {"lambda_tv", t.loss.lambda_tv},
      {"epsilon", t.loss.epsilon},
      {"per_image", t.loss.per_image},
      {"augment", t.augment},
      {"estimator_weight", t.estimator_weight},
      {"zero_init_tail", t.zero_init_tail},
      {"log_every", t.log_every},
      {"checkpoint_every", t.checkpoint_every},
      {"checkpoint_dir", "checkpoints"},
      {"log_path", ""},
      {"resume", ""},
  };
}

json desk_preset() {
  const TrainConfig d = desk_train_config();
  return json{{"patch", d.patch},
              {"batch", d.batch},
              {"iters", d.iters},
              {"lr", d.schedule.init},
              {"halve_every", d.schedule.halve_every},
              {"log_every", d.log_every},
              {"checkpoint_every", d.checkpoint_every}};
}

const Key* find_key(const std::string& name) {
  for (const auto* keys : {&model_keys(), &train_keys()}) {
    for (const auto& k : *keys) {
      if (name == k.name) return &k;
    }
  }
  return nullptr;
}

json parse_value(const Key& key, const std::string& text) {
  try {
    switch (key.type) {
      case KeyType::kInt: {
        size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case KeyType::kDouble: {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case KeyType::kBool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      case KeyType::kString:
        return text;
    }
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value '" + text + "' for --" + kebab(key.name));
}

void check_type(const Key& key, const json& v) {
  const bool ok = (key.type == KeyType::kInt && v.is_number_integer()) ||
                  (key.type == KeyType::kDouble && v.is_number()) ||
                  (key.type == KeyType::kBool && v.is_boolean()) || (key.type == KeyType::kString && v.is_string());
  if (!ok) throw UsageError(std::string("config key '") + key.name + "' has the wrong type");
}

/// Command-line overrides collected as text and applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App* app, const std::vector<Key>& keys) {
    for (const auto& k : keys) {
      app->add_option("--" + kebab(k.name), values[k.name], k.help);
    }
  }
};

struct CommonOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  int threads = 1;
  bool desk = false;
};

json effective_settings(const CommonOptions& common, const Overrides& overrides, const CLI::App& app) {
  json s = default_settings();
  if (common.desk) s.update(desk_preset());
  if (!common.config_path.empty()) {
    std::ifstream in(common.config_path);
    if (!in) throw UsageError("cannot open config file " + common.config_path);
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + common.config_path + ": " + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [name, value] : file.items()) {
      if (name == "seed" || name == "threads") continue;
      const Key* key = find_key(name);
      if (key == nullptr) throw UsageError("unknown config key '" + name + "'");
      check_type(*key, value);
      s[name] = value;
    }
  }
  for (const auto& [name, text] : overrides.values) {
    if (app.count("--" + kebab(name)) == 0) continue;
    s[name] = parse_value(*find_key(name), text);
  }
  return s;
}

uint64_t resolve_seed(const CommonOptions& common) {
  if (common.seed) return *common.seed;
  if (!common.config_path.empty()) {
    std::ifstream in(common.config_path);
    const json file = json::parse(in, nullptr, false);
    if (file.is_object() && file.contains("seed") && file["seed"].is_number_unsigned()) {
      return file["seed"].get<uint64_t>();
    }
  }
  if (const char* env = std::getenv("DCANET_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("DCANET_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

ModelConfig model_config(const json& s) {
  ModelConfig cfg;
  cfg.in_channels = s["in_channels"].get<int>();
  cfg.width = s["width"].get<int>();
  cfg.cam_reduction = s["cam_reduction"].get<int>();
  cfg.sam_kernel = s["sam_kernel"].get<int>();
  try {
    cfg.variant = parse_variant(s["variant"].get<std::string>());
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

TrainConfig train_config(const json& s, uint64_t seed) {
  TrainConfig cfg;
  const std::string mode = s["mode"].get<std::string>();
  if (mode == "awgn") {
    cfg.loss.mode = LossMode::kMse;
  } else if (mode == "real") {
    cfg.loss.mode = LossMode::kReal;
  } else {
    throw UsageError("--mode must be awgn or real");
  }
  cfg.loss.lambda_edge = s["lambda_edge"].get<double>();
  cfg.loss.lambda_tv = s["lambda_tv"].get<double>();
  cfg.loss.epsilon = s["epsilon"].get<double>();
  cfg.loss.per_image = s["per_image"].get<bool>();
  cfg.sigma_min = s["sigma_min"].get<double>();
  cfg.sigma_max = s["sigma_max"].get<double>();
  if (cfg.sigma_min < 0 || cfg.sigma_max > 100 || cfg.sigma_min > cfg.sigma_max) {
    throw UsageError("noise range must satisfy 0 <= sigma-min <= sigma-max <= 100");
  }
  cfg.batch = s["batch"].get<int>();
  cfg.patch = s["patch"].get<int>();
  cfg.iters = s["iters"].get<int64_t>();
  if (cfg.batch < 1 || cfg.patch < 4 || cfg.iters < 0) throw UsageError("batch >= 1, patch >= 4 and iters >= 0 required");
  const std::string schedule = s["schedule"].get<std::string>();
  if (schedule == "step") {
    cfg.schedule = step_halving_schedule(s["lr"].get<double>(), s["halve_every"].get<int64_t>());
  } else if (schedule == "cosine") {
    cfg.schedule = cosine_schedule(s["epochs"].get<double>(), s["lr"].get<double>(), s["lr_floor"].get<double>());
  } else {
    throw UsageError("--schedule must be step or cosine");
  }
  if (cfg.schedule.halve_every < 1 || cfg.schedule.horizon <= 0) throw UsageError("schedule length must be positive");
  cfg.augment = s["augment"].get<bool>();
  cfg.estimator_weight = s["estimator_weight"].get<double>();
  cfg.zero_init_tail = s["zero_init_tail"].get<bool>();
  cfg.log_every = s["log_every"].get<int64_t>();
  cfg.checkpoint_every = s["checkpoint_every"].get<int64_t>();
  cfg.checkpoint_dir = s["checkpoint_dir"].get<std::string>();
  cfg.log_path = s["log_path"].get<std::string>();
  if (cfg.log_path.empty() && !cfg.checkpoint_dir.empty()) {
    cfg.log_path = (fs::path(cfg.checkpoint_dir) / "train.log").string();
  }
  cfg.seed = seed;
  return cfg;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing required ") + what);
}

ImageBuffer load_for_model(const std::string& path, int channels) {
  ImageBuffer img = load_image(path);
  if (img.channels != channels) {
    throw Error(path + " has " + std::to_string(img.channels) + " channel(s) but the checkpoint expects " +
                std::to_string(channels));
  }
  return img;
}

Model<float> load_model(const std::string& path) {
  require_file(path, "--checkpoint");
  return load_checkpoint(path).model;
}

// ---------------------------------------------------------------------------

int cmd_train(const json& settings, uint64_t seed) {
  const std::string manifest_path = settings["manifest"].get<std::string>();
  require_file(manifest_path, "--manifest");
  TrainConfig cfg = train_config(settings, seed);
  const std::string resume = settings["resume"].get<std::string>();

  json echo = settings;
  echo["seed"] = seed;
  echo["threads"] = num_threads();

  std::optional<TrainingState> state;
  if (!resume.empty()) {
    state = load_checkpoint(resume);
    if (!state->adam) state->adam = Adam{};
  } else {
    state = TrainingState{build_training_model(model_config(settings), cfg), Adam{}, 0};
  }
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (manifest.mode == DatasetManifest::Mode::kPaired && cfg.loss.mode == LossMode::kMse) {
    std::cerr << "note: paired manifest, synthetic noise settings are ignored\n";
  }
  const TrainingData data = load_training_data(manifest, Split::kTrain, state->model.config().in_channels);

  if (!cfg.log_path.empty()) {
    if (!fs::path(cfg.log_path).parent_path().empty()) fs::create_directories(fs::path(cfg.log_path).parent_path());
    std::ofstream log(cfg.log_path, std::ios::app);
    if (!log) throw Error("cannot open log " + cfg.log_path);
    log << "# config " << echo.dump() << "\n";
  }
  std::cout << "config " << echo.dump() << "\n";
  std::cout << "training " << variant_name(state->model.config().variant) << ", " << count_params(state->model)
            << " parameters, " << data.size() << " images, iterations " << state->step << ".." << cfg.iters << "\n";

  TrainCallbacks callbacks;
  callbacks.on_log = [](const TrainLogEntry& e) { std::cout << format_log_line(e) << std::endl; };
  train_loop(state->model, *state->adam, data, cfg, state->step, callbacks);

  if (!cfg.checkpoint_dir.empty()) {
    const std::string final_path = (fs::path(cfg.checkpoint_dir) / "final.dcan").string();
    save_checkpoint(final_path, state->model, &*state->adam, std::max(cfg.iters, state->step));
    std::cout << "saved " << final_path << "\n";
  }
  return 0;
}

int cmd_denoise(const std::string& checkpoint, const std::string& input, const std::string& output,
                const std::string& reference) {
  require_file(input, "--input");
  require_file(output, "--output");
  Model<float> model = load_model(checkpoint);
  const ImageBuffer noisy = load_for_model(input, model.config().in_channels);
  const ImageBuffer denoised = quantized(denoise_image(model, noisy));
  save_image(denoised, output);
  if (!reference.empty()) {
    const ImageBuffer clean = load_for_model(reference, model.config().in_channels);
    std::cout << "input    psnr_db " << format_db(psnr(noisy, clean), 4) << " ssim "
              << std::to_string(ssim(quantized(noisy), quantized(clean))) << "\n";
    std::cout << "denoised psnr_db " << format_db(psnr(denoised, clean), 4) << " ssim "
              << std::to_string(ssim(denoised, quantized(clean))) << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& manifest_path, const std::string& split,
             const std::vector<double>& sigmas, const std::string& csv_path, uint64_t seed) {
  require_file(manifest_path, "--manifest");
  Model<float> model = load_model(checkpoint);
  const DatasetManifest manifest = load_manifest(manifest_path);
  BenchOptions opts;
  opts.sigmas = sigmas;
  opts.seed = seed;
  opts.channels = model.config().in_channels;
  const auto report = bench_run([&](const ImageBuffer& y) { return denoise_image(model, y); },
                                manifest.with_split(parse_split(split)), opts);
  std::cout << report.table();
  for (double s : report.sigmas()) {
    const auto m = report.mean_at(s);
    std::printf("sigma %g: noisy %s dB / %.4f, denoised %s dB / %.4f\n", s, format_db(m.input_psnr_db).c_str(),
                m.input_ssim, format_db(m.psnr_db).c_str(), m.ssim);
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw Error("cannot write " + csv_path);
    out << report.csv();
  }
  return report.errors.empty() ? 0 : 1;
}

// Black, purple, red, yellow, white.
std::array<float, 3> heat_color(float t) {
  static const float stops[5][3] = {{0, 0, 0}, {0.35f, 0.05f, 0.5f}, {0.85f, 0.2f, 0.2f}, {1, 0.8f, 0.1f}, {1, 1, 1}};
  t = std::clamp(t, 0.0f, 1.0f) * 4.0f;
  const int i = std::min(3, static_cast<int>(t));
  const float f = t - static_cast<float>(i);
  return {stops[i][0] + f * (stops[i + 1][0] - stops[i][0]), stops[i][1] + f * (stops[i + 1][1] - stops[i][1]),
          stops[i][2] + f * (stops[i + 1][2] - stops[i][2])};
}

int cmd_estimate(const std::string& checkpoint, const std::string& input, const std::string& output) {
  require_file(input, "--input");
  require_file(output, "--output");
  Model<float> model = load_model(checkpoint);
  const ImageBuffer map = estimate_noise_map(model, load_for_model(input, model.config().in_channels));
  std::vector<float> level(static_cast<size_t>(map.height) * map.width, 0.0f);
  for (int c = 0; c < map.channels; ++c) {
    for (size_t i = 0; i < level.size(); ++i) level[i] += map.pixels[c * level.size() + i] / map.channels;
  }
  const auto [lo, hi] = std::minmax_element(level.begin(), level.end());
  const float low = *lo, span = std::max(*hi - *lo, 1e-12f);
  ImageBuffer heat(3, map.height, map.width);
  double mean = 0.0;
  for (size_t i = 0; i < level.size(); ++i) {
    const auto rgb = heat_color((level[i] - low) / span);
    for (int c = 0; c < 3; ++c) heat.pixels[c * level.size() + i] = rgb[static_cast<size_t>(c)];
    mean += level[i];
  }
  save_image(heat, output);
  std::printf("noise map min %.6f max %.6f mean %.6f\n", low, *hi, mean / static_cast<double>(level.size()));
  return 0;
}

int cmd_info(const Model<float>& model, int64_t height, int64_t width) {
  const ModelConfig& cfg = model.config();
  const auto inventory = model.inventory();
  std::printf("variant            %s (id %d)\n", variant_name(cfg.variant).c_str(), static_cast<int>(cfg.variant));
  std::printf("input channels     %d\n", cfg.in_channels);
  std::printf("feature width      %d\n", cfg.width);
  std::printf("parameters         %lld\n", static_cast<long long>(count_params(model)));
  const int64_t macs = count_macs(inventory, height, width);
  std::printf("macs at %lldx%lld     %lld (%.3f G)\n", static_cast<long long>(height), static_cast<long long>(width),
              static_cast<long long>(macs), static_cast<double>(macs) / 1e9);
  if (cfg.has_lower()) {
    std::printf("lower branch rf    %lld\n", static_cast<long long>(receptive_field(lower_stack_descriptor(cfg))));
  }
  if (cfg.has_upper()) {
    std::printf("upper branch rf    %lld\n", static_cast<long long>(receptive_field(upper_branch_descriptor(cfg))));
  }
  std::string rates;
  for (int r : cfg.lower_rates) rates += (rates.empty() ? "" : ",") + std::to_string(r);
  std::printf("dilation rates     %s\n", rates.c_str());
  std::printf("\n%-34s %-6s %5s %5s %4s %4s %4s %9s\n", "layer", "kind", "in", "out", "k", "dil", "pool", "params");
  for (const auto& l : inventory) {
    const char* kind = l.kind == LayerKind::kConv ? "conv" : l.kind == LayerKind::kBatchNorm ? "bn" : "prelu";
    const std::string pool = l.global ? "gap" : std::to_string(l.pool_level);
    std::printf("%-34s %-6s %5lld %5lld %4d %4d %4s %9lld\n", l.name.c_str(), kind,
                static_cast<long long>(l.in_channels), static_cast<long long>(l.out_channels), l.kernel, l.dilation,
                pool.c_str(), static_cast<long long>(l.params));
  }
  return 0;
}

int cmd_probe(const std::string& kind, uint64_t seed, int width, int coordinates) {
  ProbeReport report;
  if (kind == "gradcheck") {
    report = probe_gradcheck(seed, width, coordinates);
  } else if (kind == "gridding") {
    report = probe_gridding();
  } else if (kind == "determinism") {
    report = probe_determinism(seed);
  } else {
    throw UsageError("probe kind must be gradcheck, gridding or determinism");
  }
  for (const auto& c : report.checks) {
    if (!c.passed) std::cerr << "FAIL " << c.name << ": " << c.value << " (bound " << c.tolerance << ") " << c.detail << "\n";
  }
  std::cout << report.json() << "\n";
  return report.passed() ? 0 : 1;
}

std::vector<double> parse_sigmas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("invalid noise level '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--sigmas needs at least one value");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind image denoiser with a dual-branch dilated network and attention"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON file with settings (flags take precedence)");
    sub->add_option("--seed", common.seed, "random seed (fallback: DCANET_SEED, then 0)");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::Range(1, 256));
  };

  Overrides train_overrides, info_overrides;
  auto* train = app.add_subcommand("train", "train a model from a dataset manifest");
  add_common(train);
  train->add_flag("--desk", common.desk, "desk-scale preset: 48px patches, batch 4, 500 iterations");
  train_overrides.attach(train, model_keys());
  train_overrides.attach(train, train_keys());
  train->add_option("--sigma", train_overrides.values["sigma"], "fixed noise level (sets sigma-min and sigma-max)");

  std::string checkpoint, input, output, reference, manifest, split = "test", sigmas = "15,25,50", csv, probe_kind;
  auto* denoise = app.add_subcommand("denoise", "denoise one image");
  add_common(denoise);
  denoise->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  denoise->add_option("--input", input, "noisy image")->required();
  denoise->add_option("--output", output, "denoised image path")->required();
  denoise->add_option("--reference", reference, "clean image for PSNR/SSIM");

  auto* eval = app.add_subcommand("eval", "benchmark a checkpoint on a manifest split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  eval->add_option("--manifest", manifest, "dataset manifest");
  eval->add_option("--split", split, "train, val or test");
  eval->add_option("--sigmas", sigmas, "comma-separated noise levels for synthetic noise");
  eval->add_option("--csv", csv, "write per-image results as CSV");

  auto* estimate = app.add_subcommand("estimate", "write the estimated noise map as a heat image");
  add_common(estimate);
  estimate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  estimate->add_option("--input", input, "noisy image")->required();
  estimate->add_option("--output", output, "heat map PNG")->required();

  auto* info = app.add_subcommand("info", "parameter and MAC counts, receptive fields, layer inventory");
  add_common(info);
  info->add_option("--checkpoint", checkpoint, "read the architecture from a checkpoint");
  info_overrides.attach(info, model_keys());
  int64_t size = 256;
  info->add_option("--size", size, "square input side for the MAC count")->check(CLI::PositiveNumber);

  auto* probe = app.add_subcommand("probe", "run a property suite: gradcheck, gridding or determinism");
  add_common(probe);
  probe->add_option("kind", probe_kind, "gradcheck, gridding or determinism")->required();
  int probe_width = 8, probe_coords = 10;
  probe->add_option("--width", probe_width, "model width for the end-to-end gradient check");
  probe->add_option("--coordinates", probe_coords, "coordinates per gradient check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    set_num_threads(common.threads);
    const uint64_t seed = resolve_seed(common);
    if (active == train) {
      const std::string fixed = train_overrides.values["sigma"];
      train_overrides.values.erase("sigma");
      json settings = effective_settings(common, train_overrides, *train);
      if (train->count("--sigma") > 0) {
        const Key key{"sigma", KeyType::kDouble, ""};
        settings["sigma_min"] = settings["sigma_max"] = parse_value(key, fixed);
      }
      return cmd_train(settings, seed);
    }
    if (active == denoise) return cmd_denoise(checkpoint, input, output, reference);
    if (active == eval) return cmd_eval(checkpoint, manifest, split, parse_sigmas(sigmas), csv, seed);
    if (active == estimate) return cmd_estimate(checkpoint, input, output);
    if (active == info) {
      if (!checkpoint.empty()) return cmd_info(load_model(checkpoint), size, size);
      return cmd_info(build_model<float>(model_config(effective_settings(common, info_overrides, *info)), seed), size,
                      size);
    }
    return cmd_probe(probe_kind, seed, probe_width, probe_coords);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
