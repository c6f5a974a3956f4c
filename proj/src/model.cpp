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

#include "dcanet/model.hpp"

#include <cmath>
#include <random>

namespace dcanet {

namespace {

constexpr std::array<const char*, 10> kVariantNames = {
    "full",   "no_short_skip",       "no_long_skip",        "no_scam",    "no_sam",
    "no_cam", "serial_sam_then_cam", "serial_cam_then_sam", "upper_only", "lower_only",
};

template <typename T>
void visit_conv(Conv2dParams<T>& c, const std::function<void(Parameter<T>&)>& fn) {
  fn(c.weight);
  fn(c.bias);
}

template <typename T>
void visit_bn(BatchNormParams<T>& b, const std::function<void(Parameter<T>&)>& fn) {
  fn(b.gamma);
  fn(b.beta);
}

template <typename T>
void visit_bn_buffers(BatchNormParams<T>& b, const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  const std::string& g = b.gamma.name;
  const std::string base = g.substr(0, g.size() - std::string(".gamma").size());
  fn(base + ".running_mean", b.running_mean);
  fn(base + ".running_var", b.running_var);
}

template <typename T>
ConvBnRelu<T> make_block(const std::string& name, int64_t in, int64_t out, int dilation) {
  return {make_conv<T>(name + ".conv", in, out, 3, dilation), make_batch_norm<T>(name + ".bn", out)};
}

LayerInfo conv_info(const std::string& name, int64_t in, int64_t out, int k, int d, int level, bool global = false) {
  LayerInfo l;
  l.name = name;
  l.kind = LayerKind::kConv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  l.dilation = d;
  l.pool_level = level;
  l.global = global;
  l.params = out * in * k * k + out;
  return l;
}

template <typename T>
LayerInfo conv_info(const Conv2dParams<T>& c, int level, bool global = false) {
  const std::string& w = c.weight.name;
  return conv_info(w.substr(0, w.size() - 7), c.in_channels(), c.out_channels(), static_cast<int>(c.kernel()),
                   c.dilation, level, global);
}

template <typename T>
LayerInfo bn_info(const BatchNormParams<T>& b, int level) {
  LayerInfo l;
  const std::string& g = b.gamma.name;
  l.name = g.substr(0, g.size() - 6);
  l.kind = LayerKind::kBatchNorm;
  l.in_channels = l.out_channels = b.gamma.value.numel();
  l.pool_level = level;
  l.params = 2 * l.out_channels;
  return l;
}

}  // namespace

std::string variant_name(Variant v) { return kVariantNames[static_cast<size_t>(v)]; }

Variant parse_variant(const std::string& name) {
  for (size_t i = 0; i < kVariantNames.size(); ++i) {
    if (name == kVariantNames[i]) return static_cast<Variant>(i);
  }
  throw Error("unknown variant '" + name + "'");
}

const std::array<Variant, 10>& all_variants() {
  static const std::array<Variant, 10> all = {
      Variant::kFull,  Variant::kNoShortSkip,   Variant::kNoLongSkip,    Variant::kNoScam,    Variant::kNoSam,
      Variant::kNoCam, Variant::kSerialSamCam, Variant::kSerialCamSam, Variant::kUpperOnly, Variant::kLowerOnly};
  return all;
}

void ModelConfig::validate() const {
  if (in_channels != 1 && in_channels != 3) throw Error("in_channels must be 1 or 3");
  if (width < 1) throw Error("width must be positive");
  if (cam_reduction < 1 || width % cam_reduction != 0) throw Error("cam_reduction must divide width");
  if (sam_kernel < 1 || sam_kernel % 2 == 0) throw Error("sam_kernel must be a positive odd integer");
  if (lower_rates.size() != 16) {
    throw Error("lower_rates must list 16 dilation rates, got " + std::to_string(lower_rates.size()));
  }
  for (int r : lower_rates) {
    if (r < 1) throw Error("dilation rates must be positive");
  }
  for (int b : upper_blocks) {
    if (b < 1) throw Error("every upper stage needs at least one block");
  }
}

// ---------------------------------------------------------------------------

template <typename T>
NoiseEstimator<T> NoiseEstimator<T>::make(int channels, int width) {
  NoiseEstimator e;
  for (int i = 0; i < 7; ++i) {
    const int in = i == 0 ? channels : width;
    const int out = i == 6 ? channels : width;
    e.convs.push_back(make_conv<T>("estimator.conv" + std::to_string(i), in, out, 3));
    if (i >= 1 && i <= 5) e.bns.push_back(make_batch_norm<T>("estimator.bn" + std::to_string(i), width));
  }
  return e;
}

template <typename T>
Var<T> NoiseEstimator<T>::forward(Tape<T>& tape, Var<T> y, BnMode mode) {
  Var<T> h = relu(conv2d(tape, y, convs[0]));
  for (size_t i = 1; i <= 5; ++i) h = relu(batch_norm(tape, conv2d(tape, h, convs[i]), bns[i - 1], mode));
  return tanh(conv2d(tape, h, convs[6]));
}

template <typename T>
AttentionModule<T> AttentionModule<T>::make(const ModelConfig& cfg) {
  AttentionModule a;
  const int w = cfg.width;
  a.conv_in = make_conv<T>("attention.conv_in", w, w, 3);
  a.slope = Parameter<T>{"attention.prelu.slope", Tensor<T>(Shape{1}, T(0.25)), {}, false};
  a.slope.zero_grad();
  a.conv_mid = make_conv<T>("attention.conv_mid", w, w, 3);
  if (cfg.has_sam()) {
    a.sam_conv = make_conv<T>("attention.sam.conv", 2, 1, cfg.sam_kernel);
    a.sam_bn = make_batch_norm<T>("attention.sam.bn", 1);
  }
  if (cfg.has_cam()) {
    a.cam_down = make_conv<T>("attention.cam.down", w, w / cfg.cam_reduction, 1);
    a.cam_up = make_conv<T>("attention.cam.up", w / cfg.cam_reduction, w, 1);
  }
  const bool parallel = cfg.has_sam() && cfg.has_cam() && cfg.variant != Variant::kSerialSamCam &&
                        cfg.variant != Variant::kSerialCamSam;
  a.fuse = make_conv<T>("attention.fuse", parallel ? 2 * w : w, w, 3);
  return a;
}

template <typename T>
Var<T> AttentionModule<T>::spatial_attention(Tape<T>& tape, Var<T> x, BnMode mode) {
  Var<T> pooled = concat_channels<T>({channel_pool(ReduceKind::kMean, x), channel_pool(ReduceKind::kMax, x)});
  Var<T> weight = sigmoid(relu(batch_norm(tape, conv2d(tape, pooled, sam_conv), sam_bn, mode)));
  return mul(x, weight);
}

template <typename T>
Var<T> AttentionModule<T>::channel_attention(Tape<T>& tape, Var<T> x) {
  Var<T> squeezed = relu(conv2d(tape, spatial_gap(x), cam_down));
  return mul(x, sigmoid(conv2d(tape, squeezed, cam_up)));
}

template <typename T>
Var<T> AttentionModule<T>::forward(Tape<T>& tape, Var<T> x, BnMode mode, const ModelConfig& cfg) {
  Var<T> f = conv2d(tape, prelu(conv2d(tape, x, conv_in), tape.param(slope)), conv_mid);
  Var<T> mixed;
  switch (cfg.variant) {
    case Variant::kNoSam:
      mixed = channel_attention(tape, f);
      break;
    case Variant::kNoCam:
      mixed = spatial_attention(tape, f, mode);
      break;
    case Variant::kSerialSamCam:
      mixed = channel_attention(tape, spatial_attention(tape, f, mode));
      break;
    case Variant::kSerialCamSam:
      mixed = spatial_attention(tape, channel_attention(tape, f), mode);
      break;
    default:
      mixed = concat_channels<T>({spatial_attention(tape, f, mode), channel_attention(tape, f)});
      break;
  }
  Var<T> out = conv2d(tape, mixed, fuse);
  return cfg.long_skips() ? add(out, x) : out;
}

template <typename T>
UpperBranch<T> UpperBranch<T>::make(const ModelConfig& cfg) {
  UpperBranch u;
  u.layout = cfg.upper_blocks;
  int index = 0;
  for (int count : u.layout) {
    for (int i = 0; i < count; ++i) {
      u.blocks.push_back(make_block<T>("upper.block" + std::to_string(index++), cfg.width, cfg.width, 1));
    }
  }
  u.proj = make_conv<T>("upper.proj", cfg.width, cfg.in_channels, 3);
  return u;
}

template <typename T>
Var<T> UpperBranch<T>::forward(Tape<T>& tape, Var<T> x, BnMode mode, bool short_skips) {
  if (x.shape().h() < 4 || x.shape().w() < 4) {
    throw ShapeError("upper branch needs spatial extent >= 4 for two poolings, got " + x.shape().str());
  }
  size_t next = 0;
  auto run_stage = [&](Var<T> h, int count) {
    for (int i = 0; i < count; ++i) h = blocks[next++].forward(tape, h, mode);
    return h;
  };
  auto merge = [&](Var<T> coarse, Var<T> skip) {
    Var<T> up = center_crop(bilinear_upsample2(coarse), skip.shape().h(), skip.shape().w());
    return short_skips ? add(up, skip) : up;
  };

  Var<T> full = run_stage(x, layout[0]);
  Var<T> half = run_stage(max_pool2(full), layout[1]);
  Var<T> quarter = run_stage(max_pool2(half), layout[2]);
  Var<T> h = run_stage(merge(quarter, half), layout[3]);
  h = run_stage(merge(h, full), layout[4]);
  return conv2d(tape, h, proj);
}

template <typename T>
LowerBranch<T> LowerBranch<T>::make(int width, int out_channels, const std::vector<int>& rates) {
  if (rates.size() != 16) throw Error("lower branch expects 16 dilation rates");
  LowerBranch l;
  for (size_t i = 0; i < rates.size(); ++i) {
    l.layers.push_back(make_block<T>("lower.layer" + std::to_string(i), width, width, rates[i]));
  }
  l.proj = make_conv<T>("lower.proj", width, out_channels, 3);
  return l;
}

template <typename T>
Var<T> LowerBranch<T>::features(Tape<T>& tape, Var<T> x, BnMode mode, bool short_skips) {
  std::vector<Var<T>> inputs;
  Var<T> h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    inputs.push_back(h);
    h = layers[i].forward(tape, h, mode);
    if (!short_skips) continue;
    for (const auto& link : kLowerSkips) {
      if (static_cast<size_t>(link.to) == i + 1) h = add(h, inputs[static_cast<size_t>(link.from - 1)]);
    }
  }
  return h;
}

template <typename T>
std::vector<int> LowerBranch<T>::rates() const {
  std::vector<int> r;
  for (const auto& l : layers) r.push_back(l.conv.dilation);
  return r;
}

// ---------------------------------------------------------------------------

template <typename T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const int c = config_.in_channels, w = config_.width;
  estimator_ = NoiseEstimator<T>::make(c, w);
  head_ = make_conv<T>("head", 2 * c, w, 3);
  if (config_.has_scam()) attention_ = AttentionModule<T>::make(config_);
  if (config_.has_upper()) upper_ = UpperBranch<T>::make(config_);
  if (config_.has_lower()) lower_ = LowerBranch<T>::make(w, c, config_.lower_rates);
  const bool dual = config_.has_upper() && config_.has_lower();
  tail_ = make_conv<T>("tail", dual ? 2 * c : c, c, 3);
}

template <typename T>
ForwardResult<T> Model<T>::forward(Tape<T>& tape, Var<T> y, BnMode mode) {
  if (y.shape().rank() != 4 || y.shape().c() != config_.in_channels) {
    throw ShapeError("model expects N x " + std::to_string(config_.in_channels) + " x H x W input, got " +
                     y.shape().str());
  }
  Var<T> noise = estimator_.forward(tape, y, mode);
  Var<T> fused = conv2d(tape, concat_channels<T>({noise, y}), head_);
  if (config_.has_scam()) fused = attention_.forward(tape, fused, mode, config_);

  std::vector<Var<T>> branches;
  if (config_.has_upper()) branches.push_back(add(upper_.forward(tape, fused, mode, config_.short_skips()), y));
  if (config_.has_lower()) branches.push_back(add(lower_.forward(tape, fused, mode, config_.short_skips()), y));
  Var<T> merged = branches.size() == 1 ? branches[0] : concat_channels<T>(branches);
  Var<T> out = conv2d(tape, merged, tail_);
  if (config_.long_skips()) out = add(out, y);
  return {out, noise};
}

template <typename T>
void Model<T>::for_each_parameter(const std::function<void(Parameter<T>&)>& fn) {
  for (auto& c : estimator_.convs) visit_conv(c, fn);
  for (auto& b : estimator_.bns) visit_bn(b, fn);
  visit_conv(head_, fn);
  if (config_.has_scam()) {
    visit_conv(attention_.conv_in, fn);
    fn(attention_.slope);
    visit_conv(attention_.conv_mid, fn);
    if (config_.has_sam()) {
      visit_conv(attention_.sam_conv, fn);
      visit_bn(attention_.sam_bn, fn);
    }
    if (config_.has_cam()) {
      visit_conv(attention_.cam_down, fn);
      visit_conv(attention_.cam_up, fn);
    }
    visit_conv(attention_.fuse, fn);
  }
  if (config_.has_upper()) {
    for (auto& b : upper_.blocks) {
      visit_conv(b.conv, fn);
      visit_bn(b.bn, fn);
    }
    visit_conv(upper_.proj, fn);
  }
  if (config_.has_lower()) {
    for (auto& l : lower_.layers) {
      visit_conv(l.conv, fn);
      visit_bn(l.bn, fn);
    }
    visit_conv(lower_.proj, fn);
  }
  visit_conv(tail_, fn);
}

template <typename T>
void Model<T>::for_each_parameter(const std::function<void(const Parameter<T>&)>& fn) const {
  const_cast<Model*>(this)->for_each_parameter([&](Parameter<T>& p) { fn(p); });
}

template <typename T>
void Model<T>::for_each_buffer(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  for (auto& b : estimator_.bns) visit_bn_buffers(b, fn);
  if (config_.has_sam()) visit_bn_buffers(attention_.sam_bn, fn);
  if (config_.has_upper()) {
    for (auto& b : upper_.blocks) visit_bn_buffers(b.bn, fn);
  }
  if (config_.has_lower()) {
    for (auto& l : lower_.layers) visit_bn_buffers(l.bn, fn);
  }
}

template <typename T>
void Model<T>::for_each_buffer(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const {
  const_cast<Model*>(this)->for_each_buffer([&](const std::string& n, Tensor<T>& t) { fn(n, t); });
}

template <typename T>
void Model<T>::zero_grad() {
  for_each_parameter([](Parameter<T>& p) { p.zero_grad(); });
}

template <typename T>
std::vector<LayerInfo> Model<T>::inventory() const {
  auto& self = *const_cast<Model*>(this);
  std::vector<LayerInfo> out;
  for (size_t i = 0; i < 7; ++i) {
    out.push_back(conv_info(self.estimator_.convs[i], 0));
    if (i >= 1 && i <= 5) out.push_back(bn_info(self.estimator_.bns[i - 1], 0));
  }
  out.push_back(conv_info(self.head_, 0));
  if (config_.has_scam()) {
    auto& a = self.attention_;
    out.push_back(conv_info(a.conv_in, 0));
    LayerInfo prelu_info;
    prelu_info.name = "attention.prelu";
    prelu_info.kind = LayerKind::kPrelu;
    prelu_info.in_channels = prelu_info.out_channels = config_.width;
    prelu_info.params = 1;
    out.push_back(prelu_info);
    out.push_back(conv_info(a.conv_mid, 0));
    if (config_.has_sam()) {
      out.push_back(conv_info(a.sam_conv, 0));
      out.push_back(bn_info(a.sam_bn, 0));
    }
    if (config_.has_cam()) {
      out.push_back(conv_info(a.cam_down, 0, true));
      out.push_back(conv_info(a.cam_up, 0, true));
    }
    out.push_back(conv_info(a.fuse, 0));
  }
  if (config_.has_upper()) {
    const auto& layout = upper_.layout;
    const int levels[5] = {0, 1, 2, 1, 0};
    size_t b = 0;
    for (int stage = 0; stage < 5; ++stage) {
      for (int i = 0; i < layout[static_cast<size_t>(stage)]; ++i, ++b) {
        out.push_back(conv_info(self.upper_.blocks[b].conv, levels[stage]));
        out.push_back(bn_info(self.upper_.blocks[b].bn, levels[stage]));
      }
    }
    out.push_back(conv_info(self.upper_.proj, 0));
  }
  if (config_.has_lower()) {
    for (auto& l : self.lower_.layers) {
      out.push_back(conv_info(l.conv, 0));
      out.push_back(bn_info(l.bn, 0));
    }
    out.push_back(conv_info(self.lower_.proj, 0));
  }
  out.push_back(conv_info(self.tail_, 0));
  return out;
}

template <typename T>
void he_uniform_init(const std::function<void(const std::function<void(Parameter<T>&)>&)>& visit, uint64_t seed) {
  std::mt19937_64 rng(seed);
  visit([&](Parameter<T>& p) {
    const Shape& s = p.value.shape();
    if (s.rank() != 4) return;
    const double bound = std::sqrt(6.0 / static_cast<double>(s[1] * s[2] * s[3]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (T& v : p.value.data()) v = static_cast<T>(u(rng));
  });
}

template <typename T>
Model<T> build_model(const ModelConfig& config, uint64_t seed) {
  Model<T> m(config);
  he_uniform_init<T>([&](const std::function<void(Parameter<T>&)>& fn) { m.for_each_parameter(fn); }, seed);
  return m;
}

std::vector<RfStep> lower_stack_descriptor(const ModelConfig& cfg) {
  std::vector<RfStep> steps;
  for (int r : cfg.lower_rates) steps.push_back({RfStepKind::kConv, 3, r});
  return steps;
}

std::vector<RfStep> upper_branch_descriptor(const ModelConfig& cfg) {
  std::vector<RfStep> steps;
  const RfStepKind between[4] = {RfStepKind::kPool, RfStepKind::kPool, RfStepKind::kUpsample, RfStepKind::kUpsample};
  for (size_t stage = 0; stage < 5; ++stage) {
    for (int i = 0; i < cfg.upper_blocks[stage]; ++i) steps.push_back({RfStepKind::kConv, 3, 1});
    if (stage < 4) steps.push_back({between[stage], 2, 1});
  }
  steps.push_back({RfStepKind::kConv, 3, 1});
  return steps;
}

#define DCANET_INSTANTIATE_MODEL(T)                                                                \
  template struct NoiseEstimator<T>;                                                               \
  template struct AttentionModule<T>;                                                              \
  template struct UpperBranch<T>;                                                                  \
  template struct LowerBranch<T>;                                                                  \
  template class Model<T>;                                                                         \
  template Model<T> build_model<T>(const ModelConfig&, uint64_t);                                  \
  template void he_uniform_init<T>(const std::function<void(const std::function<void(Parameter<T>&)>&)>&, \
                                   uint64_t);

DCANET_INSTANTIATE_MODEL(float)
DCANET_INSTANTIATE_MODEL(double)

}  // namespace dcanet
