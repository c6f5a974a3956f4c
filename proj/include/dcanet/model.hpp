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
#include <functional>
#include <string>
#include <vector>

#include "dcanet/nn.hpp"

namespace dcanet {

enum class Variant {
  kFull,
  kNoShortSkip,
  kNoLongSkip,
  kNoScam,
  kNoSam,
  kNoCam,
  kSerialSamCam,
  kSerialCamSam,
  kUpperOnly,
  kLowerOnly,
};

/// Snake-case identifiers ("full", "no_short_skip", ...).
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
const std::array<Variant, 10>& all_variants();

struct ModelConfig {
  int in_channels = 1;
  int width = 64;
  Variant variant = Variant::kFull;
  int cam_reduction = 8;
  int sam_kernel = 7;
  // Conv blocks per stage of the U-shaped branch: full, 1/2, 1/4, 1/2, full.
  std::array<int, 5> upper_blocks = {2, 2, 4, 2, 2};
  std::vector<int> lower_rates = {1, 2, 3, 4, 5, 6, 7, 8, 7, 6, 5, 4, 3, 2, 1, 1};

  void validate() const;

  bool short_skips() const { return variant != Variant::kNoShortSkip; }
  bool long_skips() const { return variant != Variant::kNoLongSkip; }
  bool has_scam() const { return variant != Variant::kNoScam; }
  bool has_sam() const { return has_scam() && variant != Variant::kNoSam; }
  bool has_cam() const { return has_scam() && variant != Variant::kNoCam; }
  bool has_upper() const { return variant != Variant::kLowerOnly; }
  bool has_lower() const { return variant != Variant::kUpperOnly; }
};

/// Lower-branch skip endpoints (1-based): the input of `from` is added to the
/// output of `to`.
struct SkipLink {
  int from;
  int to;
};
inline constexpr std::array<SkipLink, 2> kLowerSkips = {{{3, 13}, {5, 11}}};

template <typename T>
struct ConvBnRelu {
  Conv2dParams<T> conv;
  BatchNormParams<T> bn;

  Var<T> forward(Tape<T>& tape, Var<T> x, BnMode mode) {
    return relu(batch_norm(tape, conv2d(tape, x, conv), bn, mode));
  }
};

template <typename T>
struct NoiseEstimator {
  std::vector<Conv2dParams<T>> convs;  // 7 layers
  std::vector<BatchNormParams<T>> bns;  // layers 2..6

  static NoiseEstimator make(int channels, int width);
  /// Per-pixel noise features in (-1, 1), same shape as the input.
  Var<T> forward(Tape<T>& tape, Var<T> y, BnMode mode);
};

template <typename T>
struct AttentionModule {
  Conv2dParams<T> conv_in;
  Parameter<T> slope;
  Conv2dParams<T> conv_mid;
  Conv2dParams<T> sam_conv;
  BatchNormParams<T> sam_bn;
  Conv2dParams<T> cam_down;
  Conv2dParams<T> cam_up;
  Conv2dParams<T> fuse;

  static AttentionModule make(const ModelConfig& cfg);
  Var<T> spatial_attention(Tape<T>& tape, Var<T> x, BnMode mode);
  Var<T> channel_attention(Tape<T>& tape, Var<T> x);
  Var<T> forward(Tape<T>& tape, Var<T> x, BnMode mode, const ModelConfig& cfg);
};

template <typename T>
struct UpperBranch {
  std::vector<ConvBnRelu<T>> blocks;
  Conv2dParams<T> proj;
  std::array<int, 5> layout{};

  static UpperBranch make(const ModelConfig& cfg);
  Var<T> forward(Tape<T>& tape, Var<T> x, BnMode mode, bool short_skips);
};

template <typename T>
struct LowerBranch {
  std::vector<ConvBnRelu<T>> layers;
  Conv2dParams<T> proj;

  static LowerBranch make(int width, int out_channels, const std::vector<int>& rates);
  /// The dilated stack alone, before the output projection.
  Var<T> features(Tape<T>& tape, Var<T> x, BnMode mode, bool short_skips);
  Var<T> forward(Tape<T>& tape, Var<T> x, BnMode mode, bool short_skips) {
    return conv2d(tape, features(tape, x, mode, short_skips), proj);
  }
  std::vector<int> rates() const;
};

template <typename T>
struct ForwardResult {
  Var<T> denoised;
  Var<T> noise_map;
};

enum class LayerKind { kConv, kBatchNorm, kPrelu };

struct LayerInfo {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int kernel = 0;
  int dilation = 1;
  int pool_level = 0;   // number of 2x poolings applied to the input grid
  bool global = false;  // operates on a 1x1 pooled map
  int64_t params = 0;
};

template <typename T>
class Model {
 public:
  Model() = default;
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  ForwardResult<T> forward(Tape<T>& tape, Var<T> y, BnMode mode);
  Var<T> estimate_noise(Tape<T>& tape, Var<T> y, BnMode mode) { return estimator_.forward(tape, y, mode); }

  void for_each_parameter(const std::function<void(Parameter<T>&)>& fn);
  void for_each_parameter(const std::function<void(const Parameter<T>&)>& fn) const;
  /// BN running statistics, named "<bn>.running_mean" / "<bn>.running_var".
  void for_each_buffer(const std::function<void(const std::string&, Tensor<T>&)>& fn);
  void for_each_buffer(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const;

  void zero_grad();
  std::vector<LayerInfo> inventory() const;

  /// Same architecture and values at another precision.
  template <typename U>
  Model<U> cast() const {
    Model<U> out(config_);
    std::vector<const Tensor<T>*> src;
    for_each_parameter([&](const Parameter<T>& p) { src.push_back(&p.value); });
    for_each_buffer([&](const std::string&, const Tensor<T>& t) { src.push_back(&t); });
    size_t i = 0;
    out.for_each_parameter([&](Parameter<U>& p) { p.value = src[i++]->template cast<U>(); });
    out.for_each_buffer([&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
    return out;
  }

  NoiseEstimator<T>& estimator() { return estimator_; }
  Conv2dParams<T>& head() { return head_; }
  AttentionModule<T>& attention() { return attention_; }
  UpperBranch<T>& upper() { return upper_; }
  LowerBranch<T>& lower() { return lower_; }
  Conv2dParams<T>& tail() { return tail_; }

 private:
  ModelConfig config_;
  NoiseEstimator<T> estimator_;
  Conv2dParams<T> head_;
  AttentionModule<T> attention_;
  UpperBranch<T> upper_;
  LowerBranch<T> lower_;
  Conv2dParams<T> tail_;
};

/// Builds the network with He-uniform conv weights (bound sqrt(6 / fan_in)),
/// zero biases, unit BN scale and PReLU slope 0.25. Values are drawn in
/// double, so float and double models built from one seed agree.
template <typename T>
Model<T> build_model(const ModelConfig& config, uint64_t seed);

/// Fills every 4-d parameter with He-uniform values, in visiting order.
template <typename T>
void he_uniform_init(const std::function<void(const std::function<void(Parameter<T>&)>&)>& visit, uint64_t seed);

enum class RfStepKind { kConv, kPool, kUpsample };

struct RfStep {
  RfStepKind kind = RfStepKind::kConv;
  int kernel = 3;
  int dilation = 1;
};

/// Layer sequence along the deepest path, for receptive-field arithmetic.
std::vector<RfStep> lower_stack_descriptor(const ModelConfig& cfg);
std::vector<RfStep> upper_branch_descriptor(const ModelConfig& cfg);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace dcanet
