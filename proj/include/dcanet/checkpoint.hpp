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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcanet/model.hpp"
#include "dcanet/optim.hpp"

namespace dcanet {

class CheckpointError : public Error {
 public:
  using Error::Error;
};
class CheckpointHashError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointNameError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr uint32_t kCheckpointVersion = 1;

using NamedTensor = std::pair<std::string, Tensor<float>>;

/// Layout: "DCAN", u32 version, u32 count, then per tensor u16 name length,
/// name bytes, u8 rank, rank x u32 extents, f32 payload; all little-endian.
/// A CRC32 of everything after the magic closes the file.
std::vector<uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors, uint32_t version = kCheckpointVersion);
std::vector<NamedTensor> decode_checkpoint(const std::vector<uint8_t>& bytes);

void write_checkpoint_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint_file(const std::string& path);

/// Model config as a flat float vector ("config.model").
Tensor<float> encode_config(const ModelConfig& cfg);
ModelConfig decode_config(const Tensor<float>& t);

struct TrainingState {
  Model<float> model;
  std::optional<Adam> adam;
  int64_t step = 0;
};

/// Config echo, step counter, parameters, BN statistics and (optionally)
/// Adam moments, in a fixed order.
std::vector<NamedTensor> checkpoint_tensors(const Model<float>& model, const Adam* adam, int64_t step);
void save_checkpoint(const std::string& path, const Model<float>& model, const Adam* adam = nullptr,
                     int64_t step = 0);
TrainingState restore_checkpoint(const std::vector<NamedTensor>& tensors);
TrainingState load_checkpoint(const std::string& path);

}  // namespace dcanet
