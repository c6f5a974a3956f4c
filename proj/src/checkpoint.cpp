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

#include "dcanet/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace dcanet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'D', 'C', 'A', 'N'};
constexpr size_t kConfigFields = 10 + 16;

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(U));
  }
  void put_bytes(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<uint8_t>& b, size_t begin, size_t end) : bytes_(b), pos_(begin), end_(end) {}
  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return v;
  }
  const uint8_t* take(size_t n) {
    if (end_ - pos_ < n) throw CheckpointError("checkpoint: unexpected end of data");
    const uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::vector<uint8_t>& bytes_;
  size_t pos_;
  size_t end_;
};

uint32_t crc_of(const uint8_t* data, size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

Tensor<float> scalar(double v) { return Tensor<float>(Shape{1}, static_cast<float>(v)); }

}  // namespace

std::vector<uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors, uint32_t version) {
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<uint32_t>(version);
  w.put<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw CheckpointError("checkpoint: tensor name too long");
    w.put<uint16_t>(static_cast<uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    const Shape& s = t.shape();
    w.put<uint8_t>(static_cast<uint8_t>(s.rank()));
    for (int i = 0; i < s.rank(); ++i) w.put<uint32_t>(static_cast<uint32_t>(s[i]));
    w.put_bytes(t.ptr(), static_cast<size_t>(t.numel()) * sizeof(float));
  }
  w.put<uint32_t>(crc_of(w.bytes.data() + 4, w.bytes.size() - 4));
  return w.bytes;
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError("checkpoint: missing DCAN magic");
  }
  uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  const uint32_t actual = crc_of(bytes.data() + 4, bytes.size() - 8);
  if (stored != actual) throw CheckpointHashError("checkpoint: CRC32 mismatch, file is corrupt");

  Reader r(bytes, 4, bytes.size() - 4);
  const auto version = r.get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint: format version " + std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
  }
  const auto count = r.get<uint32_t>();
  std::vector<NamedTensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<uint16_t>();
    const auto* name = reinterpret_cast<const char*>(r.take(len));
    const auto rank = r.get<uint8_t>();
    if (rank > 4) throw CheckpointError("checkpoint: rank " + std::to_string(rank) + " exceeds 4");
    std::vector<int64_t> dims;
    for (int d = 0; d < rank; ++d) dims.push_back(r.get<uint32_t>());
    Tensor<float> t{Shape(dims)};
    std::memcpy(t.ptr(), r.take(static_cast<size_t>(t.numel()) * sizeof(float)),
                static_cast<size_t>(t.numel()) * sizeof(float));
    out.emplace_back(std::string(name, len), std::move(t));
  }
  if (!r.done()) throw CheckpointError("checkpoint: trailing bytes after the last tensor");
  return out;
}

void write_checkpoint_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write to " + path + " failed");
}

std::vector<NamedTensor> read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Tensor<float> encode_config(const ModelConfig& cfg) {
  std::vector<float> v = {static_cast<float>(cfg.in_channels), static_cast<float>(cfg.width),
                          static_cast<float>(static_cast<int>(cfg.variant)), static_cast<float>(cfg.cam_reduction),
                          static_cast<float>(cfg.sam_kernel)};
  for (int b : cfg.upper_blocks) v.push_back(static_cast<float>(b));
  for (int r : cfg.lower_rates) v.push_back(static_cast<float>(r));
  const Shape shape{static_cast<int64_t>(v.size())};
  return Tensor<float>(shape, std::move(v));
}

ModelConfig decode_config(const Tensor<float>& t) {
  if (t.numel() != static_cast<int64_t>(kConfigFields)) throw CheckpointError("checkpoint: malformed config record");
  auto at = [&](size_t i) { return static_cast<int>(t[static_cast<int64_t>(i)]); };
  ModelConfig cfg;
  cfg.in_channels = at(0);
  cfg.width = at(1);
  if (at(2) < 0 || at(2) >= static_cast<int>(all_variants().size())) {
    throw CheckpointError("checkpoint: unknown variant id " + std::to_string(at(2)));
  }
  cfg.variant = static_cast<Variant>(at(2));
  cfg.cam_reduction = at(3);
  cfg.sam_kernel = at(4);
  for (size_t i = 0; i < 5; ++i) cfg.upper_blocks[i] = at(5 + i);
  cfg.lower_rates.clear();
  for (size_t i = 0; i < 16; ++i) cfg.lower_rates.push_back(at(10 + i));
  cfg.validate();
  return cfg;
}

std::vector<NamedTensor> checkpoint_tensors(const Model<float>& model, const Adam* adam, int64_t step) {
  std::vector<NamedTensor> out;
  out.emplace_back("config.model", encode_config(model.config()));
  out.emplace_back("train.step", scalar(static_cast<double>(step)));
  model.for_each_parameter([&](const Parameter<float>& p) { out.emplace_back(p.name, p.value); });
  model.for_each_buffer([&](const std::string& n, const Tensor<float>& t) { out.emplace_back(n, t); });
  if (adam != nullptr) {
    out.emplace_back("adam.t", scalar(static_cast<double>(adam->t())));
    model.for_each_parameter([&](const Parameter<float>& p) {
      const auto it = adam->moments().find(p.name);
      if (it == adam->moments().end()) {
        out.emplace_back("adam.m." + p.name, Tensor<float>(p.value.shape()));
        out.emplace_back("adam.v." + p.name, Tensor<float>(p.value.shape()));
        return;
      }
      out.emplace_back("adam.m." + p.name, it->second.m);
      out.emplace_back("adam.v." + p.name, it->second.v);
    });
  }
  return out;
}

void save_checkpoint(const std::string& path, const Model<float>& model, const Adam* adam, int64_t step) {
  write_checkpoint_file(path, checkpoint_tensors(model, adam, step));
}

TrainingState restore_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, t] : tensors) {
    if (!by_name.emplace(name, &t).second) throw CheckpointError("checkpoint: duplicate tensor '" + name + "'");
  }
  const auto cfg_it = by_name.find("config.model");
  if (cfg_it == by_name.end()) throw CheckpointNameError("checkpoint: missing 'config.model'");

  TrainingState state{Model<float>(decode_config(*cfg_it->second)), std::nullopt, 0};
  std::set<std::string> used = {"config.model"};
  auto take = [&](const std::string& name, const Shape& shape) -> const Tensor<float>& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointNameError("checkpoint: missing tensor '" + name + "'");
    if (!(it->second->shape() == shape)) {
      throw CheckpointError("checkpoint: tensor '" + name + "' has shape " + it->second->shape().str() +
                            ", expected " + shape.str());
    }
    used.insert(name);
    return *it->second;
  };

  if (by_name.contains("train.step")) state.step = static_cast<int64_t>(take("train.step", Shape{1})[0]);
  state.model.for_each_parameter([&](Parameter<float>& p) {
    p.value = take(p.name, p.value.shape());
    p.zero_grad();
  });
  state.model.for_each_buffer([&](const std::string& n, Tensor<float>& t) { t = take(n, t.shape()); });
  if (by_name.contains("adam.t")) {
    Adam adam;
    adam.set_t(static_cast<int64_t>(take("adam.t", Shape{1})[0]));
    state.model.for_each_parameter([&](const Parameter<float>& p) {
      adam.moments()[p.name] = Adam::Moments{take("adam.m." + p.name, p.value.shape()),
                                             take("adam.v." + p.name, p.value.shape())};
    });
    state.adam = std::move(adam);
  }
  for (const auto& [name, t] : tensors) {
    if (!used.contains(name)) throw CheckpointNameError("checkpoint: unknown tensor '" + name + "'");
  }
  return state;
}

TrainingState load_checkpoint(const std::string& path) { return restore_checkpoint(read_checkpoint_file(path)); }

}  // namespace dcanet
