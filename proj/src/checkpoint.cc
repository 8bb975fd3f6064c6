// Copyright 2026 The Context Tracker Authors.
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

#include "ctrack/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>

#include "json.hpp"

namespace ctrack {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'R', 'K', 'C', 'K', 'P', 'T'};

void PutU64(std::ostream &out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

uint64_t GetU64(std::istream &in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char *>(bytes), 8)) {
    throw CheckpointError("checkpoint truncated");
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void PutDouble(std::ostream &out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  PutU64(out, bits);
}

double GetDouble(std::istream &in) {
  uint64_t bits = GetU64(in);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

nlohmann::ordered_json Manifest(const ModelParams &params,
                                const std::map<std::string, std::string> &meta) {
  const ModelConfig &c = params.config;
  nlohmann::ordered_json m;
  m["format_version"] = kCheckpointFormatVersion;
  m["layout"] = {{"capacity", c.layout.capacity},
                 {"num_properties", c.layout.num_properties},
                 {"history", c.layout.history},
                 {"num_lexicons", c.layout.num_lexicons},
                 {"context_free_dim", c.layout.context_free_dim},
                 {"contextual_dim", c.layout.contextual_dim}};
  m["d_model"] = c.d_model;
  m["num_heads"] = c.num_heads;
  m["ffn_dim"] = c.ffn_dim;
  m["head_hidden"] = c.head_hidden;
  m["positional_encoding"] = c.positional_encoding;
  m["seed"] = params.seed;
  m["metadata"] = meta;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  const auto names = params.TensorNames();
  const auto values = params.Tensors();
  for (size_t i = 0; i < names.size(); ++i) {
    tensors.push_back({{"name", names[i]},
                       {"rows", values[i]->rows()},
                       {"cols", values[i]->cols()}});
  }
  m["tensors"] = std::move(tensors);
  return m;
}

}  // namespace

void WriteCheckpoint(std::ostream &out, const ModelParams &params,
                     const std::map<std::string, std::string> &metadata) {
  const std::string manifest = Manifest(params, metadata).dump();
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = kCheckpointFormatVersion;
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((version >> (8 * i)) & 0xff));
  PutU64(out, manifest.size());
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  for (const Matrix *tensor : params.Tensors()) {
    for (long r = 0; r < tensor->rows(); ++r) {
      for (long c = 0; c < tensor->cols(); ++c) PutDouble(out, (*tensor)(r, c));
    }
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

void SaveCheckpoint(const std::string &path, const ModelParams &params,
                    const std::map<std::string, std::string> &metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  WriteCheckpoint(out, params, metadata);
}

ModelParams ReadCheckpoint(std::istream &in,
                           std::map<std::string, std::string> *metadata) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("not a checkpoint file");
  }
  unsigned char version_bytes[4];
  if (!in.read(reinterpret_cast<char *>(version_bytes), 4)) {
    throw CheckpointError("checkpoint truncated");
  }
  uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= uint32_t{version_bytes[i]} << (8 * i);
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  const uint64_t size = GetU64(in);
  if (size > (1u << 26)) throw CheckpointError("manifest too large");
  std::string text(size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(size))) {
    throw CheckpointError("checkpoint truncated");
  }

  nlohmann::json m;
  ModelConfig config;
  uint64_t seed = 0;
  try {
    m = nlohmann::json::parse(text);
    if (m.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw CheckpointError("manifest version mismatch");
    }
    const auto &l = m.at("layout");
    config.layout.capacity = l.at("capacity").get<int>();
    config.layout.num_properties = l.at("num_properties").get<int>();
    config.layout.history = l.at("history").get<int>();
    config.layout.num_lexicons = l.at("num_lexicons").get<int>();
    config.layout.context_free_dim = l.at("context_free_dim").get<int>();
    config.layout.contextual_dim = l.at("contextual_dim").get<int>();
    config.d_model = m.at("d_model").get<int>();
    config.num_heads = m.at("num_heads").get<int>();
    config.ffn_dim = m.at("ffn_dim").get<int>();
    config.head_hidden = m.at("head_hidden").get<int>();
    config.positional_encoding = m.at("positional_encoding").get<bool>();
    seed = m.at("seed").get<uint64_t>();
    if (metadata != nullptr) {
      *metadata = m.at("metadata").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception &e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }

  ModelParams params;
  try {
    params.config = config;
    params.seed = seed;
    params.stage1 = StageParams(config.Stage1());
    params.stage2 = StageParams(config.Stage2());
  } catch (const std::exception &e) {
    throw CheckpointError(std::string("bad model config: ") + e.what());
  }

  const auto &tensors = m.at("tensors");
  const auto names = params.TensorNames();
  auto values = params.Tensors();
  if (tensors.size() != names.size()) {
    throw CheckpointError("manifest lists " + std::to_string(tensors.size()) +
                          " tensors, expected " + std::to_string(names.size()));
  }
  for (size_t i = 0; i < names.size(); ++i) {
    const auto &t = tensors[i];
    if (t.at("name").get<std::string>() != names[i] ||
        t.at("rows").get<long>() != values[i]->rows() ||
        t.at("cols").get<long>() != values[i]->cols()) {
      throw CheckpointError("tensor " + std::to_string(i) +
                            " does not match the declared model: " + t.dump());
    }
  }
  for (Matrix *tensor : values) {
    for (long r = 0; r < tensor->rows(); ++r) {
      for (long c = 0; c < tensor->cols(); ++c) (*tensor)(r, c) = GetDouble(in);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after the last tensor");
  }
  return params;
}

ModelParams LoadCheckpoint(const std::string &path,
                           std::map<std::string, std::string> *metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return ReadCheckpoint(in, metadata);
}

}  // namespace ctrack
