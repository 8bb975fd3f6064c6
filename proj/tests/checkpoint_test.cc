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

#include <sstream>

#include "doctest.h"
#include "support/fixtures.h"

namespace ctrack {
namespace {

ModelConfig SmallModel() {
  ModelConfig config;
  config.layout = testing::TinyLayout();
  config.d_model = 6;
  config.num_heads = 2;
  config.ffn_dim = 8;
  config.head_hidden = 5;
  return config;
}

std::string Serialize(const ModelParams &p,
                      const std::map<std::string, std::string> &meta = {}) {
  std::ostringstream out;
  WriteCheckpoint(out, p, meta);
  return out.str();
}

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves every tensor bit for bit") {
  const ModelParams p = ModelParams::Initialize(SmallModel(), 21);
  const std::string bytes = Serialize(p, {{"lexicon", "names.txt"}});
  CHECK(bytes.substr(0, 8) == "CTRKCKPT");
  std::istringstream in(bytes);
  std::map<std::string, std::string> meta;
  const ModelParams q = ReadCheckpoint(in, &meta);
  CHECK(q.config == p.config);
  CHECK(q.seed == 21);
  CHECK(meta.at("lexicon") == "names.txt");
  for (size_t i = 0; i < p.Tensors().size(); ++i) {
    CHECK(*q.Tensors()[i] == *p.Tensors()[i]);
  }
  CHECK(Serialize(q, meta) == bytes);
}

TEST_CASE("corrupt files are rejected") {
  const std::string bytes =
      Serialize(ModelParams::Initialize(SmallModel(), 1));
  auto read = [](const std::string &b) {
    std::istringstream in(b);
    return ReadCheckpoint(in);
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(read(bad_magic), CheckpointError);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  CHECK_THROWS_AS(read(bad_version), CheckpointError);
  CHECK_THROWS_AS(read(bytes.substr(0, bytes.size() - 3)), CheckpointError);
  CHECK_THROWS_AS(read(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(read(""), CheckpointError);
}

TEST_CASE("a manifest that disagrees with the config is rejected") {
  const std::string bytes =
      Serialize(ModelParams::Initialize(SmallModel(), 1));
  // Rename the ffn width in the manifest while keeping its length.
  std::string edited = bytes;
  const size_t pos = edited.find("\"ffn_dim\":8");
  REQUIRE(pos != std::string::npos);
  edited[pos + 10] = '9';
  std::istringstream in(edited);
  CHECK_THROWS_AS(ReadCheckpoint(in), CheckpointError);
}

TEST_CASE("missing files raise a checkpoint error") {
  CHECK_THROWS_AS(LoadCheckpoint("/nonexistent/model.ckpt"), CheckpointError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace ctrack
