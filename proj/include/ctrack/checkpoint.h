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

#ifndef CTRACK_CHECKPOINT_H_
#define CTRACK_CHECKPOINT_H_

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "ctrack/network.h"

namespace ctrack {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout:
//   "CTRKCKPT" | u32 version | u64 manifest size | manifest JSON
//   | tensors as little-endian f64, row-major, in manifest order.
// The manifest records the model config, seeds, free-form metadata and the
// name and shape of every tensor; loading rejects any mismatch.
void WriteCheckpoint(std::ostream &out, const ModelParams &params,
                     const std::map<std::string, std::string> &metadata = {});
void SaveCheckpoint(const std::string &path, const ModelParams &params,
                    const std::map<std::string, std::string> &metadata = {});

ModelParams ReadCheckpoint(std::istream &in,
                           std::map<std::string, std::string> *metadata =
                               nullptr);
ModelParams LoadCheckpoint(const std::string &path,
                           std::map<std::string, std::string> *metadata =
                               nullptr);

}  // namespace ctrack

#endif  // CTRACK_CHECKPOINT_H_
