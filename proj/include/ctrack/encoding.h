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

#ifndef CTRACK_ENCODING_H_
#define CTRACK_ENCODING_H_

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctrack/corpus.h"
#include "ctrack/embedding.h"
#include "ctrack/repository.h"

namespace ctrack {

using Matrix = Eigen::MatrixXd;

inline constexpr int kMaxSequenceLength = 100;

// Column layout of a feature row. Blocks, in order:
//   ID (K) | Meta (1) | Properties (P) | Membership (K) | Context (2 + H)
//   | Type (1) | Signals (S) | context-free (D_w) | contextual (D_c)
// The first five blocks are only populated on repository rows.
struct FeatureLayout {
  int capacity = kDefaultCapacity;         // K
  int num_properties = kNumPropertyValues;  // P
  int history = 10;                        // H
  int num_lexicons = 1;                    // S
  int context_free_dim = 64;               // D_w
  int contextual_dim = 64;                 // D_c

  int id_offset() const { return 0; }
  int meta_offset() const { return capacity; }
  int properties_offset() const { return meta_offset() + 1; }
  int membership_offset() const { return properties_offset() + num_properties; }
  int context_offset() const { return membership_offset() + capacity; }
  int context_dim() const { return 2 + history; }
  int type_offset() const { return context_offset() + context_dim(); }
  int signals_offset() const { return type_offset() + 1; }
  int context_free_offset() const { return signals_offset() + num_lexicons; }
  int contextual_offset() const {
    return context_free_offset() + context_free_dim;
  }
  int total_dim() const { return contextual_offset() + contextual_dim; }
  // Width of the repository-only prefix (ID through Context).
  int repository_only_dim() const { return type_offset(); }

  // Stage-2 token rows carry the stage-1 decisions as K + 1 extra columns.
  int stage2_input_dim() const { return total_dim() + capacity + 1; }
  int stage2_output_dim() const { return 2 * capacity + num_properties; }

  // Throws std::invalid_argument unless every dimension is positive and P
  // matches the property encoding.
  void Validate() const;

  bool operator==(const FeatureLayout &other) const = default;
};

// Repository rows first, then token rows.
struct FeatureMatrix {
  Matrix rows;
  int n = 0;  // repository rows
  int m = 0;  // token rows
  // Repository references dropped to fit the length limit (lenient mode).
  int evicted = 0;
};

class SequenceTooLongError : public std::runtime_error {
 public:
  SequenceTooLongError(int n, int m, int limit);
};

// Everything the encoder needs besides the repository and the turn.
struct EncoderResources {
  const ContextFreeEmbedder *context_free = nullptr;
  const ContextualEmbedder *contextual = nullptr;
  std::vector<const Lexicon *> lexicons;
};

struct EncodeOptions {
  bool lenient = false;
  int max_length = kMaxSequenceLength;
};

class FeatureEncoder {
 public:
  FeatureEncoder(FeatureLayout layout, EncoderResources resources);

  // Repository rows for the turn with index `turn_index` sent by `sender`.
  // The role block marks which participant sends the current message.
  Matrix EncodeRepository(const Repository &repo,
                          const std::vector<std::string> &tokens,
                          int turn_index, const std::string &sender) const;

  // Token rows; repository-only blocks stay zero.
  Matrix EncodeUtterance(const Repository &repo,
                         const std::vector<std::string> &tokens) const;

  // Both sequences with the length limit applied. In lenient mode the oldest
  // non-participant references are evicted until the pair fits. Returns the
  // repository actually encoded through `encoded_repo` when non-null.
  FeatureMatrix Encode(const Repository &repo, const Turn &turn,
                       int turn_index, const EncodeOptions &options = {},
                       Repository *encoded_repo = nullptr) const;

  // Row for a single repository reference; depends only on the reference,
  // the turn index and the current sender (plus the contextual vector).
  Eigen::VectorXd EncodeReference(const EntityReference &ref, int turn_index,
                                  const std::string &sender,
                                  const Vector &contextual) const;

  const FeatureLayout &layout() const { return layout_; }
  const EncoderResources &resources() const { return resources_; }

 private:
  std::vector<Vector> Contextual(const Repository &repo,
                                 const std::vector<std::string> &tokens) const;
  Matrix TokenRows(const std::vector<std::string> &tokens,
                   const std::vector<Vector> &contextual, size_t first) const;
  void SetSignals(const std::string &token, Eigen::Ref<Eigen::VectorXd> row)
      const;

  FeatureLayout layout_;
  EncoderResources resources_;
};

// Appends the stage-1 decisions to token rows: a one-hot of the fresh ID for
// tokens inside a new-entity span, and the meta bit. Repository rows get
// zeros. `token_ids[i]` is the fresh ID of token i or -1.
Matrix AugmentForStage2(const FeatureMatrix &features,
                        const std::vector<int> &token_ids,
                        const FeatureLayout &layout);

}  // namespace ctrack

#endif  // CTRACK_ENCODING_H_
