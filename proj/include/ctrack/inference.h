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

#ifndef CTRACK_INFERENCE_H_
#define CTRACK_INFERENCE_H_

#include <optional>
#include <utility>
#include <vector>

#include "ctrack/corpus.h"
#include "ctrack/encoding.h"
#include "ctrack/network.h"
#include "ctrack/repository.h"

namespace ctrack {

// Per-token stage-2 decisions.
struct TokenDecoding {
  std::optional<int> id;
  Properties props;
  std::vector<int> members;  // only for plural decodings
};

// begin = logit 0 > 0, inside = logit 1 > 0. A span starts at every begin
// and extends over the following inside tokens; an inside token that does
// not continue a span starts a new one.
std::vector<Span> DecodeNewSpans(const Matrix &stage1_logits);

// ID: argmax of the K ID logits when one is positive (ties to the lowest
// index). Properties: argmax within each categorical group. Members: every
// positive membership logit, kept only when the decoded number is plural.
std::vector<TokenDecoding> DecodeStage2(const Matrix &stage2_logits,
                                        const FeatureLayout &layout);

struct MergeDiagnostics {
  std::vector<int> unknown_id_tokens;  // stage-2 IDs that do not exist
  std::vector<int> dropped_members;    // member IDs that do not exist yet
};

// Builds the turn's references. Each stage-1 span with a fresh ID becomes a
// new reference regardless of the stage-2 ID votes of its tokens; remaining
// tokens are grouped into maximal runs of equal existing IDs. Properties and
// members come from the first token of each reference.
std::vector<EntityReference> MergeSpans(
    const std::vector<TokenDecoding> &tokens, const std::vector<Span> &new_spans,
    const std::vector<int> &new_ids, const Turn &turn, int turn_index,
    const Repository &repo, MergeDiagnostics *diagnostics = nullptr);

struct TurnPrediction {
  std::vector<EntityReference> references;
  std::vector<Span> dropped_spans;  // new spans beyond the capacity
  MergeDiagnostics diagnostics;
  int evicted = 0;  // repository rows left out to fit the length limit
  std::vector<TokenDecoding> per_token;
};

// Source of stage logits. The production implementation runs the network;
// test doubles may read the gold annotations carried by the turn.
class TurnScorer {
 public:
  virtual ~TurnScorer() = default;
  virtual Matrix Stage1(const FeatureMatrix &features,
                        const Turn &turn) const = 0;
  // `fresh_ids[i]` is the ID given to token i by stage 1, or -1.
  virtual Matrix Stage2(const FeatureMatrix &features,
                        const Matrix &augmented_rows,
                        const std::vector<int> &fresh_ids,
                        const Turn &turn) const = 0;
};

class ModelScorer : public TurnScorer {
 public:
  explicit ModelScorer(const ModelParams *params) : params_(params) {}
  Matrix Stage1(const FeatureMatrix &features, const Turn &turn) const override;
  Matrix Stage2(const FeatureMatrix &features, const Matrix &augmented_rows,
                const std::vector<int> &fresh_ids,
                const Turn &turn) const override;

 private:
  const ModelParams *params_;
};

// Emits +-margin logits that decode to the turn's gold annotations, using
// the gold ID numbering. Reproduces the gold exactly whenever the repository
// it is given agrees with the gold history.
class GoldScorer : public TurnScorer {
 public:
  GoldScorer(const FeatureLayout &layout, double margin = 2.0)
      : layout_(layout), margin_(margin) {}
  Matrix Stage1(const FeatureMatrix &features, const Turn &turn) const override;
  Matrix Stage2(const FeatureMatrix &features, const Matrix &augmented_rows,
                const std::vector<int> &fresh_ids,
                const Turn &turn) const override;

 private:
  FeatureLayout layout_;
  double margin_;
};

struct TrackOptions {
  EncodeOptions encode;
};

// Online tracker: every call sees one turn and the repository only.
class Tracker {
 public:
  Tracker(const FeatureEncoder *encoder, const TurnScorer *scorer,
          TrackOptions options = {});

  // Stage 1, ID assignment, stage 2, decoding, merging and the repository
  // update for the next turn.
  std::pair<TurnPrediction, Repository> TrackTurn(const Repository &repo,
                                                  const Turn &turn) const;

  // Folds TrackTurn over the conversation from the seeded repository. With
  // teacher forcing every turn starts from the gold repository instead.
  std::vector<TurnPrediction> TrackConversation(
      const Conversation &conversation, bool teacher_forcing = false) const;

  Repository SeedFor(const Conversation &conversation) const;

 private:
  const FeatureEncoder *encoder_;
  const TurnScorer *scorer_;
  TrackOptions options_;
};

// One prediction record per turn: the corpus reference schema plus
// conversation ID, turn index and the dropped spans.
std::string SerializePrediction(const std::string &conversation_id,
                                int turn_index, const TurnPrediction &pred);

// Converts predicted references to the corpus schema.
std::vector<GoldReference> ToGoldReferences(
    const std::vector<EntityReference> &refs);

}  // namespace ctrack

#endif  // CTRACK_INFERENCE_H_
