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

#ifndef CTRACK_TESTS_SUPPORT_FIXTURES_H_
#define CTRACK_TESTS_SUPPORT_FIXTURES_H_

#include <memory>
#include <string>
#include <vector>

#include "ctrack/corpus.h"
#include "ctrack/embedding.h"
#include "ctrack/encoding.h"
#include "ctrack/evaluation.h"
#include "ctrack/inference.h"
#include "ctrack/network.h"
#include "ctrack/training.h"

namespace ctrack::testing {

// Alice and Bob discussing their parents' vacation: "how did mom and dad
// like the vacation in paris ?" then "they loved it there . pops did not
// want to leave .".
Conversation VacationConversation();

// Small layout for fast tests: K=5, H=3, S=1, D_w=D_c=4.
FeatureLayout TinyLayout();

// Hash embedders, a name lexicon and the encoder built on them.
class TestPipeline {
 public:
  explicit TestPipeline(const FeatureLayout &layout, uint64_t seed = 7,
                        int window = 1);
  const FeatureEncoder &encoder() const { return *encoder_; }
  const ContextFreeEmbedder *context_free() const { return &word_; }

 private:
  HashEmbedder word_;
  HashEmbedder context_base_;
  MeanContextEmbedder contextual_;
  Lexicon lexicon_;
  std::unique_ptr<FeatureEncoder> encoder_;
};

// First names used by the generator; all are in the bundled lexicon.
const std::vector<std::string> &FemaleNames();
const std::vector<std::string> &MaleNames();

struct SyntheticOptions {
  int max_turns = 6;
  int max_entities = 6;  // including both participants
  int min_turns = 3;
};

// Small random conversations about a woman, a man, a place and the groups
// they form, with pronouns resolving unambiguously.
std::vector<Conversation> GenerateCorpus(int count, uint64_t seed,
                                         const SyntheticOptions &options = {});

// Gold oracle that fails to detect one new-entity span in the turn whose
// tokens equal `tokens`.
class MissedSpanScorer : public TurnScorer {
 public:
  MissedSpanScorer(const FeatureLayout &layout,
                   std::vector<std::string> tokens, Span missed)
      : gold_(layout), tokens_(std::move(tokens)), missed_(missed) {}
  Matrix Stage1(const FeatureMatrix &features, const Turn &turn) const override;
  Matrix Stage2(const FeatureMatrix &features, const Matrix &augmented_rows,
                const std::vector<int> &fresh_ids,
                const Turn &turn) const override;

 private:
  GoldScorer gold_;
  std::vector<std::string> tokens_;
  Span missed_;
};

// Conversation where one new entity introduced in turn 1 is mentioned again
// in every later turn, plus the span a MissedSpanScorer should suppress.
struct PropagationFixture {
  Conversation conversation;
  Span missed;
};
PropagationFixture ErrorInjectionFixture();

// Two hand-annotated conversations and predictions for the metric oracle.
struct MetricFixture {
  std::vector<Conversation> gold;
  std::vector<ConversationPrediction> predictions;
};
MetricFixture HandCountedFixture();

// Central finite differences against ExampleLoss gradients. Returns the
// largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// parameter, and the name of the tensor where it occurred.
struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  int64_t checked = 0;
};
GradientCheck CheckGradients(const ModelParams &params,
                             const TrainingExample &example,
                             double alpha, double epsilon, double floor);

}  // namespace ctrack::testing

#endif  // CTRACK_TESTS_SUPPORT_FIXTURES_H_
