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

#ifndef CTRACK_EVALUATION_H_
#define CTRACK_EVALUATION_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctrack/corpus.h"
#include "ctrack/inference.h"

namespace ctrack {

struct Counts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  Counts &operator+=(const Counts &other);
  bool operator==(const Counts &other) const = default;
};

struct EndpointMetrics {
  Counts new_entities;
  Counts existing_id;
  Counts properties;
  Counts membership;

  EndpointMetrics &operator+=(const EndpointMetrics &other);
};

// Exact-span alignment between the gold and predicted references of a turn.
struct Alignment {
  std::vector<std::pair<int, int>> matched;  // (gold index, pred index)
  std::vector<int> unmatched_gold;
  std::vector<int> unmatched_pred;
};

Alignment MatchReferences(const std::vector<GoldReference> &gold,
                          const std::vector<GoldReference> &pred);

// Predicted references per turn of one conversation.
using ConversationPrediction = std::vector<std::vector<GoldReference>>;

ConversationPrediction ToConversationPrediction(
    const std::vector<TurnPrediction> &turns);

// Per-reference outcome shared by every report.
struct ReferenceOutcome {
  int turn_index = 0;
  std::string text;
  bool detected = false;    // a prediction with the exact span exists
  bool id_correct = false;  // detected with the corresponding entity ID
};

struct ConversationScore {
  EndpointMetrics metrics;
  std::vector<ReferenceOutcome> outcomes;  // one per gold reference
};

// Scores one conversation. Predicted IDs are arbitrary labels, so gold and
// predicted entities are linked through matched new-entity references (and
// the participants, which always keep IDs 0 and 1). With teacher forcing the
// repository is gold at every turn, so entities from earlier turns keep
// their gold IDs.
ConversationScore ScoreConversation(const Conversation &gold,
                                    const ConversationPrediction &prediction,
                                    bool teacher_forcing);

EndpointMetrics ScoreCorpus(const std::vector<Conversation> &corpus,
                            const std::vector<ConversationPrediction> &preds,
                            bool teacher_forcing);

EndpointMetrics Evaluate(const std::vector<Conversation> &corpus,
                         const Tracker &tracker, bool teacher_forcing);

struct TurnAccuracyRow {
  int turn_index = 0;
  int64_t references_with_tf = 0;
  int64_t references_without_tf = 0;
  double accuracy_with_tf = 0.0;
  double accuracy_without_tf = 0.0;
  double difference = 0.0;  // with - without
};

// Entity-ID accuracy per turn index with and without teacher forcing. Turns
// at or beyond `max_turn` are pooled into the last row.
std::vector<TurnAccuracyRow> ErrorPropagationStudy(
    const std::vector<Conversation> &corpus, const Tracker &tracker,
    int max_turn = 9);

std::vector<TurnAccuracyRow> ErrorPropagationFromOutcomes(
    const std::vector<ReferenceOutcome> &with_tf,
    const std::vector<ReferenceOutcome> &without_tf, int max_turn = 9);

struct TokenReportRow {
  std::string text;
  int64_t count = 0;
  double detection_rate = 0.0;
  double id_accuracy = 0.0;
};

// Groups outcomes by gold span text, most frequent first and ties in
// alphabetical order.
std::vector<TokenReportRow> PerTokenReport(
    const std::vector<ReferenceOutcome> &outcomes, int top_n = 20);

struct OverallRates {
  int64_t references = 0;
  double detection_rate = 0.0;
  double id_accuracy = 0.0;
};

OverallRates ComputeOverallRates(const std::vector<ReferenceOutcome> &outcomes);

enum class ReportFormat { kText, kRecords };

std::string FormatMetrics(const EndpointMetrics &metrics, ReportFormat format);
std::string FormatPropagation(const std::vector<TurnAccuracyRow> &rows,
                              ReportFormat format);
std::string FormatTokenReport(const std::vector<TokenReportRow> &rows,
                              ReportFormat format);
std::string FormatOverall(const OverallRates &rates, ReportFormat format);

}  // namespace ctrack

#endif  // CTRACK_EVALUATION_H_
