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

#include "ctrack/evaluation.h"

#include <algorithm>

#include "doctest.h"
#include "support/fixtures.h"

namespace ctrack {
namespace {

GoldReference Ref(int start, int end, int id, bool is_new) {
  GoldReference r;
  r.span = {start, end};
  r.entity_id = id;
  r.is_new = is_new;
  return r;
}

Conversation TwoTurns() {
  Conversation c;
  c.id = "c";
  c.participants = {"a", "b"};
  Turn t0;
  t0.sender = "a";
  t0.tokens = {"i", "met", "x"};
  t0.refs = {Ref(0, 1, 0, false), Ref(2, 3, 2, true)};
  Turn t1;
  t1.sender = "b";
  t1.tokens = {"x", "and", "you"};
  t1.refs = {Ref(0, 1, 2, false), Ref(2, 3, 0, false)};
  c.turns = {t0, t1};
  return c;
}

ReferenceOutcome Outcome(int turn, bool detected, bool correct,
                         const std::string &text = "x") {
  return {turn, text, detected, correct};
}

TEST_SUITE("evaluation") {

TEST_CASE("precision, recall and F1") {
  Counts c{3, 3, 2};
  CHECK(c.precision() == 0.5);
  CHECK(c.recall() == 0.6);
  CHECK(c.f1() == doctest::Approx(6.0 / 11.0));
  Counts zero;
  CHECK(zero.precision() == 0.0);
  CHECK(zero.recall() == 0.0);
  CHECK(zero.f1() == 0.0);
  c += Counts{1, 0, 1};
  CHECK(c == Counts{4, 3, 3});
}

TEST_CASE("exact-span alignment") {
  const std::vector<GoldReference> gold = {Ref(0, 1, 0, false),
                                           Ref(2, 4, 2, true),
                                           Ref(5, 6, 3, true)};
  const std::vector<GoldReference> pred = {Ref(2, 4, 7, true),
                                           Ref(2, 3, 2, true),
                                           Ref(0, 1, 1, false)};
  const Alignment a = MatchReferences(gold, pred);
  CHECK(a.matched == std::vector<std::pair<int, int>>{{0, 2}, {1, 0}});
  CHECK(a.unmatched_gold == std::vector<int>{2});
  CHECK(a.unmatched_pred == std::vector<int>{1});
}

TEST_CASE("hand-counted corpus") {
  const testing::MetricFixture f = testing::HandCountedFixture();
  const EndpointMetrics m = ScoreCorpus(f.gold, f.predictions, false);
  CHECK(m.new_entities == Counts{5, 1, 1});
  CHECK(m.existing_id == Counts{3, 3, 2});
  CHECK(m.properties == Counts{27, 3, 3});
  CHECK(m.membership == Counts{3, 0, 1});
  CHECK(m.existing_id.f1() == doctest::Approx(6.0 / 11.0));
  CHECK(m.properties.f1() == doctest::Approx(0.9));
  CHECK(m.membership.f1() == doctest::Approx(6.0 / 7.0));
  CHECK_THROWS(ScoreCorpus(f.gold, {f.predictions[0]}, false));
}

TEST_CASE("entities are linked through their first mention") {
  const Conversation gold = TwoTurns();
  // The prediction calls x entity 5; later mentions must follow.
  ConversationPrediction pred = {{Ref(0, 1, 0, false), Ref(2, 3, 5, true)},
                                 {Ref(0, 1, 5, false), Ref(2, 3, 1, false)}};
  ConversationScore s = ScoreConversation(gold, pred, false);
  CHECK(s.metrics.new_entities == Counts{1, 0, 0});
  CHECK(s.metrics.existing_id == Counts{2, 1, 1});
  REQUIRE(s.outcomes.size() == 4);
  CHECK(s.outcomes[2].detected);
  CHECK(s.outcomes[2].id_correct);
  CHECK(s.outcomes[3].detected);
  CHECK_FALSE(s.outcomes[3].id_correct);
  CHECK(s.outcomes[0].text == "i");
}

TEST_CASE("teacher forcing restores gold identities each turn") {
  const Conversation gold = TwoTurns();
  // x is missed in turn 0; in turn 1 the gold repository holds it as 2.
  ConversationPrediction pred = {{Ref(0, 1, 0, false)},
                                 {Ref(0, 1, 2, false), Ref(2, 3, 0, false)}};
  const ConversationScore with_tf = ScoreConversation(gold, pred, true);
  const ConversationScore without_tf = ScoreConversation(gold, pred, false);
  CHECK(with_tf.metrics.existing_id == Counts{3, 0, 0});
  CHECK(without_tf.metrics.existing_id == Counts{2, 1, 1});
  CHECK(with_tf.metrics.new_entities == Counts{0, 0, 1});
}

TEST_CASE("accuracy per turn with pooling") {
  const std::vector<ReferenceOutcome> with_tf = {
      Outcome(0, true, true), Outcome(1, true, true), Outcome(1, true, false),
      Outcome(3, true, true), Outcome(5, false, false)};
  const std::vector<ReferenceOutcome> without_tf = {
      Outcome(0, true, true), Outcome(1, true, false), Outcome(1, true, false),
      Outcome(3, false, false), Outcome(5, true, true)};
  const auto rows = ErrorPropagationFromOutcomes(with_tf, without_tf, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].accuracy_with_tf == 1.0);
  CHECK(rows[1].references_with_tf == 2);
  CHECK(rows[1].accuracy_with_tf == 0.5);
  CHECK(rows[1].accuracy_without_tf == 0.0);
  CHECK(rows[1].difference == 0.5);
  CHECK(rows[2].turn_index == 2);
  CHECK(rows[2].references_without_tf == 2);
  CHECK(rows[2].accuracy_with_tf == 0.5);
  CHECK(rows[2].accuracy_without_tf == 0.5);
}

TEST_CASE("per-token report") {
  const std::vector<ReferenceOutcome> outcomes = {
      Outcome(0, true, true, "she"), Outcome(1, true, false, "paris"),
      Outcome(2, false, false, "she"), Outcome(2, true, true, "she"),
      Outcome(3, true, true, "he")};
  const auto rows = PerTokenReport(outcomes, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].text == "she");
  CHECK(rows[0].count == 3);
  CHECK(rows[0].detection_rate == doctest::Approx(2.0 / 3.0));
  CHECK(rows[0].id_accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(rows[1].text == "he");  // ties in alphabetical order
  const OverallRates overall = ComputeOverallRates(outcomes);
  CHECK(overall.references == 5);
  CHECK(overall.detection_rate == 0.8);
  CHECK(overall.id_accuracy == 0.6);
}

TEST_CASE("tracking the gold scores perfectly") {
  FeatureLayout layout = testing::TinyLayout();
  layout.capacity = 10;
  testing::TestPipeline pipeline(layout);
  const GoldScorer scorer(layout);
  const Tracker tracker(&pipeline.encoder(), &scorer);
  const auto corpus = testing::GenerateCorpus(6, 3);
  for (bool tf : {false, true}) {
    const EndpointMetrics m = Evaluate(corpus, tracker, tf);
    CHECK(m.new_entities.f1() == 1.0);
    CHECK(m.existing_id.f1() == 1.0);
    CHECK(m.properties.f1() == 1.0);
    CHECK(m.new_entities.fp + m.existing_id.fn == 0);
  }
  for (const auto &row : ErrorPropagationStudy(corpus, tracker, 4)) {
    CHECK(row.difference == 0.0);
  }
}

TEST_CASE("report formats") {
  EndpointMetrics m;
  m.new_entities = {1, 1, 0};
  const std::string text = FormatMetrics(m, ReportFormat::kText);
  CHECK(text.find("new") != std::string::npos);
  CHECK(text.find("50.0") != std::string::npos);
  const std::string records = FormatMetrics(m, ReportFormat::kRecords);
  CHECK(records.find(R"("endpoint":"new_entities")") != std::string::npos);
  CHECK(records.find(R"("tp":1)") != std::string::npos);
  CHECK(std::count(records.begin(), records.end(), '\n') == 4);

  const std::string tokens =
      FormatTokenReport({{"she", 3, 1.0, 0.5}}, ReportFormat::kRecords);
  CHECK(tokens.find(R"("text":"she")") != std::string::npos);
  const std::string overall = FormatOverall({4, 0.5, 0.25}, ReportFormat::kText);
  CHECK(overall.find("25.0") != std::string::npos);
  CHECK_FALSE(FormatPropagation({}, ReportFormat::kText).empty());
}

}  // TEST_SUITE

}  // namespace
}  // namespace ctrack
