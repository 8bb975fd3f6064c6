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

#include "ctrack/inference.h"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace ctrack {

std::vector<Span> DecodeNewSpans(const Matrix &logits) {
  std::vector<Span> spans;
  bool open = false;
  for (int i = 0; i < static_cast<int>(logits.rows()); ++i) {
    const bool begin = logits(i, 0) > 0.0;
    const bool inside = logits(i, 1) > 0.0;
    if (begin || (inside && !open)) {
      spans.push_back({i, i + 1});
      open = true;
    } else if (inside) {
      spans.back().end = i + 1;
    } else {
      open = false;
    }
  }
  return spans;
}

namespace {

int ArgMax(const Matrix &logits, long row, int offset, int count) {
  int best = 0;
  for (int j = 1; j < count; ++j) {
    if (logits(row, offset + j) > logits(row, offset + best)) best = j;
  }
  return best;
}

}  // namespace

std::vector<TokenDecoding> DecodeStage2(const Matrix &logits,
                                        const FeatureLayout &layout) {
  const int k = layout.capacity;
  if (logits.cols() != layout.stage2_output_dim()) {
    throw std::invalid_argument("stage-2 logits have " +
                                std::to_string(logits.cols()) +
                                " columns, expected " +
                                std::to_string(layout.stage2_output_dim()));
  }
  std::vector<TokenDecoding> out(logits.rows());
  for (long i = 0; i < logits.rows(); ++i) {
    TokenDecoding &d = out[i];
    const int best = ArgMax(logits, i, 0, k);
    if (logits(i, best) > 0.0) d.id = best;
    const int props = k;
    d.props.type = static_cast<EntityType>(
        ArgMax(logits, i, props + kTypeOffset, kNumTypes));
    d.props.gender = static_cast<Gender>(
        ArgMax(logits, i, props + kGenderOffset, kNumGenders));
    d.props.number = static_cast<Number>(
        ArgMax(logits, i, props + kNumberOffset, kNumNumbers));
    if (d.props.number == Number::kPlural) {
      const int members = k + layout.num_properties;
      for (int j = 0; j < k; ++j) {
        if (logits(i, members + j) > 0.0) d.members.push_back(j);
      }
    }
  }
  return out;
}

std::vector<EntityReference> MergeSpans(
    const std::vector<TokenDecoding> &tokens, const std::vector<Span> &new_spans,
    const std::vector<int> &new_ids, const Turn &turn, int turn_index,
    const Repository &repo, MergeDiagnostics *diagnostics) {
  MergeDiagnostics local;
  MergeDiagnostics &diag = diagnostics != nullptr ? *diagnostics : local;
  const int m = static_cast<int>(tokens.size());
  if (m != static_cast<int>(turn.tokens.size())) {
    throw std::invalid_argument("decodings do not match the turn length");
  }
  if (new_ids.size() > new_spans.size()) {
    throw std::invalid_argument("more fresh IDs than new spans");
  }

  // Tokens covered by any stage-1 span, including spans that got no ID.
  std::vector<bool> claimed(m, false);
  for (const Span &span : new_spans) {
    for (int i = span.start; i < span.end; ++i) claimed[i] = true;
  }
  std::set<int> fresh(new_ids.begin(), new_ids.end());
  auto exists = [&](int id) { return repo.HasEntity(id) || fresh.count(id); };

  auto make_ref = [&](Span span, int id, bool is_new) {
    EntityReference ref;
    ref.entity_id = id;
    ref.is_new = is_new;
    ref.turn_index = turn_index;
    ref.span = span;
    ref.span_text.assign(turn.tokens.begin() + span.start,
                         turn.tokens.begin() + span.end);
    const TokenDecoding &first = tokens[span.start];
    ref.props = first.props;
    return ref;
  };

  std::vector<EntityReference> refs;
  for (size_t s = 0; s < new_ids.size(); ++s) {
    refs.push_back(make_ref(new_spans[s], new_ids[s], true));
  }
  for (int i = 0; i < m;) {
    if (claimed[i] || !tokens[i].id) {
      ++i;
      continue;
    }
    const int id = *tokens[i].id;
    if (!exists(id)) {
      diag.unknown_id_tokens.push_back(i);
      ++i;
      continue;
    }
    int j = i + 1;
    while (j < m && !claimed[j] && tokens[j].id == id) ++j;
    refs.push_back(make_ref({i, j}, id, false));
    i = j;
  }
  std::sort(refs.begin(), refs.end(),
            [](const EntityReference &a, const EntityReference &b) {
              return a.span.start < b.span.start;
            });

  // Members must already exist when the group is added: either in the
  // repository or introduced by an earlier new span of this turn.
  std::set<int> introduced;
  for (EntityReference &ref : refs) {
    if (ref.props.number == Number::kPlural) {
      for (int member : tokens[ref.span.start].members) {
        if (member != ref.entity_id &&
            (repo.HasEntity(member) || introduced.count(member))) {
          ref.members.push_back(member);
        } else {
          diag.dropped_members.push_back(member);
        }
      }
    }
    if (ref.is_new) introduced.insert(ref.entity_id);
  }
  return refs;
}

Matrix ModelScorer::Stage1(const FeatureMatrix &features, const Turn &) const {
  return Stage1Forward(*params_, features);
}

Matrix ModelScorer::Stage2(const FeatureMatrix &features,
                           const Matrix &augmented_rows,
                           const std::vector<int> &, const Turn &) const {
  return Stage2Forward(*params_, augmented_rows, features.m);
}

Matrix GoldScorer::Stage1(const FeatureMatrix &features,
                          const Turn &turn) const {
  Matrix logits = Matrix::Constant(features.m, 2, -margin_);
  for (const GoldReference &ref : turn.refs) {
    if (!ref.is_new) continue;
    logits(ref.span.start, 0) = margin_;
    for (int i = ref.span.start + 1; i < ref.span.end; ++i) {
      logits(i, 1) = margin_;
    }
  }
  return logits;
}

Matrix GoldScorer::Stage2(const FeatureMatrix &features, const Matrix &,
                          const std::vector<int> &, const Turn &turn) const {
  const int k = layout_.capacity;
  Matrix logits =
      Matrix::Constant(features.m, layout_.stage2_output_dim(), -margin_);
  for (const GoldReference &ref : turn.refs) {
    for (int i = ref.span.start; i < ref.span.end; ++i) {
      if (ref.entity_id < k) logits(i, ref.entity_id) = margin_;
      for (int bit : ref.props.ActiveBits()) logits(i, k + bit) = margin_;
      for (int member : ref.members) {
        if (member < k) logits(i, k + layout_.num_properties + member) = margin_;
      }
    }
  }
  return logits;
}

Tracker::Tracker(const FeatureEncoder *encoder, const TurnScorer *scorer,
                 TrackOptions options)
    : encoder_(encoder), scorer_(scorer), options_(options) {
  if (encoder == nullptr || scorer == nullptr) {
    throw std::invalid_argument("tracker needs an encoder and a scorer");
  }
}

Repository Tracker::SeedFor(const Conversation &conversation) const {
  return Repository::Seed(conversation.participants,
                          encoder_->layout().capacity,
                          encoder_->resources().context_free);
}

std::pair<TurnPrediction, Repository> Tracker::TrackTurn(
    const Repository &repo, const Turn &turn) const {
  TurnPrediction prediction;
  const int turn_index = repo.num_turns();
  if (turn.tokens.empty()) return {prediction, repo.AdvanceTurn()};

  const FeatureLayout &layout = encoder_->layout();
  FeatureMatrix features =
      encoder_->Encode(repo, turn, turn_index, options_.encode);
  prediction.evicted = features.evicted;

  const std::vector<Span> spans =
      DecodeNewSpans(scorer_->Stage1(features, turn));
  AssignResult assigned = repo.AssignNewIds(spans);
  prediction.dropped_spans = assigned.dropped;

  std::vector<int> fresh_ids(features.m, -1);
  for (size_t s = 0; s < assigned.assigned.size(); ++s) {
    const Span &span = assigned.assigned_spans[s];
    for (int i = span.start; i < span.end; ++i) {
      fresh_ids[i] = assigned.assigned[s];
    }
  }
  const Matrix augmented = AugmentForStage2(features, fresh_ids, layout);
  prediction.per_token = DecodeStage2(
      scorer_->Stage2(features, augmented, fresh_ids, turn), layout);

  // Spans beyond the capacity are merged as claimed-but-unassigned tokens.
  std::vector<Span> ordered = assigned.assigned_spans;
  ordered.insert(ordered.end(), assigned.dropped.begin(),
                 assigned.dropped.end());
  prediction.references =
      MergeSpans(prediction.per_token, ordered, assigned.assigned, turn,
                 turn_index, assigned.repository, &prediction.diagnostics);

  Repository next =
      assigned.repository
          .AddReferences(prediction.references,
                         encoder_->resources().context_free)
          .AdvanceTurn();
  // Report the stored references, which carry the running-mean embeddings.
  const size_t added = prediction.references.size();
  prediction.references.assign(next.refs().end() - static_cast<long>(added),
                               next.refs().end());
  return {std::move(prediction), std::move(next)};
}

std::vector<TurnPrediction> Tracker::TrackConversation(
    const Conversation &conversation, bool teacher_forcing) const {
  std::vector<TurnPrediction> predictions;
  Repository repo = SeedFor(conversation);
  for (size_t t = 0; t < conversation.turns.size(); ++t) {
    if (teacher_forcing) {
      repo = Repository::FromGold(conversation, static_cast<int>(t),
                                  encoder_->layout().capacity,
                                  encoder_->resources().context_free);
    }
    auto [prediction, next] = TrackTurn(repo, conversation.turns[t]);
    predictions.push_back(std::move(prediction));
    repo = std::move(next);
  }
  return predictions;
}

std::vector<GoldReference> ToGoldReferences(
    const std::vector<EntityReference> &refs) {
  std::vector<GoldReference> out;
  for (const EntityReference &ref : refs) {
    GoldReference g;
    g.span = ref.span;
    g.entity_id = ref.entity_id;
    g.is_new = ref.is_new;
    g.props = ref.props;
    g.members = ref.members;
    out.push_back(std::move(g));
  }
  return out;
}

std::string SerializePrediction(const std::string &conversation_id,
                                int turn_index, const TurnPrediction &pred) {
  nlohmann::ordered_json record;
  record["conversation_id"] = conversation_id;
  record["turn"] = turn_index;
  nlohmann::ordered_json refs = nlohmann::ordered_json::array();
  for (const GoldReference &ref : ToGoldReferences(pred.references)) {
    nlohmann::ordered_json r;
    r["span"] = {ref.span.start, ref.span.end};
    r["entity_id"] = ref.entity_id;
    r["is_new"] = ref.is_new;
    r["type"] = ToString(ref.props.type);
    r["gender"] = ToString(ref.props.gender);
    r["number"] = ToString(ref.props.number);
    r["members"] = ref.members;
    r["proper_name"] = false;
    refs.push_back(std::move(r));
  }
  record["refs"] = std::move(refs);
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (const Span &span : pred.dropped_spans) {
    dropped.push_back({span.start, span.end});
  }
  record["dropped_spans"] = std::move(dropped);
  return record.dump();
}

}  // namespace ctrack
