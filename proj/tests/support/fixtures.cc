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

#include "support/fixtures.h"

#include <algorithm>
#include <cmath>

#include "ctrack/random.h"
#include "ctrack/training.h"

namespace ctrack::testing {

namespace {

GoldReference Ref(int start, int end, int id, bool is_new, EntityType type,
                  Gender gender, Number number, std::vector<int> members = {},
                  bool proper_name = false) {
  GoldReference ref;
  ref.span = {start, end};
  ref.entity_id = id;
  ref.is_new = is_new;
  ref.props = {type, gender, number};
  ref.members = std::move(members);
  ref.proper_name = proper_name;
  return ref;
}

GoldReference Person(int start, int end, int id, bool is_new, Gender gender,
                     bool proper_name = false) {
  return Ref(start, end, id, is_new, EntityType::kPerson, gender,
             Number::kSingular, {}, proper_name);
}

GoldReference Place(int start, int end, int id, bool is_new) {
  return Ref(start, end, id, is_new, EntityType::kLocation, Gender::kUnknown,
             Number::kSingular);
}

GoldReference Group(int start, int end, int id, bool is_new,
                    std::vector<int> members) {
  return Ref(start, end, id, is_new, EntityType::kPerson, Gender::kUnknown,
             Number::kPlural, std::move(members));
}

std::vector<std::string> Words(const std::string &text) {
  std::vector<std::string> words;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t next = text.find(' ', pos);
    const size_t end = next == std::string::npos ? text.size() : next;
    if (end > pos) words.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return words;
}

Turn MakeTurn(const std::string &sender, const std::string &text,
              std::vector<GoldReference> refs) {
  return {sender, Words(text), std::move(refs)};
}

}  // namespace

Conversation VacationConversation() {
  Conversation c;
  c.id = "vacation";
  c.scenario_id = "parents-trip";
  c.participants = {"alice", "bob"};
  c.turns.push_back(MakeTurn(
      "alice", "how did mom and dad like the vacation in paris ?",
      {Person(2, 3, 2, true, Gender::kFemale),
       Person(4, 5, 3, true, Gender::kMale), Place(9, 10, 4, true)}));
  c.turns.push_back(MakeTurn(
      "bob", "they loved it there . pops did not want to leave .",
      {Group(0, 1, 5, true, {2, 3}), Place(3, 4, 4, false),
       Person(5, 6, 3, false, Gender::kMale)}));
  return c;
}

FeatureLayout TinyLayout() {
  FeatureLayout layout;
  layout.capacity = 5;
  layout.history = 3;
  layout.num_lexicons = 1;
  layout.context_free_dim = 4;
  layout.contextual_dim = 4;
  return layout;
}

const std::vector<std::string> &FemaleNames() {
  static const std::vector<std::string> names = {
      "anna", "emma", "laura", "sophia", "olivia", "grace", "julie", "maria"};
  return names;
}

const std::vector<std::string> &MaleNames() {
  static const std::vector<std::string> names = {
      "james", "peter", "mark", "george", "henry", "paul", "jack", "louis"};
  return names;
}

TestPipeline::TestPipeline(const FeatureLayout &layout, uint64_t seed,
                           int window)
    : word_(layout.context_free_dim, seed),
      context_base_(layout.contextual_dim, MixSeed(seed, 1)),
      contextual_(&context_base_, window) {
  std::vector<std::string> names = FemaleNames();
  names.insert(names.end(), MaleNames().begin(), MaleNames().end());
  lexicon_ = Lexicon(names);
  EncoderResources resources;
  resources.context_free = &word_;
  resources.contextual = &contextual_;
  resources.lexicons = {&lexicon_};
  encoder_ = std::make_unique<FeatureEncoder>(layout, resources);
}

namespace {

const std::vector<std::string> kHandles = {"alice", "bob",  "carol", "dave",
                                           "erin",  "frank", "gina", "hugo"};
const std::vector<std::string> kPlaces = {"paris",  "rome",   "berlin",
                                          "london", "tokyo",  "madrid",
                                          "new york", "los angeles"};
const std::vector<std::string> kFillers = {
    "did",  "like", "the", "trip",  "with", "went",  "to",    "and",
    "really", "was", "great", "so", "visit", "saw", "love", "call",
    "maybe", "also", "today", "now"};

enum Slot { kFemale, kMale, kPlace, kWe, kThey, kNumSlots };

struct Mention {
  std::vector<std::string> words;
  GoldReference ref;
};

}  // namespace

std::vector<Conversation> GenerateCorpus(int count, uint64_t seed,
                                         const SyntheticOptions &options) {
  std::vector<Conversation> corpus;
  for (int index = 0; index < count; ++index) {
    Rng rng(MixSeed(seed, static_cast<uint64_t>(index)));
    Conversation c;
    c.id = "synthetic-" + std::to_string(index);
    c.scenario_id = "scenario-" + std::to_string(index / 2);
    const int first = rng.UniformInt(kHandles.size());
    int second = rng.UniformInt(kHandles.size() - 1);
    if (second >= first) ++second;
    c.participants = {kHandles[first], kHandles[second]};

    // Which entities this conversation may introduce.
    std::vector<bool> wanted(kNumSlots, false);
    wanted[kFemale] = rng.Uniform() < 0.85;
    wanted[kMale] = rng.Uniform() < 0.85;
    wanted[kPlace] = rng.Uniform() < 0.75;
    wanted[kWe] = rng.Uniform() < 0.5;
    wanted[kThey] = wanted[kFemale] && wanted[kMale] && rng.Uniform() < 0.6;
    int budget = options.max_entities - 2;
    for (int s = 0; s < kNumSlots; ++s) {
      if (wanted[s] && budget > 0) {
        --budget;
      } else {
        wanted[s] = false;
      }
    }

    const bool mom = rng.Uniform() < 0.3;
    const bool dad = rng.Uniform() < 0.3;
    const std::string female =
        mom ? "mom" : FemaleNames()[rng.UniformInt(FemaleNames().size())];
    const std::string male =
        dad ? "dad" : MaleNames()[rng.UniformInt(MaleNames().size())];
    const std::string place = kPlaces[rng.UniformInt(kPlaces.size())];

    std::vector<int> ids(kNumSlots, -1);
    int next_id = kFirstFreeId;
    const int num_turns =
        options.min_turns +
        rng.UniformInt(options.max_turns - options.min_turns + 1);

    auto mention = [&](int slot, bool is_new) {
      Mention m;
      switch (slot) {
        case kFemale:
          m.words = Words(!is_new && rng.Uniform() < 0.6 ? "she" : female);
          m.ref = Person(0, 0, ids[slot], is_new, Gender::kFemale,
                         !mom && m.words[0] == female);
          break;
        case kMale:
          m.words = Words(!is_new && rng.Uniform() < 0.6 ? "he" : male);
          m.ref = Person(0, 0, ids[slot], is_new, Gender::kMale,
                         !dad && m.words[0] == male);
          break;
        case kPlace:
          m.words = Words(!is_new && rng.Uniform() < 0.6 ? "there" : place);
          m.ref = Place(0, 0, ids[slot], is_new);
          break;
        case kWe:
          m.words = {"we"};
          m.ref = Group(0, 0, ids[slot], is_new,
                        {kFirstSenderId, kOtherParticipantId});
          break;
        case kThey:
          m.words = {"they"};
          m.ref = Group(0, 0, ids[slot], is_new,
                        {std::min(ids[kFemale], ids[kMale]),
                         std::max(ids[kFemale], ids[kMale])});
          break;
      }
      return m;
    };

    for (int t = 0; t < num_turns; ++t) {
      const std::string &sender = c.participants[t % 2];
      const int sender_id = t % 2 == 0 ? kFirstSenderId : kOtherParticipantId;
      std::vector<Mention> mentions;

      // At most one new entity per turn, introduced in slot order.
      for (int s = 0; s < kNumSlots; ++s) {
        if (!wanted[s] || ids[s] >= 0) continue;
        if (s == kThey && (ids[kFemale] < 0 || ids[kMale] < 0)) continue;
        if (rng.Uniform() < 0.75) {
          ids[s] = next_id++;
          mentions.push_back(mention(s, true));
        }
        break;
      }
      // Up to two mentions of known entities or participants.
      const int extra = rng.UniformInt(3);
      std::vector<int> used;
      for (int e = 0; e < extra; ++e) {
        std::vector<int> choices;
        for (int s = 0; s < kNumSlots; ++s) {
          if (ids[s] >= 0 && std::find(used.begin(), used.end(), s) ==
                                 used.end()) {
            choices.push_back(s);
          }
        }
        choices.push_back(kNumSlots);      // "i"
        choices.push_back(kNumSlots + 1);  // "you"
        const int pick = choices[rng.UniformInt(choices.size())];
        if (std::find(used.begin(), used.end(), pick) != used.end()) continue;
        used.push_back(pick);
        if (pick == kNumSlots) {
          mentions.push_back({{"i"}, Person(0, 0, sender_id, false,
                                            Gender::kUnknown)});
        } else if (pick == kNumSlots + 1) {
          mentions.push_back({{"you"}, Person(0, 0, 1 - sender_id, false,
                                              Gender::kUnknown)});
        } else if (ids[pick] >= 0 &&
                   !(mentions.size() == 1 && mentions[0].ref.is_new &&
                     mentions[0].ref.entity_id == ids[pick])) {
          mentions.push_back(mention(pick, false));
        }
      }
      if (mentions.empty()) {
        mentions.push_back({{"i"}, Person(0, 0, sender_id, false,
                                          Gender::kUnknown)});
      }
      // Shuffle the extra mentions; the new reference stays first.
      for (size_t i = mentions.size(); i > 2; --i) {
        std::swap(mentions[i - 1], mentions[1 + rng.UniformInt(i - 1)]);
      }

      Turn turn;
      turn.sender = sender;
      for (Mention &m : mentions) {
        const int fillers = rng.UniformInt(3);
        for (int f = 0; f < fillers; ++f) {
          turn.tokens.push_back(kFillers[rng.UniformInt(kFillers.size())]);
        }
        m.ref.span.start = static_cast<int>(turn.tokens.size());
        turn.tokens.insert(turn.tokens.end(), m.words.begin(), m.words.end());
        m.ref.span.end = static_cast<int>(turn.tokens.size());
        turn.refs.push_back(m.ref);
      }
      turn.tokens.push_back(rng.Uniform() < 0.5 ? "." : "?");
      c.turns.push_back(std::move(turn));
    }
    ValidateConversation(c);
    corpus.push_back(std::move(c));
  }
  return corpus;
}

Matrix MissedSpanScorer::Stage1(const FeatureMatrix &features,
                                const Turn &turn) const {
  Matrix logits = gold_.Stage1(features, turn);
  if (turn.tokens == tokens_) {
    for (int i = missed_.start; i < missed_.end; ++i) {
      logits.row(i).setConstant(-2.0);
    }
  }
  return logits;
}

Matrix MissedSpanScorer::Stage2(const FeatureMatrix &features,
                                const Matrix &augmented_rows,
                                const std::vector<int> &fresh_ids,
                                const Turn &turn) const {
  return gold_.Stage2(features, augmented_rows, fresh_ids, turn);
}

PropagationFixture ErrorInjectionFixture() {
  PropagationFixture fixture;
  Conversation &c = fixture.conversation;
  c.id = "injected";
  c.scenario_id = "injected";
  c.participants = {"alice", "bob"};
  c.turns.push_back(
      MakeTurn("alice", "did you talk to mom ?",
               {Person(1, 2, 1, false, Gender::kUnknown),
                Person(4, 5, 2, true, Gender::kFemale)}));
  c.turns.push_back(
      MakeTurn("bob", "yes , she is in paris with dad .",
               {Person(2, 3, 2, false, Gender::kFemale), Place(5, 6, 3, true),
                Person(7, 8, 4, true, Gender::kMale)}));
  c.turns.push_back(MakeTurn("alice", "is it nice there ?",
                             {Place(3, 4, 3, false)}));
  c.turns.push_back(
      MakeTurn("bob", "he loves paris .",
               {Person(0, 1, 4, false, Gender::kMale), Place(2, 3, 3, false)}));
  c.turns.push_back(
      MakeTurn("alice", "i want to visit there too",
               {Person(0, 1, 0, false, Gender::kUnknown),
                Place(4, 5, 3, false)}));
  c.turns.push_back(
      MakeTurn("bob", "you should go to paris with mom",
               {Person(0, 1, 0, false, Gender::kUnknown),
                Place(4, 5, 3, false), Person(6, 7, 2, false, Gender::kFemale)}));
  fixture.missed = {5, 6};
  return fixture;
}

MetricFixture HandCountedFixture() {
  MetricFixture fixture;
  const auto F = Gender::kFemale, M = Gender::kMale, U = Gender::kUnknown;

  Conversation a;
  a.id = "trip";
  a.scenario_id = "trip";
  a.participants = {"alice", "bob"};
  a.turns.push_back(MakeTurn(
      "alice", "mom and dad went to rome",
      {Person(0, 1, 2, true, F), Person(2, 3, 3, true, M),
       Place(5, 6, 4, true)}));
  a.turns.push_back(MakeTurn("bob", "did they like it there ?",
                             {Group(1, 2, 5, true, {2, 3}),
                              Place(5, 6, 4, false)}));
  a.turns.push_back(MakeTurn("alice", "she loved it , he did not",
                             {Person(0, 1, 2, false, F),
                              Person(4, 5, 3, false, M)}));

  Conversation b;
  b.id = "friend";
  b.scenario_id = "friend";
  b.participants = {"carol", "dave"};
  b.turns.push_back(MakeTurn("carol", "we met anna yesterday",
                             {Group(0, 1, 2, true, {0, 1}),
                              Person(2, 3, 3, true, F, true)}));
  b.turns.push_back(MakeTurn("dave", "i liked her",
                             {Person(0, 1, 1, false, U),
                              Person(2, 3, 3, false, F)}));
  fixture.gold = {a, b};

  // Turn 0 misses rome and gets dad's gender wrong. Turn 1 finds the group
  // under the next free ID but links "there" to mom with person properties.
  // Turn 2 adds a spurious "it".
  ConversationPrediction pa = {
      {Person(0, 1, 2, true, F), Person(2, 3, 3, true, F)},
      {Group(1, 2, 4, true, {2, 3}), Person(5, 6, 2, false, F)},
      {Person(0, 1, 2, false, F), Ref(2, 3, 4, false, EntityType::kPerson, U,
                                      Number::kSingular),
       Person(4, 5, 3, false, M)}};
  // Turn 0 loses a group member and adds a spurious new entity. Turn 1
  // resolves "i" to the wrong participant.
  ConversationPrediction pb = {
      {Group(0, 1, 2, true, {0}), Person(2, 3, 3, true, F, true),
       Place(3, 4, 4, true)},
      {Person(0, 1, 0, false, U), Person(2, 3, 3, false, F)}};
  fixture.predictions = {pa, pb};
  return fixture;
}

GradientCheck CheckGradients(const ModelParams &params,
                             const TrainingExample &example, double alpha,
                             double epsilon, double floor) {
  ModelParams grads = params.ZerosLike();
  ExampleLoss(params, example, alpha, &grads);
  ModelParams probe = params;
  const auto names = probe.TensorNames();
  auto tensors = probe.Tensors();
  const auto analytic = grads.Tensors();
  GradientCheck result;
  for (size_t t = 0; t < tensors.size(); ++t) {
    Matrix &w = *tensors[t];
    for (long i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + epsilon;
      const double up = ExampleLoss(probe, example, alpha).total;
      w.data()[i] = saved - epsilon;
      const double down = ExampleLoss(probe, example, alpha).total;
      w.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[t]->data()[i];
      const double scale = std::max({std::abs(a), std::abs(numeric), floor});
      const double error = std::abs(a - numeric) / scale;
      if (error > result.max_relative_error) {
        result.max_relative_error = error;
        result.worst_tensor = names[t];
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace ctrack::testing
