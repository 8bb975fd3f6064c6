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

#include "ctrack/repository.h"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace ctrack {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool SameAnnotation(const EntityReference &a, const EntityReference &b) {
  return a.entity_id == b.entity_id && a.is_new == b.is_new &&
         a.props == b.props && a.members == b.members &&
         a.turn_index == b.turn_index && a.span == b.span &&
         a.span_text == b.span_text && a.role == b.role;
}

Repository Repository::Seed(const std::array<std::string, 2> &participants,
                            int capacity,
                            const ContextFreeEmbedder *embedder) {
  if (capacity < 2) {
    throw RepositoryError("repository capacity must be at least 2, got " +
                          std::to_string(capacity));
  }
  Repository repo;
  repo.capacity_ = capacity;
  repo.participants_ = participants;
  for (int i = 0; i < 2; ++i) {
    EntityReference ref;
    ref.entity_id = i;
    ref.is_new = true;
    ref.props = {EntityType::kPerson, Gender::kUnknown, Number::kSingular};
    ref.turn_index = -1;
    ref.span_text = {participants[i]};
    ref.role = i == 0 ? ParticipantRole::kSender : ParticipantRole::kRecipient;
    repo.Append(std::move(ref), embedder);
  }
  repo.next_id_ = kFirstFreeId;
  return repo;
}

Repository Repository::FromGold(const Conversation &conversation,
                                int num_turns, int capacity,
                                const ContextFreeEmbedder *embedder,
                                int id_offset) {
  Repository repo = Seed(conversation.participants, capacity, embedder);
  if (id_offset != 0) {
    repo.entities_.clear();
    std::vector<EntityReference> seeds = std::move(repo.refs_);
    repo.refs_.clear();
    for (EntityReference &seed : seeds) {
      seed.entity_id = ((seed.entity_id + id_offset) % capacity + capacity) %
                       capacity;
      repo.Append(std::move(seed), embedder);
    }
  }
  const int limit =
      std::min<int>(num_turns, static_cast<int>(conversation.turns.size()));
  for (int t = 0; t < limit; ++t) {
    const Turn &turn = conversation.turns[t];
    for (const GoldReference &gold : turn.refs) {
      if (gold.entity_id < 0 || gold.entity_id >= capacity) {
        throw RepositoryError("gold entity ID " +
                              std::to_string(gold.entity_id) +
                              " outside capacity");
      }
      EntityReference ref;
      ref.entity_id = gold.entity_id;
      ref.is_new = gold.is_new;
      ref.props = gold.props;
      ref.members = gold.members;
      ref.turn_index = t;
      ref.span = gold.span;
      ref.span_text.assign(turn.tokens.begin() + gold.span.start,
                           turn.tokens.begin() + gold.span.end);
      repo.Append(std::move(ref), embedder);
    }
  }
  int max_id = -1;
  for (const auto &[id, acc] : repo.entities_) max_id = std::max(max_id, id);
  repo.next_id_ = max_id + 1;
  repo.num_turns_ = limit;
  return repo;
}

bool Repository::HasEntity(int id) const { return entities_.count(id) > 0; }

void Repository::Append(EntityReference ref,
                        const ContextFreeEmbedder *embedder) {
  Accumulator &acc = entities_[ref.entity_id];
  if (embedder != nullptr) {
    if (acc.sum.size() == 0) acc.sum = Vector::Zero(embedder->dim());
    for (const std::string &token : ref.span_text) {
      acc.sum += embedder->Embed(token);
    }
    acc.count += static_cast<int>(ref.span_text.size());
    ref.mention_embedding =
        acc.count > 0 ? Vector(acc.sum / acc.count) : Vector(acc.sum);
  } else {
    ref.mention_embedding = Vector();
  }
  refs_.push_back(std::move(ref));
}

AssignResult Repository::AssignNewIds(const std::vector<Span> &spans) const {
  AssignResult result{*this, {}, {}, {}};
  for (size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].start) {
      throw RepositoryError("new spans must be ordered by start index");
    }
  }
  for (const Span &span : spans) {
    if (result.repository.next_id_ < capacity_) {
      result.assigned.push_back(result.repository.next_id_++);
      result.assigned_spans.push_back(span);
    } else {
      result.dropped.push_back(span);
    }
  }
  return result;
}

void Repository::CheckReference(
    const EntityReference &ref,
    const std::vector<EntityReference> &batch) const {
  if (ref.entity_id < 0 || ref.entity_id >= next_id_) {
    throw RepositoryError("entity ID " + std::to_string(ref.entity_id) +
                          " has not been assigned (next_id " +
                          std::to_string(next_id_) + ")");
  }
  if (ref.entity_id >= capacity_) {
    throw RepositoryError("entity ID " + std::to_string(ref.entity_id) +
                          " exceeds capacity");
  }
  if (!ref.members.empty() && ref.props.number != Number::kPlural) {
    throw RepositoryError("members given for a singular reference");
  }
  for (int member : ref.members) {
    bool known = HasEntity(member);
    for (const EntityReference &earlier : batch) {
      if (earlier.entity_id == member) known = true;
    }
    if (!known || member >= next_id_) {
      throw RepositoryError("unknown member ID " + std::to_string(member));
    }
  }
}

Repository Repository::AddReferences(
    std::vector<EntityReference> refs,
    const ContextFreeEmbedder *embedder) const {
  std::stable_sort(refs.begin(), refs.end(),
                   [](const EntityReference &a, const EntityReference &b) {
                     if (a.turn_index != b.turn_index) {
                       return a.turn_index < b.turn_index;
                     }
                     return a.span.start < b.span.start;
                   });
  if (!refs.empty() && !refs_.empty() &&
      refs.front().turn_index < refs_.back().turn_index) {
    throw RepositoryError("references must be added in chronological order");
  }
  Repository out = *this;
  std::vector<EntityReference> checked;
  for (EntityReference &ref : refs) {
    CheckReference(ref, checked);
    std::sort(ref.members.begin(), ref.members.end());
    checked.push_back(ref);
    out.Append(std::move(ref), embedder);
  }
  return out;
}

Repository Repository::AdvanceTurn() const {
  Repository out = *this;
  ++out.num_turns_;
  return out;
}

Repository Repository::WithoutReference(size_t index) const {
  Repository out = *this;
  out.refs_.erase(out.refs_.begin() + static_cast<long>(index));
  return out;
}

Conversation RandomizeIds(const Conversation &conversation, int offset,
                          int capacity) {
  if (capacity < 1) throw RepositoryError("capacity must be positive");
  auto shift = [&](int id) {
    if (id < 0 || id >= capacity) {
      throw RepositoryError("entity ID " + std::to_string(id) +
                            " outside [0, " + std::to_string(capacity) + ")");
    }
    return ((id + offset) % capacity + capacity) % capacity;
  };
  Conversation out = conversation;
  for (Turn &turn : out.turns) {
    for (GoldReference &ref : turn.refs) {
      ref.entity_id = shift(ref.entity_id);
      for (int &member : ref.members) member = shift(member);
      std::sort(ref.members.begin(), ref.members.end());
    }
  }
  return out;
}

std::string SerializeRepository(const Repository &repo) {
  std::ostringstream out;
  ordered_json header;
  header["next_id"] = repo.next_id();
  header["capacity"] = repo.capacity();
  header["num_turns"] = repo.num_turns();
  header["participants"] = {repo.participants()[0], repo.participants()[1]};
  out << header.dump() << '\n';
  for (const EntityReference &ref : repo.refs()) {
    ordered_json r;
    r["span"] = {ref.span.start, ref.span.end};
    r["entity_id"] = ref.entity_id;
    r["is_new"] = ref.is_new;
    r["type"] = ToString(ref.props.type);
    r["gender"] = ToString(ref.props.gender);
    r["number"] = ToString(ref.props.number);
    r["members"] = ref.members;
    r["turn_index"] = ref.turn_index;
    r["role"] = ToString(ref.role);
    r["text"] = ref.span_text;
    out << r.dump() << '\n';
  }
  return out.str();
}

Repository ParseRepository(const std::string &text,
                           const ContextFreeEmbedder *embedder) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw RepositoryError("empty snapshot");
  json header = json::parse(line);
  std::array<std::string, 2> participants = {
      header.at("participants").at(0).get<std::string>(),
      header.at("participants").at(1).get<std::string>()};
  Repository repo =
      Repository::Seed(participants, header.at("capacity").get<int>());
  repo.refs_.clear();
  repo.entities_.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json r = json::parse(line);
    EntityReference ref;
    ref.span = {r.at("span").at(0).get<int>(), r.at("span").at(1).get<int>()};
    ref.entity_id = r.at("entity_id").get<int>();
    ref.is_new = r.at("is_new").get<bool>();
    auto type = ParseEntityType(r.at("type").get<std::string>());
    auto gender = ParseGender(r.at("gender").get<std::string>());
    auto number = ParseNumber(r.at("number").get<std::string>());
    auto role = ParseParticipantRole(r.at("role").get<std::string>());
    if (!type || !gender || !number || !role) {
      throw RepositoryError("bad property value in snapshot");
    }
    ref.props = {*type, *gender, *number};
    ref.role = *role;
    ref.members = r.at("members").get<std::vector<int>>();
    ref.turn_index = r.at("turn_index").get<int>();
    ref.span_text = r.at("text").get<std::vector<std::string>>();
    repo.Append(std::move(ref), embedder);
  }
  repo.next_id_ = header.at("next_id").get<int>();
  repo.num_turns_ = header.at("num_turns").get<int>();
  return repo;
}

}  // namespace ctrack
