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

#ifndef CTRACK_REPOSITORY_H_
#define CTRACK_REPOSITORY_H_

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctrack/corpus.h"
#include "ctrack/embedding.h"
#include "ctrack/types.h"

namespace ctrack {

inline constexpr int kDefaultCapacity = 20;

// One entity reference: a span in some turn together with the entity it
// denotes. Participants are represented by two seeded references with
// turn_index -1.
struct EntityReference {
  int entity_id = 0;
  bool is_new = false;
  Properties props;
  std::vector<int> members;  // sorted
  int turn_index = -1;
  Span span;  // position in its turn; {0, 0} for seeds
  std::vector<std::string> span_text;
  ParticipantRole role = ParticipantRole::kNone;
  // Running mean of the context-free embeddings of every token that referred
  // to this entity up to and including this reference. Empty when the
  // repository was built without an embedder.
  Vector mention_embedding;
};

bool SameAnnotation(const EntityReference &a, const EntityReference &b);

class RepositoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Spans that could not be given an ID because the capacity was exhausted.
struct AssignResult;

// Ordered store of every entity reference seen so far plus the ID counter.
// Values are immutable; every operation returns a new repository.
class Repository {
 public:
  // Two participant references: ID 0 for the first sender and ID 1 for the
  // other participant. `embedder` may be null.
  static Repository Seed(const std::array<std::string, 2> &participants,
                         int capacity = kDefaultCapacity,
                         const ContextFreeEmbedder *embedder = nullptr);

  // Teacher-forced repository: the seeds plus the gold references of turns
  // [0, num_turns). IDs are taken verbatim (they may be randomized), so
  // next_id is only meaningful for unrandomized conversations.
  // `id_offset` must be the offset the conversation was randomized with; it
  // is applied to the two seeds.
  static Repository FromGold(const Conversation &conversation, int num_turns,
                             int capacity = kDefaultCapacity,
                             const ContextFreeEmbedder *embedder = nullptr,
                             int id_offset = 0);

  // Gives fresh IDs next_id, next_id+1, ... to `spans` (ordered by start).
  // Spans that do not fit into the capacity are reported, not assigned.
  AssignResult AssignNewIds(const std::vector<Span> &spans) const;

  // Appends references after checking their IDs and members. Each
  // reference's mention_embedding is replaced by the entity's running mean.
  Repository AddReferences(std::vector<EntityReference> refs,
                           const ContextFreeEmbedder *embedder = nullptr) const;

  // Marks one more turn as processed.
  Repository AdvanceTurn() const;

  // Drops the reference at `index`; used for lenient length eviction.
  Repository WithoutReference(size_t index) const;

  const std::vector<EntityReference> &refs() const { return refs_; }
  size_t size() const { return refs_.size(); }
  int next_id() const { return next_id_; }
  int capacity() const { return capacity_; }
  int num_turns() const { return num_turns_; }
  const std::array<std::string, 2> &participants() const {
    return participants_;
  }
  bool HasEntity(int id) const;

 private:
  friend Repository ParseRepository(const std::string &text,
                                    const ContextFreeEmbedder *embedder);

  struct Accumulator {
    Vector sum;
    int count = 0;
  };

  void Append(EntityReference ref, const ContextFreeEmbedder *embedder);
  void CheckReference(const EntityReference &ref,
                      const std::vector<EntityReference> &batch) const;

  std::vector<EntityReference> refs_;
  int next_id_ = kFirstFreeId;
  int capacity_ = kDefaultCapacity;
  int num_turns_ = 0;
  std::array<std::string, 2> participants_;
  std::map<int, Accumulator> entities_;
};

struct AssignResult {
  Repository repository;
  std::vector<int> assigned;  // one ID per assigned span, in order
  std::vector<Span> assigned_spans;
  std::vector<Span> dropped;
};

// Adds `offset` to every entity and member ID modulo `capacity`. The map is a
// bijection on [0, capacity), so co-reference structure is preserved.
Conversation RandomizeIds(const Conversation &conversation, int offset,
                          int capacity = kDefaultCapacity);

// Text snapshot: a header record {"next_id", "capacity", "num_turns",
// "participants"} followed by one record per reference.
std::string SerializeRepository(const Repository &repository);
Repository ParseRepository(const std::string &text,
                           const ContextFreeEmbedder *embedder = nullptr);

}  // namespace ctrack

#endif  // CTRACK_REPOSITORY_H_
