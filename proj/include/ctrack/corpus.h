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

#ifndef CTRACK_CORPUS_H_
#define CTRACK_CORPUS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctrack/types.h"

namespace ctrack {

// IDs 0 and 1 always denote the two conversation participants.
inline constexpr int kFirstSenderId = 0;
inline constexpr int kOtherParticipantId = 1;
inline constexpr int kFirstFreeId = 2;

struct GoldReference {
  Span span;
  int entity_id = 0;
  bool is_new = false;
  Properties props;
  std::vector<int> members;  // sorted, unique
  bool proper_name = false;

  bool operator==(const GoldReference &other) const = default;
};

struct Turn {
  std::string sender;
  std::vector<std::string> tokens;
  std::vector<GoldReference> refs;  // ordered by span start

  bool operator==(const Turn &other) const = default;
};

struct Conversation {
  std::string id;
  std::string scenario_id;
  std::array<std::string, 2> participants;  // first sender first
  std::vector<Turn> turns;
  std::optional<int> quality;

  bool operator==(const Conversation &other) const = default;

  // Largest entity ID in the annotations (at least 1 for the participants).
  int MaxEntityId() const;
};

// Syntax errors: malformed JSON, wrong field types, missing fields.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, std::string field_path, const std::string &message);
  int line() const { return line_; }
  const std::string &field_path() const { return field_path_; }

 private:
  int line_;
  std::string field_path_;
};

// Well-formed records that break an annotation invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(int line, std::string invariant, const std::string &message);
  int line() const { return line_; }
  const std::string &invariant() const { return invariant_; }

 private:
  int line_;
  std::string invariant_;
};

struct ParseOptions {
  // Lenient mode ignores unknown fields (with a warning) instead of failing.
  bool lenient = false;
};

struct ParseResult {
  std::vector<Conversation> conversations;
  std::vector<std::string> warnings;
};

// Parses line-delimited conversation records. Blank lines are skipped.
// Throws ParseError or ValidationError on the first bad record.
ParseResult ParseCorpus(std::istream &in, const ParseOptions &options = {});
ParseResult ParseCorpusString(const std::string &text,
                              const ParseOptions &options = {});
ParseResult ParseCorpusFile(const std::string &path,
                            const ParseOptions &options = {});

// Checks every annotation invariant of one conversation. The line number is
// only used for error reporting.
void ValidateConversation(const Conversation &conversation, int line = 0);

// Serializes one conversation as a single-line record (no trailing newline).
std::string SerializeConversation(const Conversation &conversation);
void WriteCorpus(std::ostream &out,
                 const std::vector<Conversation> &conversations);
void WriteCorpusFile(const std::string &path,
                     const std::vector<Conversation> &conversations);

struct CorpusStats {
  int64_t num_conversations = 0;
  int64_t num_turns = 0;
  int64_t num_tokens = 0;
  int64_t num_references = 0;
  double mean_tokens_per_turn = 0.0;
  // Number of turns -> number of conversations with that many turns.
  std::map<int, int64_t> turns_per_conversation_histogram;
  // Number of distinct entities referenced in a turn -> number of turns.
  std::map<int, int64_t> entities_per_turn_histogram;
  // Span text -> count, most frequent first (ties by text).
  std::vector<std::pair<std::string, int64_t>> top_reference_spans;
};

CorpusStats ComputeStats(const std::vector<Conversation> &corpus);

// Replaces the tokens of person-typed proper-name spans with names drawn from
// `name_pool`. Within a conversation each original name maps to one new name
// and distinct original names map to distinct new names.
std::vector<Conversation> AugmentNames(const std::vector<Conversation> &corpus,
                                       const std::vector<std::string> &name_pool,
                                       uint64_t seed);

struct CorpusSplit {
  std::vector<Conversation> train;
  std::vector<Conversation> eval;
};

// Splits by scenario so that no scenario appears on both sides. Scenarios are
// shuffled with `seed` and moved to the eval side until it holds at least
// eval_fraction of the conversations.
CorpusSplit SplitCorpus(const std::vector<Conversation> &corpus,
                        double eval_fraction, uint64_t seed);

}  // namespace ctrack

#endif  // CTRACK_CORPUS_H_
