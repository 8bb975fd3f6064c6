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

#include "ctrack/corpus.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ctrack/random.h"
#include "json.hpp"

namespace ctrack {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view ToString(EntityType type) {
  return type == EntityType::kPerson ? "person" : "location";
}

std::string_view ToString(Gender gender) {
  switch (gender) {
    case Gender::kFemale: return "female";
    case Gender::kMale: return "male";
    case Gender::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view ToString(Number number) {
  return number == Number::kSingular ? "singular" : "plural";
}

std::string_view ToString(ParticipantRole role) {
  switch (role) {
    case ParticipantRole::kSender: return "sender";
    case ParticipantRole::kRecipient: return "recipient";
    case ParticipantRole::kNone: return "none";
  }
  return "none";
}

std::optional<EntityType> ParseEntityType(std::string_view s) {
  if (s == "person") return EntityType::kPerson;
  if (s == "location") return EntityType::kLocation;
  return std::nullopt;
}

std::optional<Gender> ParseGender(std::string_view s) {
  if (s == "female") return Gender::kFemale;
  if (s == "male") return Gender::kMale;
  if (s == "unknown") return Gender::kUnknown;
  return std::nullopt;
}

std::optional<Number> ParseNumber(std::string_view s) {
  if (s == "singular") return Number::kSingular;
  if (s == "plural") return Number::kPlural;
  return std::nullopt;
}

std::optional<ParticipantRole> ParseParticipantRole(std::string_view s) {
  if (s == "sender") return ParticipantRole::kSender;
  if (s == "recipient") return ParticipantRole::kRecipient;
  if (s == "none") return ParticipantRole::kNone;
  return std::nullopt;
}

std::string Lowercase(std::string_view s) {
  std::string out(s);
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string JoinTokens(const std::vector<std::string> &tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

int Conversation::MaxEntityId() const {
  int max_id = kOtherParticipantId;
  for (const Turn &turn : turns) {
    for (const GoldReference &ref : turn.refs) {
      max_id = std::max(max_id, ref.entity_id);
    }
  }
  return max_id;
}

ParseError::ParseError(int line, std::string field_path,
                       const std::string &message)
    : std::runtime_error("line " + std::to_string(line) + ": " + field_path +
                         ": " + message),
      line_(line),
      field_path_(std::move(field_path)) {}

ValidationError::ValidationError(int line, std::string invariant,
                                 const std::string &message)
    : std::runtime_error("line " + std::to_string(line) + ": invariant '" +
                         invariant + "' violated: " + message),
      line_(line),
      invariant_(std::move(invariant)) {}

namespace {

// Walks one JSON record, tracking the field path for error messages.
class RecordReader {
 public:
  RecordReader(int line, const ParseOptions &options,
               std::vector<std::string> *warnings)
      : line_(line), options_(options), warnings_(warnings) {}

  Conversation Read(const json &record) {
    CheckFields(record, "", {"id", "scenario_id", "participants", "turns",
                             "quality"});
    Conversation conversation;
    conversation.id = GetString(record, "", "id");
    conversation.scenario_id = GetString(record, "", "scenario_id");

    const json &participants = Get(record, "", "participants");
    if (!participants.is_array() || participants.size() != 2) {
      throw ParseError(line_, "participants", "expected array of 2 strings");
    }
    for (int i = 0; i < 2; ++i) {
      if (!participants[i].is_string()) {
        throw ParseError(line_, "participants[" + std::to_string(i) + "]",
                         "expected string");
      }
      conversation.participants[i] =
          Lowercase(participants[i].get<std::string>());
    }

    const json &turns = Get(record, "", "turns");
    if (!turns.is_array()) throw ParseError(line_, "turns", "expected array");
    for (size_t t = 0; t < turns.size(); ++t) {
      conversation.turns.push_back(
          ReadTurn(turns[t], "turns[" + std::to_string(t) + "]"));
    }

    if (record.contains("quality") && !record["quality"].is_null()) {
      if (!record["quality"].is_number_integer()) {
        throw ParseError(line_, "quality", "expected integer");
      }
      conversation.quality = record["quality"].get<int>();
    }
    return conversation;
  }

 private:
  Turn ReadTurn(const json &value, const std::string &path) {
    if (!value.is_object()) throw ParseError(line_, path, "expected object");
    CheckFields(value, path, {"sender", "tokens", "refs"});
    Turn turn;
    turn.sender = Lowercase(GetString(value, path, "sender"));
    const json &tokens = Get(value, path, "tokens");
    if (!tokens.is_array()) {
      throw ParseError(line_, path + ".tokens", "expected array");
    }
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (!tokens[i].is_string()) {
        throw ParseError(line_, path + ".tokens[" + std::to_string(i) + "]",
                         "expected string");
      }
      turn.tokens.push_back(Lowercase(tokens[i].get<std::string>()));
    }
    const json &refs = Get(value, path, "refs");
    if (!refs.is_array()) {
      throw ParseError(line_, path + ".refs", "expected array");
    }
    for (size_t i = 0; i < refs.size(); ++i) {
      turn.refs.push_back(
          ReadReference(refs[i], path + ".refs[" + std::to_string(i) + "]"));
    }
    std::stable_sort(turn.refs.begin(), turn.refs.end(),
                     [](const GoldReference &a, const GoldReference &b) {
                       return a.span.start < b.span.start;
                     });
    return turn;
  }

  GoldReference ReadReference(const json &value, const std::string &path) {
    if (!value.is_object()) throw ParseError(line_, path, "expected object");
    CheckFields(value, path, {"span", "entity_id", "is_new", "type", "gender",
                              "number", "members", "proper_name"});
    GoldReference ref;
    const json &span = Get(value, path, "span");
    if (!span.is_array() || span.size() != 2 ||
        !span[0].is_number_integer() || !span[1].is_number_integer()) {
      throw ParseError(line_, path + ".span", "expected [start, end]");
    }
    ref.span = {span[0].get<int>(), span[1].get<int>()};
    const json &id = Get(value, path, "entity_id");
    if (!id.is_number_integer()) {
      throw ParseError(line_, path + ".entity_id", "expected integer");
    }
    ref.entity_id = id.get<int>();
    ref.is_new = GetBool(value, path, "is_new");

    auto type = ParseEntityType(GetString(value, path, "type"));
    if (!type) throw ParseError(line_, path + ".type", "unknown entity type");
    auto gender = ParseGender(GetString(value, path, "gender"));
    if (!gender) throw ParseError(line_, path + ".gender", "unknown gender");
    auto number = ParseNumber(GetString(value, path, "number"));
    if (!number) throw ParseError(line_, path + ".number", "unknown number");
    ref.props = {*type, *gender, *number};

    const json &members = Get(value, path, "members");
    if (!members.is_array()) {
      throw ParseError(line_, path + ".members", "expected array");
    }
    for (size_t i = 0; i < members.size(); ++i) {
      if (!members[i].is_number_integer()) {
        throw ParseError(line_, path + ".members[" + std::to_string(i) + "]",
                         "expected integer");
      }
      ref.members.push_back(members[i].get<int>());
    }
    std::sort(ref.members.begin(), ref.members.end());
    ref.members.erase(std::unique(ref.members.begin(), ref.members.end()),
                      ref.members.end());
    ref.proper_name = GetBool(value, path, "proper_name");
    return ref;
  }

  const json &Get(const json &object, const std::string &path,
                  const char *field) {
    auto it = object.find(field);
    if (it == object.end()) {
      throw ParseError(line_, Join(path, field), "missing field");
    }
    return *it;
  }

  std::string GetString(const json &object, const std::string &path,
                        const char *field) {
    const json &value = Get(object, path, field);
    if (!value.is_string()) {
      throw ParseError(line_, Join(path, field), "expected string");
    }
    return value.get<std::string>();
  }

  bool GetBool(const json &object, const std::string &path,
               const char *field) {
    const json &value = Get(object, path, field);
    if (!value.is_boolean()) {
      throw ParseError(line_, Join(path, field), "expected boolean");
    }
    return value.get<bool>();
  }

  void CheckFields(const json &object, const std::string &path,
                   std::initializer_list<const char *> known) {
    for (auto it = object.begin(); it != object.end(); ++it) {
      bool found = false;
      for (const char *name : known) {
        if (it.key() == name) found = true;
      }
      if (found) continue;
      if (!options_.lenient) {
        throw ParseError(line_, Join(path, it.key().c_str()),
                         "unknown field");
      }
      warnings_->push_back("line " + std::to_string(line_) +
                           ": ignoring unknown field " +
                           Join(path, it.key().c_str()));
    }
  }

  static std::string Join(const std::string &path, const char *field) {
    return path.empty() ? std::string(field) : path + "." + field;
  }

  int line_;
  const ParseOptions &options_;
  std::vector<std::string> *warnings_;
};

bool HasWhitespace(const std::string &s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
  });
}

}  // namespace

void ValidateConversation(const Conversation &c, int line) {
  auto fail = [line](const char *invariant, const std::string &message) {
    throw ValidationError(line, invariant, message);
  };

  if (c.participants[0] == c.participants[1]) {
    fail("participants.distinct", "participants must differ");
  }
  if (!c.turns.empty() && c.turns[0].sender != c.participants[0]) {
    fail("participants.order",
         "first participant must be the sender of the first turn");
  }
  if (c.quality && (*c.quality < 1 || *c.quality > 5)) {
    fail("quality.range", "quality must be in 1..5");
  }

  // Entity IDs known so far; 0 and 1 are the participants.
  std::set<int> known = {kFirstSenderId, kOtherParticipantId};
  int next_id = kFirstFreeId;
  for (size_t t = 0; t < c.turns.size(); ++t) {
    const Turn &turn = c.turns[t];
    const std::string where = "turn " + std::to_string(t);
    if (turn.sender != c.participants[0] && turn.sender != c.participants[1]) {
      fail("sender.participant", where + ": unknown sender '" + turn.sender +
                                     "'");
    }
    for (size_t i = 0; i < turn.tokens.size(); ++i) {
      if (turn.tokens[i].empty() || HasWhitespace(turn.tokens[i])) {
        fail("token.text", where + ": token " + std::to_string(i) +
                               " is empty or contains whitespace");
      }
    }
    const int num_tokens = static_cast<int>(turn.tokens.size());
    for (size_t r = 0; r < turn.refs.size(); ++r) {
      const GoldReference &ref = turn.refs[r];
      const std::string at = where + " ref " + std::to_string(r);
      if (ref.span.end <= ref.span.start) {
        fail("span.nonempty", at + ": span end must exceed start");
      }
      if (ref.span.start < 0 || ref.span.end > num_tokens) {
        fail("span.bounds", at + ": span outside the turn's tokens");
      }
      if (r > 0 && turn.refs[r - 1].span.Overlaps(ref.span)) {
        fail("span.overlap", at + ": overlaps the previous reference");
      }
      if (ref.entity_id < 0) fail("id.range", at + ": negative entity ID");
      if (!ref.members.empty() && ref.props.number != Number::kPlural) {
        fail("members.plural", at + ": members given for a singular reference");
      }
      if (ref.members.empty() && ref.props.number == Number::kPlural) {
        fail("members.plural", at + ": plural reference without members");
      }
      if (ref.is_new) {
        if (ref.entity_id != next_id) {
          fail("id.order", at + ": new entity has ID " +
                               std::to_string(ref.entity_id) + ", expected " +
                               std::to_string(next_id));
        }
      } else if (!known.count(ref.entity_id)) {
        fail("id.known", at + ": entity " + std::to_string(ref.entity_id) +
                             " referenced before it was introduced");
      }
      for (int member : ref.members) {
        if (member == ref.entity_id) {
          fail("members.self", at + ": group lists itself as a member");
        }
        if (!known.count(member)) {
          fail("members.known", at + ": member " + std::to_string(member) +
                                    " not introduced yet");
        }
      }
      if (ref.is_new) {
        known.insert(ref.entity_id);
        ++next_id;
      }
    }
  }
}

ParseResult ParseCorpus(std::istream &in, const ParseOptions &options) {
  ParseResult result;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ParseError(line, "<record>", e.what());
    }
    if (!record.is_object()) {
      throw ParseError(line, "<record>", "expected a JSON object");
    }
    RecordReader reader(line, options, &result.warnings);
    Conversation conversation = reader.Read(record);
    ValidateConversation(conversation, line);
    result.conversations.push_back(std::move(conversation));
  }
  return result;
}

ParseResult ParseCorpusString(const std::string &text,
                              const ParseOptions &options) {
  std::istringstream in(text);
  return ParseCorpus(in, options);
}

ParseResult ParseCorpusFile(const std::string &path,
                            const ParseOptions &options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);
  return ParseCorpus(in, options);
}

std::string SerializeConversation(const Conversation &c) {
  ordered_json record;
  record["id"] = c.id;
  record["scenario_id"] = c.scenario_id;
  record["participants"] = {c.participants[0], c.participants[1]};
  ordered_json turns = ordered_json::array();
  for (const Turn &turn : c.turns) {
    ordered_json t;
    t["sender"] = turn.sender;
    t["tokens"] = turn.tokens;
    ordered_json refs = ordered_json::array();
    for (const GoldReference &ref : turn.refs) {
      ordered_json r;
      r["span"] = {ref.span.start, ref.span.end};
      r["entity_id"] = ref.entity_id;
      r["is_new"] = ref.is_new;
      r["type"] = ToString(ref.props.type);
      r["gender"] = ToString(ref.props.gender);
      r["number"] = ToString(ref.props.number);
      r["members"] = ref.members;
      r["proper_name"] = ref.proper_name;
      refs.push_back(std::move(r));
    }
    t["refs"] = std::move(refs);
    turns.push_back(std::move(t));
  }
  record["turns"] = std::move(turns);
  if (c.quality) record["quality"] = *c.quality;
  return record.dump();
}

void WriteCorpus(std::ostream &out,
                 const std::vector<Conversation> &conversations) {
  for (const Conversation &c : conversations) {
    out << SerializeConversation(c) << '\n';
  }
}

void WriteCorpusFile(const std::string &path,
                     const std::vector<Conversation> &conversations) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  WriteCorpus(out, conversations);
}

CorpusStats ComputeStats(const std::vector<Conversation> &corpus) {
  CorpusStats stats;
  std::unordered_map<std::string, int64_t> span_counts;
  for (const Conversation &c : corpus) {
    ++stats.num_conversations;
    stats.num_turns += c.turns.size();
    ++stats.turns_per_conversation_histogram[static_cast<int>(c.turns.size())];
    for (const Turn &turn : c.turns) {
      stats.num_tokens += turn.tokens.size();
      stats.num_references += turn.refs.size();
      std::set<int> entities;
      for (const GoldReference &ref : turn.refs) {
        entities.insert(ref.entity_id);
        std::vector<std::string> text(turn.tokens.begin() + ref.span.start,
                                      turn.tokens.begin() + ref.span.end);
        ++span_counts[Lowercase(JoinTokens(text))];
      }
      ++stats.entities_per_turn_histogram[static_cast<int>(entities.size())];
    }
  }
  if (stats.num_turns > 0) {
    stats.mean_tokens_per_turn =
        static_cast<double>(stats.num_tokens) / stats.num_turns;
  }
  stats.top_reference_spans.assign(span_counts.begin(), span_counts.end());
  std::sort(stats.top_reference_spans.begin(), stats.top_reference_spans.end(),
            [](const auto &a, const auto &b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return stats;
}

std::vector<Conversation> AugmentNames(const std::vector<Conversation> &corpus,
                                       const std::vector<std::string> &pool,
                                       uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("name pool is empty");
  for (const std::string &name : pool) {
    if (name.empty() || HasWhitespace(name) || Lowercase(name) != name) {
      throw std::invalid_argument("pool names must be single lowercase "
                                  "tokens: '" + name + "'");
    }
  }
  constexpr int kMaxAttempts = 100;

  std::vector<Conversation> out = corpus;
  for (Conversation &c : out) {
    Rng rng(MixSeed(seed, HashBytes(c.id)));
    std::map<std::string, std::string> replacement;
    std::set<std::string> used;
    for (Turn &turn : c.turns) {
      for (const GoldReference &ref : turn.refs) {
        if (!ref.proper_name || ref.props.type != EntityType::kPerson) continue;
        for (int i = ref.span.start; i < ref.span.end; ++i) {
          std::string &token = turn.tokens[i];
          auto it = replacement.find(token);
          if (it == replacement.end()) {
            std::string name;
            int attempts = 0;
            do {
              if (++attempts > kMaxAttempts) {
                throw std::runtime_error(
                    "conversation " + c.id +
                    ": name pool too small for distinct replacements");
              }
              name = pool[rng.UniformInt(pool.size())];
            } while (used.count(name));
            used.insert(name);
            it = replacement.emplace(token, name).first;
          }
          token = it->second;
        }
      }
    }
  }
  return out;
}

CorpusSplit SplitCorpus(const std::vector<Conversation> &corpus,
                        double eval_fraction, uint64_t seed) {
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("eval fraction must lie in (0, 1)");
  }
  std::map<std::string, int64_t> sizes;
  for (const Conversation &c : corpus) {
    if (c.scenario_id.empty()) {
      throw std::invalid_argument("conversation " + c.id +
                                  " has no scenario_id");
    }
    ++sizes[c.scenario_id];
  }
  if (sizes.size() < 2) {
    throw std::invalid_argument("splitting needs at least 2 scenarios");
  }

  std::vector<std::string> scenarios;
  for (const auto &[scenario, count] : sizes) scenarios.push_back(scenario);
  Rng rng(seed);
  rng.Shuffle(scenarios);

  const double target = eval_fraction * static_cast<double>(corpus.size());
  std::set<std::string> eval_scenarios;
  int64_t eval_count = 0;
  for (size_t i = 0; i + 1 < scenarios.size(); ++i) {
    if (static_cast<double>(eval_count) >= target) break;
    eval_scenarios.insert(scenarios[i]);
    eval_count += sizes[scenarios[i]];
  }

  CorpusSplit split;
  for (const Conversation &c : corpus) {
    (eval_scenarios.count(c.scenario_id) ? split.eval : split.train)
        .push_back(c);
  }
  return split;
}

}  // namespace ctrack
