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

#ifndef CTRACK_TYPES_H_
#define CTRACK_TYPES_H_

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctrack {

// Categorical entity properties. The boolean encoding concatenates the
// one-hot vectors of type (2), gender (3) and number (2).
enum class EntityType { kPerson = 0, kLocation = 1 };
enum class Gender { kFemale = 0, kMale = 1, kUnknown = 2 };
enum class Number { kSingular = 0, kPlural = 1 };

inline constexpr int kNumTypes = 2;
inline constexpr int kNumGenders = 3;
inline constexpr int kNumNumbers = 2;
inline constexpr int kNumPropertyValues = kNumTypes + kNumGenders + kNumNumbers;

// Offsets of the property groups inside the P-wide property block.
inline constexpr int kTypeOffset = 0;
inline constexpr int kGenderOffset = kNumTypes;
inline constexpr int kNumberOffset = kNumTypes + kNumGenders;

struct Properties {
  EntityType type = EntityType::kPerson;
  Gender gender = Gender::kUnknown;
  Number number = Number::kSingular;

  bool operator==(const Properties &other) const = default;

  // Indices of the three active bits in the property block.
  std::array<int, 3> ActiveBits() const {
    return {kTypeOffset + static_cast<int>(type),
            kGenderOffset + static_cast<int>(gender),
            kNumberOffset + static_cast<int>(number)};
  }
};

// Half-open token span [start, end).
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool Contains(int i) const { return i >= start && i < end; }
  bool Overlaps(const Span &other) const {
    return start < other.end && other.start < end;
  }
  bool operator==(const Span &other) const = default;
  auto operator<=>(const Span &other) const = default;
};

enum class ParticipantRole { kNone = 0, kSender = 1, kRecipient = 2 };

std::string_view ToString(EntityType type);
std::string_view ToString(Gender gender);
std::string_view ToString(Number number);
std::string_view ToString(ParticipantRole role);
std::optional<EntityType> ParseEntityType(std::string_view s);
std::optional<Gender> ParseGender(std::string_view s);
std::optional<Number> ParseNumber(std::string_view s);
std::optional<ParticipantRole> ParseParticipantRole(std::string_view s);

// Lowercases ASCII letters; other bytes (including UTF-8 sequences) are kept.
std::string Lowercase(std::string_view s);

// Joins tokens with single spaces.
std::string JoinTokens(const std::vector<std::string> &tokens);

}  // namespace ctrack

#endif  // CTRACK_TYPES_H_
