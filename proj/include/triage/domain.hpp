// Copyright 2026 The Quake Triage Authors.
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

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace triage {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)"; throws ValidationError.
Timestamp parse_timestamp(std::string_view iso);
// Always UTC with a trailing 'Z'; milliseconds only when non-zero.
std::string format_timestamp(Timestamp ts);

struct Tweet {
  std::string id;
  std::string text;
  Timestamp created_at{};
  std::optional<std::string> author;

  friend bool operator==(const Tweet&, const Tweet&) = default;
};

enum class EntityTag { kPer, kCity, kAddr, kStatus };
inline constexpr std::array<EntityTag, 4> kEntityTags = {
    EntityTag::kPer, EntityTag::kCity, EntityTag::kAddr, EntityTag::kStatus};

std::string_view to_string(EntityTag tag);
EntityTag parse_entity_tag(std::string_view name);

enum class HelpLabel { kNotCallForHelp, kCallForHelp };

std::string_view to_string(HelpLabel label);
HelpLabel parse_help_label(std::string_view name);

// Offsets are in Unicode scalar values; end is exclusive.
struct EntitySpan {
  EntityTag tag = EntityTag::kPer;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

// O = 0, then B-/I- pairs in tag order.
enum class BioLabel : int {
  kO = 0,
  kBPer,
  kIPer,
  kBCity,
  kICity,
  kBAddr,
  kIAddr,
  kBStatus,
  kIStatus,
};
inline constexpr int kNumBioLabels = 9;

std::string_view to_string(BioLabel label);
BioLabel parse_bio_label(std::string_view name);
BioLabel begin_label(EntityTag tag);
BioLabel inside_label(EntityTag tag);
bool is_begin(BioLabel label);
bool is_inside(BioLabel label);
// Tag of a B-/I- label; must not be called with O.
EntityTag tag_of(BioLabel label);

bool is_valid_bio(const std::vector<BioLabel>& labels);

struct AnnotationRecord {
  std::string tweet_id;
  HelpLabel label = HelpLabel::kNotCallForHelp;
  std::vector<EntitySpan> spans;
  std::string annotator;
  Timestamp created_at{};
};

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Returns an empty string when the spans are valid for `text`, otherwise a
// description of the first problem found. Surfaces are checked only when
// non-empty.
std::string check_spans(std::string_view text,
                        const std::vector<EntitySpan>& spans);

// Overlapping spans throw ValidationError. A span boundary inside a token
// pulls the whole token into the span.
std::vector<BioLabel> spans_to_bio(const std::vector<Token>& tokens,
                                   const std::vector<EntitySpan>& spans);

// Runs of B-X I-X* become spans; a stray I-X opens a new span.
std::vector<EntitySpan> bio_to_spans(std::string_view text,
                                     const std::vector<Token>& tokens,
                                     const std::vector<BioLabel>& labels);

void to_json(nlohmann::json& j, const Tweet& t);
void from_json(const nlohmann::json& j, Tweet& t);
void to_json(nlohmann::json& j, const EntitySpan& s);
void from_json(const nlohmann::json& j, EntitySpan& s);
void to_json(nlohmann::json& j, const AnnotationRecord& r);
void from_json(const nlohmann::json& j, AnnotationRecord& r);

}  // namespace triage
