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

#include "triage/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "triage/errors.hpp"
#include "triage/unicode.hpp"

namespace triage {

namespace {

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw ValidationError("timestamp too short");
  int value = 0;
  auto first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw ValidationError("bad timestamp digits: " + std::string(s));
  }
  return value;
}

void expect_char(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw ValidationError("malformed timestamp: " + std::string(s));
  }
}

constexpr std::array<std::string_view, kNumBioLabels> kBioNames = {
    "O",      "B-PER",  "I-PER",    "B-CITY",  "I-CITY",
    "B-ADDR", "I-ADDR", "B-STATUS", "I-STATUS"};

}  // namespace

Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  const int year = read_int(s, 0, 4);
  expect_char(s, 4, '-');
  const int month = read_int(s, 5, 2);
  expect_char(s, 7, '-');
  const int day = read_int(s, 8, 2);
  if (s.size() <= 10 || (s[10] != 'T' && s[10] != ' ')) {
    throw ValidationError("malformed timestamp: " + std::string(s));
  }
  const int hour = read_int(s, 11, 2);
  expect_char(s, 13, ':');
  const int minute = read_int(s, 14, 2);
  expect_char(s, 16, ':');
  const int second = read_int(s, 17, 2);
  std::size_t pos = 19;
  int millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw ValidationError("malformed timestamp: " + std::string(s));
    for (int d = digits; d < 3; ++d) millis *= 10;
  }
  int offset_minutes = 0;
  if (pos < s.size() && s[pos] == 'Z') {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '+' ? 1 : -1;
    const int oh = read_int(s, pos + 1, 2);
    expect_char(s, pos + 3, ':');
    const int om = read_int(s, pos + 4, 2);
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw ValidationError("timestamp needs a UTC designator: " + std::string(s));
  }
  if (pos != s.size()) throw ValidationError("trailing characters in timestamp: " + std::string(s));

  const year_month_day ymd{std::chrono::year{year},
                           std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    throw ValidationError("timestamp out of range: " + std::string(s));
  }
  auto tp = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} +
            milliseconds{millis} - minutes{offset_minutes};
  return time_point_cast<milliseconds>(tp);
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss hms{ts - day};
  char buf[40];
  const auto ms = hms.subseconds().count();
  if (ms != 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<int>(ms));
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
  }
  return buf;
}

std::string_view to_string(EntityTag tag) {
  switch (tag) {
    case EntityTag::kPer: return "PER";
    case EntityTag::kCity: return "CITY";
    case EntityTag::kAddr: return "ADDR";
    case EntityTag::kStatus: return "STATUS";
  }
  return "?";
}

EntityTag parse_entity_tag(std::string_view name) {
  for (auto tag : kEntityTags) {
    if (to_string(tag) == name) return tag;
  }
  throw ValidationError("unknown entity tag: " + std::string(name));
}

std::string_view to_string(HelpLabel label) {
  return label == HelpLabel::kCallForHelp ? "CallForHelp" : "NotCallForHelp";
}

HelpLabel parse_help_label(std::string_view name) {
  if (name == "CallForHelp") return HelpLabel::kCallForHelp;
  if (name == "NotCallForHelp") return HelpLabel::kNotCallForHelp;
  throw ValidationError("unknown help label: " + std::string(name));
}

std::string_view to_string(BioLabel label) {
  return kBioNames[static_cast<std::size_t>(label)];
}

BioLabel parse_bio_label(std::string_view name) {
  for (int i = 0; i < kNumBioLabels; ++i) {
    if (kBioNames[i] == name) return static_cast<BioLabel>(i);
  }
  throw ValidationError("unknown BIO label: " + std::string(name));
}

BioLabel begin_label(EntityTag tag) {
  return static_cast<BioLabel>(1 + 2 * static_cast<int>(tag));
}

BioLabel inside_label(EntityTag tag) {
  return static_cast<BioLabel>(2 + 2 * static_cast<int>(tag));
}

bool is_begin(BioLabel label) {
  const int v = static_cast<int>(label);
  return v > 0 && v % 2 == 1;
}

bool is_inside(BioLabel label) {
  const int v = static_cast<int>(label);
  return v > 0 && v % 2 == 0;
}

EntityTag tag_of(BioLabel label) {
  return static_cast<EntityTag>((static_cast<int>(label) - 1) / 2);
}

bool is_valid_bio(const std::vector<BioLabel>& labels) {
  BioLabel prev = BioLabel::kO;
  for (auto label : labels) {
    if (is_inside(label) &&
        (prev == BioLabel::kO || tag_of(prev) != tag_of(label))) {
      return false;
    }
    prev = label;
  }
  return true;
}

std::string check_spans(std::string_view text,
                        const std::vector<EntitySpan>& spans) {
  const auto chars = unicode::decode(text);
  std::vector<const EntitySpan*> sorted;
  for (const auto& span : spans) {
    if (span.start >= span.end) {
      return "span start must be less than end";
    }
    if (span.end > chars.size()) {
      return "span end " + std::to_string(span.end) + " exceeds text length " +
             std::to_string(chars.size());
    }
    if (!span.surface.empty()) {
      auto slice = unicode::encode(std::u32string_view(chars).substr(
          span.start, span.end - span.start));
      if (slice != span.surface) return "span surface does not match text";
    }
    sorted.push_back(&span);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) return "spans overlap";
  }
  return {};
}

std::vector<BioLabel> spans_to_bio(const std::vector<Token>& tokens,
                                   const std::vector<EntitySpan>& spans) {
  std::vector<const EntitySpan*> sorted;
  for (const auto& span : spans) sorted.push_back(&span);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) {
      throw ValidationError("overlapping spans");
    }
  }

  std::vector<BioLabel> labels(tokens.size(), BioLabel::kO);
  std::vector<bool> taken(tokens.size(), false);
  for (const auto* span : sorted) {
    bool first = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (taken[i]) continue;
      if (tokens[i].start < span->end && span->start < tokens[i].end) {
        labels[i] = first ? begin_label(span->tag) : inside_label(span->tag);
        taken[i] = true;
        first = false;
      }
    }
  }
  return labels;
}

std::vector<EntitySpan> bio_to_spans(std::string_view text,
                                     const std::vector<Token>& tokens,
                                     const std::vector<BioLabel>& labels) {
  if (labels.size() != tokens.size()) {
    throw ValidationError("label count does not match token count");
  }
  const auto chars = unicode::decode(text);
  std::vector<EntitySpan> spans;
  auto close = [&](EntitySpan& span) {
    span.surface = unicode::encode(
        std::u32string_view(chars).substr(span.start, span.end - span.start));
    spans.push_back(std::move(span));
  };

  std::optional<EntitySpan> open;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto label = labels[i];
    const bool continues = is_inside(label) && open && open->tag == tag_of(label);
    if (continues) {
      open->end = tokens[i].end;
      continue;
    }
    if (open) {
      close(*open);
      open.reset();
    }
    if (label != BioLabel::kO) {
      open = EntitySpan{tag_of(label), tokens[i].start, tokens[i].end, {}};
    }
  }
  if (open) close(*open);
  return spans;
}

void to_json(nlohmann::json& j, const Tweet& t) {
  j = nlohmann::json{{"id", t.id},
                     {"text", t.text},
                     {"created_at", format_timestamp(t.created_at)}};
  if (t.author) j["author"] = *t.author;
}

void from_json(const nlohmann::json& j, Tweet& t) {
  if (!j.is_object()) throw ValidationError("tweet must be a JSON object");
  auto string_field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw ValidationError(std::string("tweet field '") + key +
                            "' missing or not a string");
    }
    return it->get<std::string>();
  };
  t.id = string_field("id");
  t.text = string_field("text");
  if (t.id.empty()) throw ValidationError("tweet id must be non-empty");
  if (t.text.empty()) throw ValidationError("tweet text must be non-empty");
  t.created_at = parse_timestamp(string_field("created_at"));
  t.author.reset();
  if (auto it = j.find("author"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("tweet author must be a string");
    t.author = it->get<std::string>();
  }
}

void to_json(nlohmann::json& j, const EntitySpan& s) {
  j = nlohmann::json{{"tag", to_string(s.tag)},
                     {"start", s.start},
                     {"end", s.end},
                     {"surface", s.surface}};
}

void from_json(const nlohmann::json& j, EntitySpan& s) {
  if (!j.is_object()) throw ValidationError("span must be a JSON object");
  auto tag = j.find("tag");
  auto start = j.find("start");
  auto end = j.find("end");
  if (tag == j.end() || !tag->is_string()) throw ValidationError("span tag missing");
  if (start == j.end() || !start->is_number_unsigned() || end == j.end() ||
      !end->is_number_unsigned()) {
    throw ValidationError("span offsets must be non-negative integers");
  }
  s.tag = parse_entity_tag(tag->get<std::string>());
  s.start = start->get<std::size_t>();
  s.end = end->get<std::size_t>();
  s.surface = j.value("surface", std::string{});
}

void to_json(nlohmann::json& j, const AnnotationRecord& r) {
  j = nlohmann::json{{"tweet_id", r.tweet_id},
                     {"label", to_string(r.label)},
                     {"spans", r.spans},
                     {"annotator", r.annotator},
                     {"created_at", format_timestamp(r.created_at)}};
}

void from_json(const nlohmann::json& j, AnnotationRecord& r) {
  if (!j.is_object()) throw ValidationError("annotation must be a JSON object");
  auto id = j.find("tweet_id");
  auto label = j.find("label");
  auto annotator = j.find("annotator");
  if (id == j.end() || !id->is_string()) throw ValidationError("tweet_id missing");
  if (label == j.end() || !label->is_string()) throw ValidationError("label missing");
  if (annotator == j.end() || !annotator->is_string() ||
      annotator->get<std::string>().empty()) {
    throw ValidationError("annotator missing");
  }
  r.tweet_id = id->get<std::string>();
  r.label = parse_help_label(label->get<std::string>());
  r.annotator = annotator->get<std::string>();
  r.spans.clear();
  if (auto spans = j.find("spans"); spans != j.end()) {
    if (!spans->is_array()) throw ValidationError("spans must be an array");
    for (const auto& s : *spans) r.spans.push_back(s.get<EntitySpan>());
  }
  if (auto ts = j.find("created_at"); ts != j.end() && ts->is_string()) {
    r.created_at = parse_timestamp(ts->get<std::string>());
  }
}

}  // namespace triage
