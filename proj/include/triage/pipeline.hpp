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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"
#include "triage/geoloc.hpp"
#include "triage/workflows.hpp"

namespace triage {

enum class Stage { kClassifiedNegative, kTagFailed, kUnlocated, kLocated, kFilteredOutOfScope };

std::string_view to_string(Stage stage);
// Throws ValidationError for unknown names.
Stage parse_stage(std::string_view name);

struct TriageResult {
  std::string tweet_id;
  HelpLabel label = HelpLabel::kNotCallForHelp;
  double margin = 0.0;
  std::vector<EntitySpan> spans;
  std::optional<std::string> matched_city;
  std::optional<std::string> normalized_address;
  std::optional<geoloc::GeocodeOutcome> outcome;  // empty: not applicable
  Stage stage = Stage::kClassifiedNegative;
};

nlohmann::json result_to_json(const TriageResult& result);
TriageResult result_from_json(const nlohmann::json& j);

struct PipelineStats {
  std::size_t ingested = 0;
  std::size_t classified_negative = 0;
  std::size_t tagged = 0;
  std::size_t tag_failed = 0;
  std::size_t geocode_attempted = 0;
  std::size_t located = 0;
  std::size_t unlocated = 0;
  std::size_t filtered = 0;

  void add(Stage stage);
  PipelineStats& operator+=(const PipelineStats& other);
  friend bool operator==(const PipelineStats&, const PipelineStats&) = default;
  // ingested = negative + tagged + tag_failed; attempted = tagged =
  // located + unlocated + filtered.
  bool conserved() const;
  nlohmann::json to_json() const;
};

struct PipelineConfig {
  geoloc::CityList cities = geoloc::affected_cities();
  geoloc::BoundingBox bbox = geoloc::default_box();
};

// classify -> tag -> match city -> normalise address -> geocode -> scope.
// Tweets are geocodable when they carry an ADDR span or their first CITY span
// matches the city list; otherwise they end as TagFailed.
TriageResult run_pipeline(const Tweet& tweet, const Models& models,
                          const PipelineConfig& config, geoloc::Geocoder& geocoder);

}  // namespace triage
