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

#include "triage/pipeline.hpp"

#include <algorithm>

#include "triage/errors.hpp"

namespace triage {

namespace {

constexpr std::array<std::string_view, 5> kStageNames = {
    "ClassifiedNegative", "TagFailed", "Unlocated", "Located", "FilteredOutOfScope"};

}  // namespace

std::string_view to_string(Stage stage) {
  return kStageNames[static_cast<std::size_t>(stage)];
}

Stage parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  throw ValidationError("unknown stage: " + std::string(name));
}

nlohmann::json result_to_json(const TriageResult& r) {
  nlohmann::json j{{"tweet_id", r.tweet_id},
                   {"label", to_string(r.label)},
                   {"margin", r.margin},
                   {"spans", r.spans},
                   {"stage", to_string(r.stage)}};
  j["matched_city"] = r.matched_city ? nlohmann::json(*r.matched_city) : nlohmann::json();
  j["normalized_address"] =
      r.normalized_address ? nlohmann::json(*r.normalized_address) : nlohmann::json();
  j["outcome"] = r.outcome ? geoloc::outcome_to_json(*r.outcome)
                           : nlohmann::json{{"kind", "NotApplicable"}};
  return j;
}

TriageResult result_from_json(const nlohmann::json& j) {
  TriageResult r;
  r.tweet_id = j.at("tweet_id").get<std::string>();
  r.label = parse_help_label(j.at("label").get<std::string>());
  r.margin = j.at("margin").get<double>();
  r.spans = j.at("spans").get<std::vector<EntitySpan>>();
  r.stage = parse_stage(j.at("stage").get<std::string>());
  if (const auto& c = j.at("matched_city"); !c.is_null()) r.matched_city = c.get<std::string>();
  if (const auto& a = j.at("normalized_address"); !a.is_null()) {
    r.normalized_address = a.get<std::string>();
  }
  if (const auto& o = j.at("outcome"); o.at("kind") != "NotApplicable") {
    r.outcome = geoloc::outcome_from_json(o);
  }
  return r;
}

void PipelineStats::add(Stage stage) {
  ++ingested;
  switch (stage) {
    case Stage::kClassifiedNegative: ++classified_negative; return;
    case Stage::kTagFailed: ++tag_failed; return;
    case Stage::kUnlocated: ++unlocated; break;
    case Stage::kLocated: ++located; break;
    case Stage::kFilteredOutOfScope: ++filtered; break;
  }
  ++tagged;
  ++geocode_attempted;
}

PipelineStats& PipelineStats::operator+=(const PipelineStats& o) {
  ingested += o.ingested;
  classified_negative += o.classified_negative;
  tagged += o.tagged;
  tag_failed += o.tag_failed;
  geocode_attempted += o.geocode_attempted;
  located += o.located;
  unlocated += o.unlocated;
  filtered += o.filtered;
  return *this;
}

bool PipelineStats::conserved() const {
  return ingested == classified_negative + tagged + tag_failed &&
         geocode_attempted == tagged && tagged == located + unlocated + filtered;
}

nlohmann::json PipelineStats::to_json() const {
  return nlohmann::json{{"ingested", ingested},
                        {"classified_negative", classified_negative},
                        {"tagged", tagged},
                        {"tag_failed", tag_failed},
                        {"geocode_attempted", geocode_attempted},
                        {"located", located},
                        {"unlocated", unlocated},
                        {"filtered", filtered}};
}

TriageResult run_pipeline(const Tweet& tweet, const Models& models,
                          const PipelineConfig& config, geoloc::Geocoder& geocoder) {
  TriageResult result;
  result.tweet_id = tweet.id;
  const auto x = models.vectorizer.transform(textfeat::document_terms(tweet.text));
  const auto prediction = classify::predict(models.classifier, x);
  result.label = prediction.label;
  result.margin = prediction.margin;
  if (prediction.label != HelpLabel::kCallForHelp) {
    result.stage = Stage::kClassifiedNegative;
    return result;
  }

  result.spans = nertag::tag_tweet(models.tagger, tweet.text);
  std::vector<EntitySpan> addrs;
  const EntitySpan* first_city = nullptr;
  for (const auto& span : result.spans) {
    if (span.tag == EntityTag::kAddr) addrs.push_back(span);
    if (span.tag == EntityTag::kCity && !first_city) first_city = &span;
  }
  if (first_city) {
    if (auto match = geoloc::match_city(first_city->surface, config.cities)) {
      result.matched_city = match->city;
    }
  }
  if (addrs.empty() && !result.matched_city) {
    result.stage = Stage::kTagFailed;
    return result;
  }
  try {
    result.normalized_address = geoloc::normalize_address(addrs, result.matched_city);
  } catch (const ValidationError&) {
    result.stage = Stage::kTagFailed;
    return result;
  }
  if (result.normalized_address->empty()) {
    result.normalized_address.reset();
    result.stage = Stage::kTagFailed;
    return result;
  }

  result.outcome = geoloc::apply_scope(geocoder.geocode(*result.normalized_address),
                                       config.bbox);
  if (std::holds_alternative<geoloc::Located>(*result.outcome)) {
    result.stage = Stage::kLocated;
  } else if (std::holds_alternative<geoloc::OutOfScope>(*result.outcome)) {
    result.stage = Stage::kFilteredOutOfScope;
  } else {
    result.stage = Stage::kUnlocated;
  }
  return result;
}

}  // namespace triage
