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

#include "triage/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <set>
#include <thread>
#include <unordered_set>

#include "triage/errors.hpp"
#include "triage/unicode.hpp"

namespace triage {

namespace {

std::optional<std::size_t> parse_count(const std::string& text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

bool has_surface(const TriageResult& r, EntityTag tag, const std::string& folded) {
  return std::any_of(r.spans.begin(), r.spans.end(), [&](const EntitySpan& s) {
    return s.tag == tag && unicode::fold(s.surface) == folded;
  });
}

nlohmann::json result_item(const StoredResult& stored) {
  auto j = result_to_json(stored.result);
  j["text"] = stored.tweet.text;
  j["created_at"] = format_timestamp(stored.tweet.created_at);
  j["author"] = stored.tweet.author ? nlohmann::json(*stored.tweet.author) : nlohmann::json();
  return j;
}

}  // namespace

ApiResponse error_response(int status, std::string message) {
  return {status, nlohmann::json{{"error", std::move(message)}, {"status", status}}};
}

TriageService::TriageService(Models models, ServiceConfig config,
                             std::shared_ptr<Store> store,
                             std::shared_ptr<geoloc::Geocoder> geocoder)
    : models_(std::move(models)),
      config_(std::move(config)),
      store_(std::move(store)),
      geocoder_(std::move(geocoder)) {
  if (!store_ || !geocoder_) throw ValidationError("service needs a store and a geocoder");
}

ApiResponse TriageService::ingest(std::string_view body) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("malformed JSON body: ") + e.what());
  }
  if (!parsed.is_array()) return error_response(400, "body must be a JSON array of tweets");
  if (parsed.size() > config_.max_batch) {
    return error_response(413, "batch of " + std::to_string(parsed.size()) +
                                   " tweets exceeds the limit of " +
                                   std::to_string(config_.max_batch));
  }

  std::size_t duplicates = 0;
  nlohmann::json rejected = nlohmann::json::array();
  std::vector<Tweet> fresh;
  std::unordered_set<std::string> batch_ids;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    Tweet tweet;
    try {
      tweet = parsed[i].get<Tweet>();
    } catch (const std::exception& e) {
      rejected.push_back({{"index", i}, {"error", e.what()}});
      continue;
    }
    if (!batch_ids.insert(tweet.id).second || !store_->claim_tweet(tweet)) {
      ++duplicates;
      continue;
    }
    fresh.push_back(std::move(tweet));
  }

  std::vector<std::optional<Stage>> stages(fresh.size());
  std::vector<std::string> failures(fresh.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < fresh.size(); i = next++) {
      try {
        auto result = run_pipeline(fresh[i], models_, config_.pipeline, *geocoder_);
        store_->put_result(result);
        stages[i] = result.stage;
      } catch (const std::exception& e) {
        failures[i] = e.what();
        try {
          store_->release_tweet(fresh[i].id);
        } catch (const std::exception&) {
        }
      }
    }
  };
  const auto threads = std::min<std::size_t>(
      std::max(1, config_.workers), std::max<std::size_t>(1, fresh.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  PipelineStats delta;
  std::size_t accepted = 0;
  nlohmann::json failed = nlohmann::json::array();
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (stages[i]) {
      delta.add(*stages[i]);
      ++accepted;
    } else {
      failed.push_back({{"id", fresh[i].id}, {"error", failures[i]}});
    }
  }
  nlohmann::json summary{{"accepted", accepted},
                         {"duplicates", duplicates},
                         {"rejected", rejected.size()},
                         {"failed", failed.size()},
                         {"stats", delta.to_json()}};
  if (!rejected.empty()) summary["rejected_items"] = rejected;
  if (!failed.empty()) summary["failed_items"] = failed;
  if (batch_hook_) batch_hook_(summary);
  return {200, summary};
}

ApiResponse TriageService::results(const std::map<std::string, std::string>& params) {
  std::optional<std::string> name, status;
  std::optional<Stage> stage;
  std::optional<std::size_t> limit;
  std::size_t offset = 0;
  for (const auto& [key, value] : params) {
    if (key == "name") {
      if (!value.empty()) name = unicode::fold(value);
    } else if (key == "status") {
      if (!value.empty()) status = unicode::fold(value);
    } else if (key == "stage") {
      if (value.empty()) continue;
      try {
        stage = parse_stage(value);
      } catch (const ValidationError& e) {
        return error_response(400, e.what());
      }
    } else if (key == "limit") {
      if (value.empty()) continue;
      limit = parse_count(value);
      if (!limit) return error_response(400, "limit must be a non-negative integer");
    } else if (key == "offset") {
      if (value.empty()) continue;
      auto parsed = parse_count(value);
      if (!parsed) return error_response(400, "offset must be a non-negative integer");
      offset = *parsed;
    } else {
      return error_response(400, "unknown query parameter: " + key);
    }
  }

  auto all = store_->all_results();
  std::vector<const StoredResult*> matches;
  for (const auto& r : all) {
    if (stage && r.result.stage != *stage) continue;
    if (name && !has_surface(r.result, EntityTag::kPer, *name)) continue;
    if (status && !has_surface(r.result, EntityTag::kStatus, *status)) continue;
    matches.push_back(&r);
  }
  std::sort(matches.begin(), matches.end(), [](const StoredResult* a, const StoredResult* b) {
    if (a->tweet.created_at != b->tweet.created_at) {
      return a->tweet.created_at > b->tweet.created_at;
    }
    return a->tweet.id < b->tweet.id;
  });

  nlohmann::json items = nlohmann::json::array();
  const std::size_t end =
      limit ? std::min(matches.size(), offset + *limit) : matches.size();
  for (std::size_t i = offset; i < end; ++i) items.push_back(result_item(*matches[i]));
  return {200, nlohmann::json{{"total", matches.size()},
                              {"offset", offset},
                              {"limit", limit ? nlohmann::json(*limit) : nlohmann::json()},
                              {"items", items}}};
}

ApiResponse TriageService::filters() {
  // key: folded surface, value: first-seen surface
  std::map<std::string, std::string> names, statuses;
  for (const auto& r : store_->all_results()) {
    if (r.result.stage != Stage::kLocated && r.result.stage != Stage::kUnlocated) continue;
    for (const auto& span : r.result.spans) {
      if (span.tag == EntityTag::kPer) names.emplace(unicode::fold(span.surface), span.surface);
      if (span.tag == EntityTag::kStatus) {
        statuses.emplace(unicode::fold(span.surface), span.surface);
      }
    }
  }
  nlohmann::json out{{"names", nlohmann::json::array()}, {"statuses", nlohmann::json::array()}};
  for (const auto& [key, surface] : names) out["names"].push_back(surface);
  for (const auto& [key, surface] : statuses) out["statuses"].push_back(surface);
  return {200, out};
}

ApiResponse TriageService::tweet(const std::string& id) {
  auto tweet = store_->get_tweet(id);
  if (!tweet) return error_response(404, "unknown tweet: " + id);
  auto result = store_->get_result(id);
  nlohmann::json annotations = nlohmann::json::array();
  for (const auto& a : store_->annotations_for(id)) annotations.push_back(a);
  return {200, nlohmann::json{{"tweet", *tweet},
                              {"result", result ? result_to_json(*result) : nlohmann::json()},
                              {"annotations", annotations}}};
}

ApiResponse TriageService::save_annotation(std::string_view body) {
  AnnotationRecord record;
  try {
    record = nlohmann::json::parse(body).get<AnnotationRecord>();
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("malformed annotation: ") + e.what());
  } catch (const ValidationError& e) {
    return error_response(400, std::string("malformed annotation: ") + e.what());
  }
  auto tweet = store_->get_tweet(record.tweet_id);
  if (!tweet) return error_response(404, "unknown tweet: " + record.tweet_id);
  if (record.label == HelpLabel::kNotCallForHelp && !record.spans.empty()) {
    return error_response(422, "NotCallForHelp annotations cannot carry spans");
  }
  if (auto problem = check_spans(tweet->text, record.spans); !problem.empty()) {
    return error_response(422, problem);
  }
  for (auto& span : record.spans) {
    span.surface = unicode::substr(tweet->text, span.start, span.end);
  }
  std::sort(record.spans.begin(), record.spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  record.created_at = std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
  store_->upsert_annotation(record);
  return {200, record};
}

ApiResponse TriageService::stats() { return {200, store_->stats().to_json()}; }

ApiResponse TriageService::client_config() const {
  const auto& box = config_.pipeline.bbox;
  return {200, nlohmann::json{{"tile_url", config_.tile_url},
                              {"poll_interval_ms", config_.poll_interval_ms},
                              {"bbox", {box.min_lat, box.max_lat, box.min_lon, box.max_lon}},
                              {"api_base", "/api/v1"}}};
}

}  // namespace triage
