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

// Embedded single-file store: tweets, results, annotations, geocode cache.
// One connection; writes and reads are serialised by a mutex.

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "triage/domain.hpp"
#include "triage/errors.hpp"
#include "triage/geoloc.hpp"
#include "triage/pipeline.hpp"

struct sqlite3;

namespace triage {

class StoreError : public Error {
 public:
  using Error::Error;
};

struct StoredResult {
  Tweet tweet;
  TriageResult result;
};

class Store {
 public:
  // ":memory:" gives a private in-memory database.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Inserts the tweet unless its id is already present; true when inserted.
  bool claim_tweet(const Tweet& tweet);
  void release_tweet(const std::string& id);
  std::optional<Tweet> get_tweet(const std::string& id);

  void put_result(const TriageResult& result);
  std::optional<TriageResult> get_result(const std::string& id);
  // Every result with its tweet, oldest first (created_at, id).
  std::vector<StoredResult> all_results();

  void upsert_annotation(const AnnotationRecord& record);
  std::vector<AnnotationRecord> annotations_for(const std::string& tweet_id);

  std::optional<geoloc::GeocodeOutcome> cached_outcome(const std::string& address);
  void cache_outcome(const std::string& address, const geoloc::GeocodeOutcome& outcome);

  PipelineStats stats();

 private:
  void exec(const char* sql);

  std::mutex mu_;
  sqlite3* db_ = nullptr;
};

// Geocode cache persisted in the store.
class StoreCache : public geoloc::GeocodeCache {
 public:
  explicit StoreCache(std::shared_ptr<Store> store) : store_(std::move(store)) {}
  std::optional<geoloc::GeocodeOutcome> get(const std::string& address) override {
    return store_->cached_outcome(address);
  }
  void put(const std::string& address, const geoloc::GeocodeOutcome& outcome) override {
    store_->cache_outcome(address, outcome);
  }

 private:
  std::shared_ptr<Store> store_;
};

}  // namespace triage
