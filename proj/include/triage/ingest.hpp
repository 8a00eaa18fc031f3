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

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "triage/domain.hpp"
#include "triage/errors.hpp"

namespace triage::ingest {

enum class KeywordSetName { kGeneral, kHelp };

std::string_view to_string(KeywordSetName name);

class KeywordSet {
 public:
  // Keywords are case-folded; empty or duplicate lists are rejected.
  KeywordSet(KeywordSetName name, std::vector<std::string> keywords);
  // One phrase per line; '#' comment lines and blank lines are skipped.
  static KeywordSet load(KeywordSetName name, const std::string& path);

  KeywordSetName name() const { return name_; }
  const std::vector<std::string>& keywords() const { return keywords_; }
  bool matches(std::string_view text) const;

 private:
  KeywordSetName name_;
  std::vector<std::string> keywords_;
};

struct IngestBatch {
  std::string source;
  std::vector<Tweet> tweets;
  std::vector<std::optional<KeywordSetName>> matched_set;  // parallel to tweets
  std::size_t skipped_count = 0;
};

class EmptyBatchError : public Error {
 public:
  using Error::Error;
};

// JSON Lines reader; malformed lines are skipped and counted. Duplicate ids
// after the first are treated as malformed.
IngestBatch read_tweets(const std::string& path);
// Same parser over an in-memory stream of lines.
IngestBatch parse_tweets(std::string_view jsonl, std::string source = "<memory>");

// Tweets whose case-folded text contains any keyword; stable.
std::vector<Tweet> keyword_filter(const std::vector<Tweet>& tweets, const KeywordSet& set);

// Records the first keyword set that matches each tweet.
void tag_matches(IngestBatch& batch, const std::vector<KeywordSet>& sets);

// First occurrence of each id wins; survivor order preserved.
std::vector<Tweet> dedupe(const std::vector<Tweet>& tweets);

struct ReplaySummary {
  std::size_t count = 0;
  std::chrono::duration<double> duration{};
};

class ReplayAborted : public Error {
 public:
  ReplayAborted(const std::string& what, std::size_t delivered)
      : Error(what), delivered_(delivered) {}
  std::size_t delivered() const { return delivered_; }

 private:
  std::size_t delivered_;
};

using TweetSink = std::function<void(const Tweet&)>;

// Delivers tweets sorted by (created_at, id), tweet i at start + i / rate,
// and returns after count / rate seconds. A throwing sink aborts the replay.
ReplaySummary replay(const IngestBatch& batch, double rate, const TweetSink& sink);

}  // namespace triage::ingest
