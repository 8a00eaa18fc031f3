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

#include "triage/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "triage/unicode.hpp"

namespace triage::ingest {

std::string_view to_string(KeywordSetName name) {
  return name == KeywordSetName::kGeneral ? "General" : "Help";
}

KeywordSet::KeywordSet(KeywordSetName name, std::vector<std::string> keywords)
    : name_(name) {
  if (keywords.empty()) throw ValidationError("keyword set must not be empty");
  std::set<std::string> seen;
  for (auto& kw : keywords) {
    auto chars = unicode::fold(unicode::decode(kw));
    const auto first = std::find_if_not(chars.begin(), chars.end(), unicode::is_space);
    const auto last = std::find_if_not(chars.rbegin(), chars.rend(), unicode::is_space).base();
    if (first >= last) throw ValidationError("keywords must contain non-space characters");
    auto folded = unicode::encode(std::u32string(first, last));
    if (!seen.insert(folded).second) {
      throw ValidationError("duplicate keyword after case folding: " + kw);
    }
    keywords_.push_back(std::move(folded));
  }
}

KeywordSet KeywordSet::load(KeywordSetName name, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read keyword file: " + path);
  std::vector<std::string> keywords;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t");
    keywords.push_back(line.substr(first, last - first + 1));
  }
  return KeywordSet(name, std::move(keywords));
}

bool KeywordSet::matches(std::string_view text) const {
  const auto folded = unicode::fold(text);
  return std::any_of(keywords_.begin(), keywords_.end(), [&](const std::string& kw) {
    return folded.find(kw) != std::string::npos;
  });
}

IngestBatch parse_tweets(std::string_view jsonl, std::string source) {
  IngestBatch batch;
  batch.source = std::move(source);
  std::unordered_set<std::string> ids;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    auto line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                               : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      auto tweet = nlohmann::json::parse(line).get<Tweet>();
      if (!ids.insert(tweet.id).second) {
        ++batch.skipped_count;
        continue;
      }
      batch.tweets.push_back(std::move(tweet));
      batch.matched_set.emplace_back();
    } catch (const std::exception&) {
      ++batch.skipped_count;
    }
  }
  if (batch.tweets.empty()) {
    throw EmptyBatchError("no well-formed tweets in " + batch.source);
  }
  return batch;
}

IngestBatch read_tweets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read tweet file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path);
  return parse_tweets(buffer.str(), path);
}

std::vector<Tweet> keyword_filter(const std::vector<Tweet>& tweets, const KeywordSet& set) {
  std::vector<Tweet> out;
  std::copy_if(tweets.begin(), tweets.end(), std::back_inserter(out),
               [&](const Tweet& t) { return set.matches(t.text); });
  return out;
}

void tag_matches(IngestBatch& batch, const std::vector<KeywordSet>& sets) {
  batch.matched_set.assign(batch.tweets.size(), std::nullopt);
  for (std::size_t i = 0; i < batch.tweets.size(); ++i) {
    for (const auto& set : sets) {
      if (set.matches(batch.tweets[i].text)) {
        batch.matched_set[i] = set.name();
        break;
      }
    }
  }
}

std::vector<Tweet> dedupe(const std::vector<Tweet>& tweets) {
  std::unordered_set<std::string> seen;
  std::vector<Tweet> out;
  for (const auto& t : tweets) {
    if (seen.insert(t.id).second) out.push_back(t);
  }
  return out;
}

ReplaySummary replay(const IngestBatch& batch, double rate, const TweetSink& sink) {
  if (!(rate > 0.0)) throw ValidationError("replay rate must be positive");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  if (batch.tweets.empty()) return {0, clock::now() - start};

  std::vector<const Tweet*> order;
  for (const auto& t : batch.tweets) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Tweet* a, const Tweet* b) {
    if (a->created_at != b->created_at) return a->created_at < b->created_at;
    return a->id < b->id;
  });

  const std::chrono::duration<double> interval(1.0 / rate);
  std::size_t delivered = 0;
  for (const auto* tweet : order) {
    std::this_thread::sleep_until(
        start + std::chrono::duration_cast<clock::duration>(interval * delivered));
    try {
      sink(*tweet);
    } catch (const std::exception& e) {
      throw ReplayAborted(std::string("sink failed: ") + e.what(), delivered);
    }
    ++delivered;
  }
  std::this_thread::sleep_until(
      start + std::chrono::duration_cast<clock::duration>(interval * delivered));
  return {delivered, clock::now() - start};
}

}  // namespace triage::ingest
