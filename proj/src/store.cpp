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

#include "triage/store.hpp"

#include <sqlite3.h>

#include <algorithm>

#include "triage/errors.hpp"

namespace triage {

namespace {

// Owns a prepared statement for the duration of one call.
class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int index, const std::string& value) {
    check(sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind_null(int index) {
    check(sqlite3_bind_null(stmt_, index));
    return *this;
  }
  Statement& bind(int index, const std::optional<std::string>& value) {
    return value ? bind(index, *value) : bind_null(index);
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw StoreError(std::string("step failed: ") + sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  long long integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) throw StoreError(std::string("bind failed: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

Tweet tweet_from_row(const Statement& s, int first) {
  Tweet t;
  t.id = s.text(first);
  t.text = s.text(first + 1);
  t.created_at = parse_timestamp(s.text(first + 2));
  if (!s.is_null(first + 3)) t.author = s.text(first + 3);
  return t;
}

}  // namespace

Store::Store(const std::string& path) {
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw StoreError("cannot open store " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL");
  exec("PRAGMA synchronous=NORMAL");
  exec(
      "CREATE TABLE IF NOT EXISTS tweets ("
      " id TEXT PRIMARY KEY, text TEXT NOT NULL, created_at TEXT NOT NULL,"
      " author TEXT)");
  exec(
      "CREATE TABLE IF NOT EXISTS results ("
      " tweet_id TEXT PRIMARY KEY REFERENCES tweets(id), stage TEXT NOT NULL,"
      " payload TEXT NOT NULL)");
  exec(
      "CREATE TABLE IF NOT EXISTS annotations ("
      " tweet_id TEXT NOT NULL REFERENCES tweets(id), annotator TEXT NOT NULL,"
      " payload TEXT NOT NULL, PRIMARY KEY (tweet_id, annotator))");
  exec(
      "CREATE TABLE IF NOT EXISTS geocode_cache ("
      " address TEXT PRIMARY KEY, payload TEXT NOT NULL)");
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw StoreError(std::string("store statement failed: ") + msg);
  }
}

bool Store::claim_tweet(const Tweet& tweet) {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "INSERT OR IGNORE INTO tweets (id, text, created_at, author) VALUES (?, ?, ?, ?)");
  s.bind(1, tweet.id).bind(2, tweet.text).bind(3, format_timestamp(tweet.created_at));
  s.bind(4, tweet.author);
  s.step();
  return sqlite3_changes(db_) == 1;
}

void Store::release_tweet(const std::string& id) {
  std::lock_guard lock(mu_);
  Statement r(db_, "DELETE FROM results WHERE tweet_id = ?");
  r.bind(1, id).step();
  Statement s(db_, "DELETE FROM tweets WHERE id = ?");
  s.bind(1, id).step();
}

std::optional<Tweet> Store::get_tweet(const std::string& id) {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT id, text, created_at, author FROM tweets WHERE id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return tweet_from_row(s, 0);
}

void Store::put_result(const TriageResult& result) {
  std::lock_guard lock(mu_);
  Statement s(db_, "INSERT OR REPLACE INTO results (tweet_id, stage, payload) VALUES (?, ?, ?)");
  s.bind(1, result.tweet_id)
      .bind(2, std::string(to_string(result.stage)))
      .bind(3, result_to_json(result).dump());
  s.step();
}

std::optional<TriageResult> Store::get_result(const std::string& id) {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT payload FROM results WHERE tweet_id = ?");
  s.bind(1, id);
  if (!s.step()) return std::nullopt;
  return result_from_json(nlohmann::json::parse(s.text(0)));
}

std::vector<StoredResult> Store::all_results() {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT t.id, t.text, t.created_at, t.author, r.payload FROM results r"
              " JOIN tweets t ON t.id = r.tweet_id");
  std::vector<StoredResult> out;
  while (s.step()) {
    out.push_back({tweet_from_row(s, 0), result_from_json(nlohmann::json::parse(s.text(4)))});
  }
  std::sort(out.begin(), out.end(), [](const StoredResult& a, const StoredResult& b) {
    if (a.tweet.created_at != b.tweet.created_at) return a.tweet.created_at < b.tweet.created_at;
    return a.tweet.id < b.tweet.id;
  });
  return out;
}

void Store::upsert_annotation(const AnnotationRecord& record) {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "INSERT OR REPLACE INTO annotations (tweet_id, annotator, payload) VALUES (?, ?, ?)");
  nlohmann::json j = record;
  s.bind(1, record.tweet_id).bind(2, record.annotator).bind(3, j.dump());
  s.step();
}

std::vector<AnnotationRecord> Store::annotations_for(const std::string& tweet_id) {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT payload FROM annotations WHERE tweet_id = ? ORDER BY annotator");
  s.bind(1, tweet_id);
  std::vector<AnnotationRecord> out;
  while (s.step()) out.push_back(nlohmann::json::parse(s.text(0)).get<AnnotationRecord>());
  return out;
}

std::optional<geoloc::GeocodeOutcome> Store::cached_outcome(const std::string& address) {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT payload FROM geocode_cache WHERE address = ?");
  s.bind(1, address);
  if (!s.step()) return std::nullopt;
  return geoloc::outcome_from_json(nlohmann::json::parse(s.text(0)));
}

void Store::cache_outcome(const std::string& address, const geoloc::GeocodeOutcome& outcome) {
  std::lock_guard lock(mu_);
  Statement s(db_, "INSERT OR REPLACE INTO geocode_cache (address, payload) VALUES (?, ?)");
  s.bind(1, address).bind(2, geoloc::outcome_to_json(outcome).dump());
  s.step();
}

PipelineStats Store::stats() {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT stage, COUNT(*) FROM results GROUP BY stage");
  PipelineStats out;
  while (s.step()) {
    const auto stage = parse_stage(s.text(0));
    for (long long n = s.integer(1); n > 0; --n) out.add(stage);
  }
  return out;
}

}  // namespace triage
