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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"

namespace triage::geoloc {

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Throws ValidationError when outside [-90, 90] x [-180, 180] or non-finite.
GeoPoint make_point(double lat, double lon);

struct BoundingBox {
  double min_lat = 0.0;
  double max_lat = 0.0;
  double min_lon = 0.0;
  double max_lon = 0.0;
};

BoundingBox make_box(double min_lat, double max_lat, double min_lon, double max_lon);
// "min_lat,max_lat,min_lon,max_lon"
BoundingBox parse_box(std::string_view text);
// Southern Turkey / northern Syria.
BoundingBox default_box();

// Inclusive on every edge.
bool within_bbox(const GeoPoint& p, const BoundingBox& box);

class CityList {
 public:
  explicit CityList(std::vector<std::string> names);
  // One city per line; blank lines and '#' comments are skipped.
  static CityList load(const std::string& path);
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// The eleven provinces declared disaster areas in February 2023.
CityList affected_cities();

// Optimal string alignment distance over Unicode scalar values.
std::size_t damerau_levenshtein(std::string_view a, std::string_view b);
std::size_t damerau_levenshtein(std::u32string_view a, std::u32string_view b);

struct CityMatch {
  std::string city;
  std::size_t distance = 0;
};

// Nearest city by case-folded distance, accepted iff
// distance <= max(1, ceil(len(raw) / 4)); ties go to the earlier city.
std::optional<CityMatch> match_city(std::string_view raw, const CityList& cities);

// ADDR surfaces then the city; characters other than alphanumerics, '.', ','
// and '-' become spaces; whitespace collapsed; every word title-cased.
std::string normalize_address(const std::vector<EntitySpan>& addr_spans,
                              const std::optional<std::string>& city);

struct Located {
  GeoPoint point;
};
struct NotFound {};
struct OutOfScope {
  GeoPoint point;
};
struct ProviderError {
  std::string message;
};

using GeocodeOutcome = std::variant<Located, NotFound, OutOfScope, ProviderError>;

nlohmann::json outcome_to_json(const GeocodeOutcome& outcome);
GeocodeOutcome outcome_from_json(const nlohmann::json& j);
std::string_view outcome_kind(const GeocodeOutcome& outcome);

// Located outside the box becomes OutOfScope; other outcomes pass through.
GeocodeOutcome apply_scope(const GeocodeOutcome& outcome, const BoundingBox& box);

// Result of a single provider lookup: candidate points in provider order.
// Transport or payload failures throw ProviderFailure.
class ProviderFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeocodingProvider {
 public:
  virtual ~GeocodingProvider() = default;
  virtual std::vector<GeoPoint> lookup(const std::string& address) = 0;
};

// Deterministic table-driven provider. Lookup order: exact address, then the
// longest matching suffix rule, then the first matching substring rule.
// Rule hits are displaced by a hash-derived offset of at most `jitter` degrees.
class MockProvider : public GeocodingProvider {
 public:
  MockProvider() = default;
  explicit MockProvider(std::map<std::string, GeoPoint> exact);

  void add_exact(std::string address, GeoPoint p);
  void add_suffix(std::string suffix, GeoPoint p);
  void add_contains(std::string needle, GeoPoint p);
  void set_jitter(double degrees) { jitter_ = degrees; }
  // Makes every lookup whose address contains `needle` return this payload to
  // the caller as a failure.
  void add_failure(std::string needle, std::string message);

  // {"exact": {addr: [lat, lon]}, "suffix": {...}, "contains": {...},
  //  "jitter": degrees, "fail": {needle: message}}
  static std::unique_ptr<MockProvider> from_json(const nlohmann::json& j);
  static std::unique_ptr<MockProvider> load(const std::string& path);

  std::vector<GeoPoint> lookup(const std::string& address) override;
  std::size_t requests() const { return requests_.load(); }

 private:
  GeoPoint displaced(const std::string& address, GeoPoint p) const;

  std::map<std::string, GeoPoint> exact_;
  std::vector<std::pair<std::string, GeoPoint>> suffix_;
  std::vector<std::pair<std::string, GeoPoint>> contains_;
  std::vector<std::pair<std::string, std::string>> failures_;
  double jitter_ = 0.0;
  std::atomic<std::size_t> requests_{0};
};

struct HttpProviderConfig {
  // Placeholders {address} and {key} are replaced with URL-encoded values.
  std::string url_template =
      "https://maps.googleapis.com/maps/api/geocode/json?address={address}&key={key}";
  std::string api_key;
  std::string results_path = "results";
  std::string lat_path = "geometry.location.lat";
  std::string lon_path = "geometry.location.lng";
  std::chrono::seconds timeout{10};
};

class HttpProvider : public GeocodingProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  std::vector<GeoPoint> lookup(const std::string& address) override;
  const HttpProviderConfig& config() const { return config_; }

 private:
  HttpProviderConfig config_;
};

// Candidate points from a provider response body; throws ProviderFailure on
// malformed payloads.
std::vector<GeoPoint> parse_candidates(const std::string& body,
                                       const HttpProviderConfig& config);

std::string url_encode(std::string_view s);

class GeocodeCache {
 public:
  virtual ~GeocodeCache() = default;
  virtual std::optional<GeocodeOutcome> get(const std::string& address) = 0;
  virtual void put(const std::string& address, const GeocodeOutcome& outcome) = 0;
};

class MemoryCache : public GeocodeCache {
 public:
  std::optional<GeocodeOutcome> get(const std::string& address) override;
  void put(const std::string& address, const GeocodeOutcome& outcome) override;

 private:
  std::mutex mu_;
  std::map<std::string, GeocodeOutcome> entries_;
};

// Token bucket; rate <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_second, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct GeocoderConfig {
  int max_in_flight = 4;
  double requests_per_second = 10.0;
};

// Cached, rate-limited front to a provider. Concurrent requests for the same
// address share one provider call. Located and NotFound are cached;
// ProviderError is not.
class Geocoder {
 public:
  Geocoder(std::shared_ptr<GeocodingProvider> provider,
           std::shared_ptr<GeocodeCache> cache, GeocoderConfig config = {});

  GeocodeOutcome geocode(const std::string& address);
  std::size_t provider_calls() const { return provider_calls_.load(); }

 private:
  GeocodeOutcome query_provider(const std::string& address);

  std::shared_ptr<GeocodingProvider> provider_;
  std::shared_ptr<GeocodeCache> cache_;
  std::counting_semaphore<> slots_;
  RateLimiter limiter_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<GeocodeOutcome>> in_flight_;
  std::atomic<std::size_t> provider_calls_{0};
};

}  // namespace triage::geoloc
