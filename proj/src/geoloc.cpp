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

#include "triage/geoloc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "triage/errors.hpp"
#include "triage/textfeat.hpp"
#include "triage/unicode.hpp"

namespace triage::geoloc {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const nlohmann::json* walk(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* node = &root;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto dot = path.find('.', pos);
    auto key = path.substr(pos, dot == std::string_view::npos ? std::string_view::npos
                                                               : dot - pos);
    if (!key.empty()) {
      if (!node->is_object()) return nullptr;
      auto it = node->find(std::string(key));
      if (it == node->end()) return nullptr;
      node = &*it;
    }
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return node;
}

GeoPoint point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError("mock geocoder points must be [lat, lon]");
  }
  return make_point(j[0].get<double>(), j[1].get<double>());
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

GeoPoint make_point(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 ||
      lon < -180.0 || lon > 180.0) {
    throw ValidationError("coordinates out of range");
  }
  return {lat, lon};
}

BoundingBox make_box(double min_lat, double max_lat, double min_lon, double max_lon) {
  if (!(min_lat < max_lat) || !(min_lon < max_lon)) {
    throw ValidationError("bounding box needs min < max on both axes");
  }
  return {min_lat, max_lat, min_lon, max_lon};
}

BoundingBox parse_box(std::string_view text) {
  std::vector<double> values;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(part, &used));
      while (used < part.size() && std::isspace(static_cast<unsigned char>(part[used]))) ++used;
      if (used != part.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("bounding box values must be numbers: " + std::string(text));
    }
  }
  if (values.size() != 4) {
    throw ValidationError("bounding box needs four comma-separated degrees");
  }
  return make_box(values[0], values[1], values[2], values[3]);
}

BoundingBox default_box() { return {35.5, 39.5, 35.0, 41.5}; }

bool within_bbox(const GeoPoint& p, const BoundingBox& box) {
  return p.lat >= box.min_lat && p.lat <= box.max_lat && p.lon >= box.min_lon &&
         p.lon <= box.max_lon;
}

CityList::CityList(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("city list must not be empty");
  std::vector<std::string> folded;
  for (const auto& name : names_) folded.push_back(unicode::fold(name));
  std::sort(folded.begin(), folded.end());
  if (std::adjacent_find(folded.begin(), folded.end()) != folded.end()) {
    throw ValidationError("city list has duplicates after case folding");
  }
}

CityList CityList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read city list: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t");
    names.push_back(line.substr(first, last - first + 1));
  }
  return CityList(std::move(names));
}

CityList affected_cities() {
  return CityList({"Adana", "Adıyaman", "Diyarbakır", "Elazığ", "Gaziantep", "Hatay",
                   "Kahramanmaraş", "Kilis", "Malatya", "Osmaniye", "Şanlıurfa"});
}

std::size_t damerau_levenshtein(std::u32string_view a, std::u32string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      auto best = std::min({at(i - 1, j) + 1, at(i, j - 1) + 1, at(i - 1, j - 1) + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        best = std::min(best, at(i - 2, j - 2) + 1);
      }
      at(i, j) = best;
    }
  }
  return at(n, m);
}

std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  return damerau_levenshtein(unicode::decode(a), unicode::decode(b));
}

std::optional<CityMatch> match_city(std::string_view raw, const CityList& cities) {
  const auto query = unicode::fold(unicode::decode(raw));
  if (query.empty()) throw ValidationError("city text must be non-empty");
  std::optional<CityMatch> best;
  for (const auto& city : cities.names()) {
    const auto dist = damerau_levenshtein(query, unicode::fold(unicode::decode(city)));
    if (!best || dist < best->distance) best = CityMatch{city, dist};
  }
  const std::size_t limit = std::max<std::size_t>(1, (query.size() + 3) / 4);
  if (best && best->distance <= limit) return best;
  return std::nullopt;
}

std::string normalize_address(const std::vector<EntitySpan>& addr_spans,
                              const std::optional<std::string>& city) {
  std::vector<const EntitySpan*> addrs;
  for (const auto& span : addr_spans) {
    if (span.tag == EntityTag::kAddr) addrs.push_back(&span);
  }
  if (addrs.empty() && (!city || city->empty())) {
    throw ValidationError("address normalization needs an ADDR span or a city");
  }
  std::stable_sort(addrs.begin(), addrs.end(),
                   [](auto* a, auto* b) { return a->start < b->start; });
  std::u32string joined;
  for (const auto* span : addrs) {
    joined += unicode::decode(span->surface);
    joined += U' ';
  }
  if (city) joined += unicode::decode(*city);

  for (auto& c : joined) {
    if (!unicode::is_alnum(c) && c != U'.' && c != U',' && c != U'-') c = U' ';
  }
  std::u32string out;
  std::size_t i = 0;
  while (i < joined.size()) {
    if (joined[i] == U' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < joined.size() && joined[j] != U' ') ++j;
    if (!out.empty()) out += U' ';
    out += unicode::title_word(std::u32string_view(joined).substr(i, j - i));
    i = j;
  }
  if (out.empty()) throw ValidationError("address is empty after normalization");
  return unicode::encode(out);
}

std::string_view outcome_kind(const GeocodeOutcome& outcome) {
  struct Visitor {
    std::string_view operator()(const Located&) const { return "Located"; }
    std::string_view operator()(const NotFound&) const { return "NotFound"; }
    std::string_view operator()(const OutOfScope&) const { return "OutOfScope"; }
    std::string_view operator()(const ProviderError&) const { return "ProviderError"; }
  };
  return std::visit(Visitor{}, outcome);
}

nlohmann::json outcome_to_json(const GeocodeOutcome& outcome) {
  nlohmann::json j{{"kind", outcome_kind(outcome)}};
  if (auto* l = std::get_if<Located>(&outcome)) {
    j["lat"] = l->point.lat;
    j["lon"] = l->point.lon;
  } else if (auto* o = std::get_if<OutOfScope>(&outcome)) {
    j["lat"] = o->point.lat;
    j["lon"] = o->point.lon;
  } else if (auto* e = std::get_if<ProviderError>(&outcome)) {
    j["message"] = e->message;
  }
  return j;
}

GeocodeOutcome outcome_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "Located") {
    return Located{make_point(j.at("lat").get<double>(), j.at("lon").get<double>())};
  }
  if (kind == "OutOfScope") {
    return OutOfScope{make_point(j.at("lat").get<double>(), j.at("lon").get<double>())};
  }
  if (kind == "NotFound") return NotFound{};
  if (kind == "ProviderError") return ProviderError{j.value("message", std::string{})};
  throw ValidationError("unknown geocode outcome: " + kind);
}

GeocodeOutcome apply_scope(const GeocodeOutcome& outcome, const BoundingBox& box) {
  if (auto* l = std::get_if<Located>(&outcome); l && !within_bbox(l->point, box)) {
    return OutOfScope{l->point};
  }
  return outcome;
}

MockProvider::MockProvider(std::map<std::string, GeoPoint> exact)
    : exact_(std::move(exact)) {}

void MockProvider::add_exact(std::string address, GeoPoint p) {
  exact_[std::move(address)] = p;
}

void MockProvider::add_suffix(std::string suffix, GeoPoint p) {
  suffix_.emplace_back(std::move(suffix), p);
  std::stable_sort(suffix_.begin(), suffix_.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });
}

void MockProvider::add_contains(std::string needle, GeoPoint p) {
  contains_.emplace_back(std::move(needle), p);
}

void MockProvider::add_failure(std::string needle, std::string message) {
  failures_.emplace_back(std::move(needle), std::move(message));
}

std::unique_ptr<MockProvider> MockProvider::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("mock geocoder table must be an object");
  auto provider = std::make_unique<MockProvider>();
  if (auto it = j.find("exact"); it != j.end()) {
    for (const auto& [k, v] : it->items()) provider->add_exact(k, point_from_json(v));
  }
  if (auto it = j.find("suffix"); it != j.end()) {
    for (const auto& [k, v] : it->items()) provider->add_suffix(k, point_from_json(v));
  }
  if (auto it = j.find("contains"); it != j.end()) {
    for (const auto& [k, v] : it->items()) provider->add_contains(k, point_from_json(v));
  }
  if (auto it = j.find("fail"); it != j.end()) {
    for (const auto& [k, v] : it->items()) provider->add_failure(k, v.get<std::string>());
  }
  provider->set_jitter(j.value("jitter", 0.0));
  return provider;
}

std::unique_ptr<MockProvider> MockProvider::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read mock geocoder table: " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed mock geocoder table " + path + ": " + e.what());
  }
}

GeoPoint MockProvider::displaced(const std::string& address, GeoPoint p) const {
  if (jitter_ <= 0.0) return p;
  const auto hash = std::stoull(textfeat::fnv1a_hex(address), nullptr, 16);
  const double u = static_cast<double>(hash & 0xFFFFFFFFULL) / 4294967295.0;
  const double v = static_cast<double>(hash >> 32) / 4294967295.0;
  return {std::clamp(p.lat + (2.0 * u - 1.0) * jitter_, -90.0, 90.0),
          std::clamp(p.lon + (2.0 * v - 1.0) * jitter_, -180.0, 180.0)};
}

std::vector<GeoPoint> MockProvider::lookup(const std::string& address) {
  ++requests_;
  for (const auto& [needle, message] : failures_) {
    if (address.find(needle) != std::string::npos) throw ProviderFailure(message);
  }
  if (auto it = exact_.find(address); it != exact_.end()) return {it->second};
  for (const auto& [suffix, p] : suffix_) {
    if (address == suffix || ends_with(address, " " + suffix)) {
      return {displaced(address, p)};
    }
  }
  for (const auto& [needle, p] : contains_) {
    if (address.find(needle) != std::string::npos) return {displaced(address, p)};
  }
  return {};
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::vector<GeoPoint> parse_candidates(const std::string& body,
                                       const HttpProviderConfig& config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderFailure(std::string("geocoder returned invalid JSON: ") + e.what());
  }
  const auto* results = walk(j, config.results_path);
  if (!results || !results->is_array()) {
    throw ProviderFailure("geocoder response has no candidate array at '" +
                          config.results_path + "'");
  }
  std::vector<GeoPoint> points;
  for (const auto& candidate : *results) {
    const auto* lat = walk(candidate, config.lat_path);
    const auto* lon = walk(candidate, config.lon_path);
    if (!lat || !lon || !lat->is_number() || !lon->is_number()) {
      throw ProviderFailure("geocoder candidate lacks numeric coordinates");
    }
    try {
      points.push_back(make_point(lat->get<double>(), lon->get<double>()));
    } catch (const ValidationError& e) {
      throw ProviderFailure(e.what());
    }
  }
  return points;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.url_template.find("{address}") == std::string::npos) {
    throw ValidationError("geocoder URL template needs an {address} placeholder");
  }
}

std::vector<GeoPoint> HttpProvider::lookup(const std::string& address) {
  std::string url = config_.url_template;
  replace_all(url, "{address}", url_encode(address));
  replace_all(url, "{key}", url_encode(config_.api_key));
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ProviderFailure("geocoder URL lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string target = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  auto res = client.Get(target);
  if (!res) {
    throw ProviderFailure("geocoder request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProviderFailure("geocoder returned HTTP " + std::to_string(res->status));
  }
  return parse_candidates(res->body, config_);
}

std::optional<GeocodeOutcome> MemoryCache::get(const std::string& address) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(address);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void MemoryCache::put(const std::string& address, const GeocodeOutcome& outcome) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(address, outcome);
}

RateLimiter::RateLimiter(double rate_per_second, double burst)
    : rate_(rate_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      const std::chrono::duration<double> elapsed = now - last_;
      last_ = now;
      tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

Geocoder::Geocoder(std::shared_ptr<GeocodingProvider> provider,
                   std::shared_ptr<GeocodeCache> cache, GeocoderConfig config)
    : provider_(std::move(provider)),
      cache_(cache ? std::move(cache) : std::make_shared<MemoryCache>()),
      slots_(std::max(1, config.max_in_flight)),
      limiter_(config.requests_per_second) {
  if (!provider_) throw ValidationError("geocoder needs a provider");
}

GeocodeOutcome Geocoder::query_provider(const std::string& address) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  limiter_.acquire();
  ++provider_calls_;
  try {
    auto candidates = provider_->lookup(address);
    if (candidates.empty()) return NotFound{};
    return Located{candidates.front()};
  } catch (const std::exception& e) {
    return ProviderError{e.what()};
  }
}

GeocodeOutcome Geocoder::geocode(const std::string& address) {
  if (address.empty()) throw ValidationError("cannot geocode an empty address");
  if (auto hit = cache_->get(address)) return *hit;

  std::promise<GeocodeOutcome> promise;
  {
    std::unique_lock lock(mu_);
    if (auto it = in_flight_.find(address); it != in_flight_.end()) {
      auto shared = it->second;
      lock.unlock();
      return shared.get();
    }
    if (auto hit = cache_->get(address)) return *hit;
    in_flight_.emplace(address, promise.get_future().share());
  }

  auto finish = [&] {
    std::lock_guard lock(mu_);
    in_flight_.erase(address);
  };
  try {
    auto outcome = query_provider(address);
    if (!std::holds_alternative<ProviderError>(outcome)) cache_->put(address, outcome);
    finish();
    promise.set_value(outcome);
    return outcome;
  } catch (...) {
    finish();
    promise.set_exception(std::current_exception());
    throw;
  }
}

}  // namespace triage::geoloc
