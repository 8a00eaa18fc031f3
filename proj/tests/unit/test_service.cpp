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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "test_server.hpp"
#include "triage/evalkit.hpp"

using namespace triage;
using nlohmann::json;
using fixture::small_models;
using fixture::TestServer;

namespace {

json tweet_json(const std::string& id, const std::string& text,
                const std::string& ts = "2023-02-06T04:17:00Z") {
  return {{"id", id}, {"text", text}, {"created_at", ts}};
}

json post(httplib::Client& c, const std::string& path, const std::string& body, int expect) {
  auto res = c.Post(path, body, "application/json");
  REQUIRE(res);
  CHECK_MESSAGE(res->status == expect, res->body);
  auto j = json::parse(res->body);
  if (expect != 200) {
    CHECK(j.contains("error"));
    CHECK(j["status"] == expect);
  }
  return j;
}

json get(httplib::Client& c, const std::string& path, int expect) {
  auto res = c.Get(path);
  REQUIRE(res);
  CHECK_MESSAGE(res->status == expect, res->body);
  CHECK(res->get_header_value("Content-Type").find("application/json") == 0);
  auto j = json::parse(res->body);
  if (expect != 200) {
    CHECK(j.contains("error"));
    CHECK(j["status"] == expect);
  }
  return j;
}

PipelineStats stats_from(const json& j) {
  PipelineStats s;
  s.ingested = j.at("ingested");
  s.classified_negative = j.at("classified_negative");
  s.tagged = j.at("tagged");
  s.tag_failed = j.at("tag_failed");
  s.geocode_attempted = j.at("geocode_attempted");
  s.located = j.at("located");
  s.unlocated = j.at("unlocated");
  s.filtered = j.at("filtered");
  return s;
}

const json kThree = json::array(
    {tweet_json("n1", "Deprem nedeniyle lig maçları ertelendi", "2023-02-06T04:00:00Z"),
     tweet_json("p1", "Mehmet Kaya enkaz altında, Gazi Mah. Barış Cad. No:12 Hatay lütfen yardım edin",
                "2023-02-06T05:00:00Z"),
     tweet_json("p2", "ACİL! Saray Mah. Millet Cad. No:4 Adana Ali Veli göçük altında #deprem",
                "2023-02-06T06:00:00Z")});

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("fresh store reports zero stats and empty lists") {
    TestServer server(small_models());
    auto c = server.client();
    CHECK(stats_from(get(c, "/api/v1/stats", 200)) == PipelineStats{});
    auto f = get(c, "/api/v1/filters", 200);
    CHECK(f["names"].empty());
    CHECK(f["statuses"].empty());
    auto page = get(c, "/api/v1/results", 200);
    CHECK(page["total"] == 0);
    CHECK(page["items"].empty());
  }

  TEST_CASE("ingest three tweets, then the same batch again") {
    TestServer server(small_models());
    auto c = server.client();
    auto first = post(c, "/api/v1/tweets", kThree.dump(), 200);
    CHECK(first["accepted"] == 3);
    CHECK(first["duplicates"] == 0);
    CHECK(first["stats"]["ingested"] == 3);
    CHECK(first["stats"]["classified_negative"] == 1);
    CHECK(stats_from(first["stats"]).conserved());
    const auto before = get(c, "/api/v1/results", 200);

    auto again = post(c, "/api/v1/tweets", kThree.dump(), 200);
    CHECK(again["accepted"] == 0);
    CHECK(again["duplicates"] == 3);
    CHECK(stats_from(again["stats"]) == PipelineStats{});
    CHECK(get(c, "/api/v1/results", 200) == before);
    CHECK(stats_from(get(c, "/api/v1/stats", 200)) == stats_from(first["stats"]));
  }

  TEST_CASE("ingest error shapes") {
    ServiceConfig config;
    config.max_batch = 2;
    TestServer server(small_models(), config);
    auto c = server.client();
    post(c, "/api/v1/tweets", "[", 400);
    post(c, "/api/v1/tweets", R"({"id":"1"})", 400);
    post(c, "/api/v1/tweets", kThree.dump(), 413);
    CHECK(stats_from(get(c, "/api/v1/stats", 200)) == PipelineStats{});
  }

  TEST_CASE("bodies beyond the transport limit get 413 json") {
    ServiceConfig config;
    config.max_batch = 1;
    TestServer server(small_models(), config);
    auto c = server.client();
    std::string huge = "[\"" + std::string(64 * 1024, 'x') + "\"]";
    auto res = c.Post("/api/v1/tweets", huge, "application/json");
    REQUIRE(res);
    CHECK(res->status == 413);
    CHECK(json::parse(res->body)["status"] == 413);
  }

  TEST_CASE("a bad tweet does not sink its batch") {
    TestServer server(small_models());
    auto c = server.client();
    json batch = kThree;
    batch.push_back({{"id", "bad"}, {"text", "no timestamp"}});
    batch.push_back(tweet_json("n1", "duplicate inside the batch"));
    auto r = post(c, "/api/v1/tweets", batch.dump(), 200);
    CHECK(r["accepted"] == 3);
    CHECK(r["rejected"] == 1);
    CHECK(r["duplicates"] == 1);
    CHECK(r["rejected_items"][0]["index"] == 3);
  }

  TEST_CASE("results: ordering, filters and paging") {
    TestServer server(small_models());
    auto c = server.client();
    post(c, "/api/v1/tweets", kThree.dump(), 200);
    json more = json::array();
    more.push_back(tweet_json("p3", "Hüseyin Aydın yaralı, İnönü Cad. No:7 Kat:3 Malatya lütfen yardım edin",
                              "2023-02-06T07:00:00Z"));
    more.push_back(tweet_json("n2", "Geçmiş olsun Türkiye, çok üzgünüz", "2023-02-06T07:00:00Z"));
    post(c, "/api/v1/tweets", more.dump(), 200);

    auto all = get(c, "/api/v1/results", 200);
    CHECK(all["total"] == 5);
    std::vector<std::string> ids;
    for (const auto& item : all["items"]) ids.push_back(item["tweet_id"]);
    CHECK(ids == std::vector<std::string>{"n2", "p3", "p2", "p1", "n1"});

    auto page = get(c, "/api/v1/results?limit=2", 200);
    CHECK(page["total"] == 5);
    CHECK(page["items"].size() == 2);

    // paging partitions the unfiltered list
    std::vector<std::string> paged;
    for (int offset = 0; offset < 5; offset += 2) {
      auto p = get(c, "/api/v1/results?limit=2&offset=" + std::to_string(offset), 200);
      for (const auto& item : p["items"]) paged.push_back(item["tweet_id"]);
    }
    CHECK(paged == ids);
    CHECK(get(c, "/api/v1/results?offset=10", 200)["items"].empty());

    auto yarali = get(c, "/api/v1/results?status=YARALI", 200);
    REQUIRE(yarali["total"] == 1);
    CHECK(yarali["items"][0]["tweet_id"] == "p3");

    auto named = get(c, "/api/v1/results?name=mehmet%20kaya", 200);
    REQUIRE(named["total"] == 1);
    CHECK(named["items"][0]["tweet_id"] == "p1");

    auto negatives = get(c, "/api/v1/results?stage=ClassifiedNegative", 200);
    CHECK(negatives["total"] == 2);

    get(c, "/api/v1/results?stage=Nope", 400);
    get(c, "/api/v1/results?limit=-1", 400);
    get(c, "/api/v1/results?limit=abc", 400);
    get(c, "/api/v1/results?offset=x", 400);
    get(c, "/api/v1/results?colour=red", 400);
  }

  TEST_CASE("filters dedupe case-insensitively and skip negatives") {
    TestServer server(small_models());
    auto c = server.client();
    json batch = json::array();
    batch.push_back(tweet_json("a", "Ali enkaz altında, Gazi Mah. Barış Cad. No:12 Hatay lütfen yardım edin",
                               "2023-02-06T04:00:00Z"));
    batch.push_back(tweet_json("b", "ali enkaz altında, Saray Mah. Millet Cad. No:2 Adana lütfen yardım edin",
                               "2023-02-06T05:00:00Z"));
    batch.push_back(tweet_json("c", "Deprem nedeniyle lig maçları ertelendi"));
    post(c, "/api/v1/tweets", batch.dump(), 200);
    auto f = get(c, "/api/v1/filters", 200);
    CHECK(f["names"] == json::array({"Ali"}));
    CHECK(f["statuses"] == json::array({"enkaz altında"}));
  }

  TEST_CASE("tweet detail and 404") {
    TestServer server(small_models());
    auto c = server.client();
    post(c, "/api/v1/tweets", kThree.dump(), 200);
    auto detail = get(c, "/api/v1/tweets/p1", 200);
    CHECK(detail["tweet"]["id"] == "p1");
    CHECK(detail["result"]["stage"] == "Located");
    CHECK(detail["annotations"].empty());
    get(c, "/api/v1/tweets/missing", 404);
    get(c, "/api/v1/unknown", 404);
  }

  TEST_CASE("annotations: save, replace, validate") {
    TestServer server(small_models());
    auto c = server.client();
    post(c, "/api/v1/tweets", kThree.dump(), 200);
    json rec = {{"tweet_id", "p1"},
                {"label", "CallForHelp"},
                {"annotator", "ayse"},
                {"spans", {{{"tag", "PER"}, {"start", 0}, {"end", 11}}}}};
    auto saved = post(c, "/api/v1/annotations", rec.dump(), 200);
    CHECK(saved["spans"][0]["surface"] == "Mehmet Kaya");
    CHECK(saved.contains("created_at"));

    rec["spans"].push_back({{"tag", "STATUS"}, {"start", 12}, {"end", 25}});
    post(c, "/api/v1/annotations", rec.dump(), 200);
    auto detail = get(c, "/api/v1/tweets/p1", 200);
    REQUIRE(detail["annotations"].size() == 1);
    CHECK(detail["annotations"][0]["spans"].size() == 2);
    CHECK(detail["annotations"][0]["spans"][1]["surface"] == "enkaz altında");

    json beyond = rec;
    beyond["spans"] = {{{"tag", "PER"}, {"start", 0}, {"end", 500}}};
    post(c, "/api/v1/annotations", beyond.dump(), 422);
    json overlap = rec;
    overlap["spans"] = {{{"tag", "PER"}, {"start", 0}, {"end", 6}},
                        {{"tag", "PER"}, {"start", 3}, {"end", 11}}};
    post(c, "/api/v1/annotations", overlap.dump(), 422);
    json negative_with_spans = rec;
    negative_with_spans["label"] = "NotCallForHelp";
    post(c, "/api/v1/annotations", negative_with_spans.dump(), 422);
    json unknown = rec;
    unknown["tweet_id"] = "nope";
    post(c, "/api/v1/annotations", unknown.dump(), 404);
    post(c, "/api/v1/annotations", "{", 400);
    post(c, "/api/v1/annotations", R"({"tweet_id":"p1"})", 400);
    json bad_tag = rec;
    bad_tag["spans"] = {{{"tag", "ANIMAL"}, {"start", 0}, {"end", 3}}};
    post(c, "/api/v1/annotations", bad_tag.dump(), 400);
  }

  TEST_CASE("client configuration and static mount") {
    fixture::TempDir ui;
    std::ofstream(ui.path("index.html")) << "<!doctype html><title>triage</title>";
    TestServer server(small_models(), {}, nullptr, ui.path());
    auto c = server.client();
    auto cfg = get(c, "/config.json", 200);
    CHECK(cfg["api_base"] == "/api/v1");
    CHECK(cfg["bbox"] == json::array({35.5, 39.5, 35.0, 41.5}));
    CHECK(cfg["poll_interval_ms"] == 5000);
    auto res = c.Get("/");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("triage") != std::string::npos);
  }

  TEST_CASE("property: conservation after every batch and additivity of deltas") {
    TestServer server(small_models());
    auto c = server.client();
    auto corpus = evalkit::generate_synthetic_corpus(150, 21);
    std::mt19937_64 rng(5);
    PipelineStats summed;
    std::size_t i = 0;
    while (i < corpus.size()) {
      json batch = json::array();
      for (std::size_t n = 1 + rng() % 30; n > 0 && i < corpus.size(); --n, ++i) {
        batch.push_back(corpus[i].tweet);
      }
      if (rng() % 3 == 0 && i > 0) batch.push_back(corpus[rng() % i].tweet);
      auto r = post(c, "/api/v1/tweets", batch.dump(), 200);
      auto delta = stats_from(r["stats"]);
      CHECK(delta.conserved());
      summed += delta;
      auto total = stats_from(get(c, "/api/v1/stats", 200));
      CHECK(total.conserved());
      CHECK(total == summed);
    }
    CHECK(summed.ingested == corpus.size());

    auto all = get(c, "/api/v1/results", 200);
    std::set<std::string> universe;
    for (const auto& item : all["items"]) universe.insert(item["tweet_id"]);
    for (const auto& item : all["items"]) {
      if (item["stage"] == "Located") {
        const auto& o = item["outcome"];
        CHECK(geoloc::within_bbox(geoloc::make_point(o["lat"], o["lon"]), geoloc::default_box()));
      }
    }
    auto filters = get(c, "/api/v1/filters", 200);
    for (const auto& status : filters["statuses"]) {
      auto subset = get(c, "/api/v1/results?status=" +
                               httplib::detail::encode_query_param(status.get<std::string>()),
                        200);
      CHECK(subset["total"] >= 1);
      for (const auto& item : subset["items"]) CHECK(universe.count(item["tweet_id"]) == 1);
    }
  }
}
