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
#include "triage/errors.hpp"
#include "triage/evalkit.hpp"

using namespace triage;
using namespace triage::evalkit;

namespace {

constexpr auto P = HelpLabel::kCallForHelp;
constexpr auto N = HelpLabel::kNotCallForHelp;

EntitySpan span(EntityTag tag, std::size_t s, std::size_t e) { return {tag, s, e, ""}; }

}  // namespace

TEST_SUITE("evalkit") {
  TEST_CASE("stratified folds: 6 positives and 4 negatives over k = 5") {
    std::vector<HelpLabel> labels = {P, P, P, P, P, P, N, N, N, N};
    auto folds = stratified_kfold(labels, 5, 1);
    for (int f = 0; f < 5; ++f) {
      int pos = 0, neg = 0;
      for (auto i : folds.test_indices(f)) (labels[i] == P ? pos : neg)++;
      CHECK((pos == 1 || pos == 2));
      CHECK((neg == 0 || neg == 1));
    }
  }

  TEST_CASE("stratified folds at Table 1 proportions") {
    std::vector<HelpLabel> labels(1000, N);
    std::fill(labels.begin(), labels.begin() + 418, P);
    auto folds = stratified_kfold(labels, 5, 7);
    for (int f = 0; f < 5; ++f) {
      auto test = folds.test_indices(f);
      CHECK(test.size() == 200);
      auto pos = std::count_if(test.begin(), test.end(), [&](auto i) { return labels[i] == P; });
      CHECK((pos == 83 || pos == 84));
      CHECK(test.size() + folds.train_indices(f).size() == 1000);
    }
  }

  TEST_CASE("fold count must fit the data") {
    CHECK_THROWS_AS(stratified_kfold(std::vector<HelpLabel>{P}, 2, 0), ValidationError);
    CHECK_THROWS_AS(stratified_kfold(std::vector<HelpLabel>{P, N, P}, 1, 0), ValidationError);
  }

  TEST_CASE("property: folds partition the examples with balanced classes") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 300; ++trial) {
      const int k = 2 + static_cast<int>(rng() % 6);
      const std::size_t n = k + rng() % 60;
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(rng() % 3);
      auto folds = stratified_kfold(labels, k, rng());
      std::vector<int> seen(n, 0);
      std::size_t smallest = n, largest = 0;
      for (int f = 0; f < k; ++f) {
        auto test = folds.test_indices(f);
        smallest = std::min(smallest, test.size());
        largest = std::max(largest, test.size());
        for (auto i : test) ++seen[i];
        for (int c = 0; c < 3; ++c) {
          const auto total = std::count(labels.begin(), labels.end(), c);
          const auto in_fold =
              std::count_if(test.begin(), test.end(), [&](auto i) { return labels[i] == c; });
          CHECK(in_fold >= total / k);
          CHECK(in_fold <= (total + k - 1) / k);
        }
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
      CHECK(largest - smallest <= 1);
    }
  }

  TEST_CASE("binary f1 examples") {
    CHECK(binary_f1_positive({P, N, P}, {P, N, P}).f1 == 1.0);
    auto prf = binary_f1_positive({P, P, P, N}, {P, P, N, P});
    CHECK(prf.tp == 2);
    CHECK(prf.fp == 1);
    CHECK(prf.fn == 1);
    CHECK(prf.precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(prf.recall == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(prf.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(binary_f1_positive({N, N}, {P, N}).f1 == 0.0);
    CHECK_THROWS_AS(binary_f1_positive({P}, {P, N}), ValidationError);
  }

  TEST_CASE("property: binary f1 ignores example order") {
    std::mt19937_64 rng(52);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<HelpLabel> pred(1 + rng() % 40), gold(pred.size());
      for (auto& l : pred) l = rng() % 2 ? P : N;
      for (auto& l : gold) l = rng() % 2 ? P : N;
      auto before = binary_f1_positive(pred, gold);
      std::vector<std::size_t> perm(pred.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<HelpLabel> p2, g2;
      for (auto i : perm) {
        p2.push_back(pred[i]);
        g2.push_back(gold[i]);
      }
      auto after = binary_f1_positive(p2, g2);
      CHECK(after.f1 == before.f1);
      CHECK(after.tp == before.tp);
    }
  }

  TEST_CASE("span f1 examples") {
    std::vector<std::vector<EntitySpan>> gold = {
        {span(EntityTag::kPer, 0, 3), span(EntityTag::kCity, 4, 9)}};
    auto perfect = conll_span_f1(gold, gold);
    CHECK(perfect.weighted_f1 == 1.0);
    CHECK(perfect.per_tag.at(EntityTag::kPer).f1 == 1.0);

    auto s = conll_span_f1({{span(EntityTag::kPer, 0, 3), span(EntityTag::kCity, 4, 8)}}, gold);
    CHECK(s.per_tag.at(EntityTag::kPer).f1 == 1.0);
    CHECK(s.per_tag.at(EntityTag::kCity).f1 == 0.0);
    CHECK(s.weighted_f1 == 0.5);

    auto wrong = conll_span_f1({{span(EntityTag::kCity, 0, 3)}}, {{span(EntityTag::kPer, 0, 3)}});
    CHECK(wrong.per_tag.at(EntityTag::kCity).fp == 1);
    CHECK(wrong.per_tag.at(EntityTag::kPer).fn == 1);
    CHECK(wrong.weighted_f1 == 0.0);
  }

  TEST_CASE("property: weighted f1 lies between per-tag extremes") {
    std::mt19937_64 rng(53);
    auto random_doc = [&] {
      std::vector<EntitySpan> doc;
      std::size_t pos = 0;
      for (std::size_t i = 0, n = rng() % 4; i < n; ++i) {
        pos += rng() % 3;
        const auto len = 1 + rng() % 3;
        doc.push_back(span(kEntityTags[rng() % 4], pos, pos + len));
        pos += len;
      }
      return doc;
    };
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<std::vector<EntitySpan>> gold, pred;
      for (std::size_t d = 0, n = 1 + rng() % 6; d < n; ++d) {
        gold.push_back(random_doc());
        pred.push_back(rng() % 3 ? gold.back() : random_doc());
        if (!pred.back().empty() && rng() % 2) pred.back().pop_back();
      }
      auto s = conll_span_f1(pred, gold);
      double lo = 1.0, hi = 0.0;
      bool any = false;
      for (const auto& [tag, prf] : s.per_tag) {
        if (prf.support == 0) continue;
        any = true;
        lo = std::min(lo, prf.f1);
        hi = std::max(hi, prf.f1);
      }
      if (!any) continue;
      CHECK(s.weighted_f1 >= lo - 1e-12);
      CHECK(s.weighted_f1 <= hi + 1e-12);
    }
  }

  TEST_CASE("synthetic corpus is deterministic and well-formed") {
    auto a = generate_synthetic_corpus(100, 1);
    auto b = generate_synthetic_corpus(100, 1);
    CHECK(a == b);
    CHECK(generate_synthetic_corpus(100, 2) != a);
    auto big = generate_synthetic_corpus(1000, 7);
    auto positives = std::count_if(big.begin(), big.end(), [](auto& e) { return e.label == P; });
    CHECK(positives >= 410);
    CHECK(positives <= 430);
    std::set<std::string> ids;
    for (const auto& ex : big) {
      ids.insert(ex.tweet.id);
      CHECK(check_spans(ex.tweet.text, ex.spans).empty());
      if (ex.label == P) {
        CHECK(std::any_of(ex.spans.begin(), ex.spans.end(),
                          [](auto& s) { return s.tag == EntityTag::kStatus; }));
      } else {
        CHECK(ex.spans.empty());
      }
    }
    CHECK(ids.size() == big.size());
    CHECK_THROWS_AS(generate_synthetic_corpus(5, 1), ValidationError);
  }

  TEST_CASE("labelled jsonl round trip and error reporting") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = (dir / "triage_labeled.jsonl").string();
    auto data = generate_synthetic_corpus(40, 3);
    write_labeled(path, data);
    CHECK(read_labeled(path) == data);

    const auto bad = (dir / "triage_bad.jsonl").string();
    std::ofstream(bad) << example_to_json(data[0]).dump() << "\n{\"tweet\":\n";
    CHECK_THROWS_AS(read_labeled(bad), ValidationError);
    const auto empty = (dir / "triage_empty_labeled.jsonl").string();
    std::ofstream(empty).close();
    CHECK_THROWS_AS(read_labeled(empty), ValidationError);
    CHECK_THROWS_AS(read_labeled((dir / "missing.jsonl").string()), IoError);
  }

  TEST_CASE("negative examples may not carry spans") {
    auto j = nlohmann::json::parse(R"({"tweet":{"id":"1","text":"Ali","created_at":"2023-02-06T04:00:00Z"},
      "label":"NotCallForHelp","spans":[{"tag":"PER","start":0,"end":3}]})");
    CHECK_THROWS_AS(example_from_json(j), ValidationError);
    j["label"] = "CallForHelp";
    CHECK(example_from_json(j).spans.at(0).surface == "Ali");
  }
}
