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

#include <cmath>
#include <random>

#include "doctest.h"
#include "triage/errors.hpp"
#include "triage/textfeat.hpp"
#include "triage/unicode.hpp"

using namespace triage;
using namespace triage::textfeat;

TEST_SUITE("textfeat") {
  TEST_CASE("tokenize splits trailing punctuation with offsets") {
    auto t = tokenize("Enkaz altında!");
    REQUIRE(t.size() == 3);
    CHECK(t[0] == Token{"Enkaz", 0, 5});
    CHECK(t[1] == Token{"altında", 6, 13});
    CHECK(t[2] == Token{"!", 13, 14});
  }

  TEST_CASE("tokenize keeps abbreviation dots and inner punctuation") {
    auto t = tokenize("Atatürk Cad. no:12");
    REQUIRE(t.size() == 3);
    CHECK(t[0].surface == "Atatürk");
    CHECK(t[1].surface == "Cad.");
    CHECK(t[2].surface == "no:12");
  }

  TEST_CASE("tokenize of empty or blank text") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \t ").empty());
  }

  TEST_CASE("property: token offsets reconstruct surfaces") {
    std::mt19937_64 rng(5);
    const std::u32string alphabet = U"aıİşĞ .,!:#@1Ç\t";
    for (int trial = 0; trial < 1000; ++trial) {
      std::u32string s;
      for (std::size_t i = 0, n = rng() % 30; i < n; ++i) s += alphabet[rng() % alphabet.size()];
      const auto text = unicode::encode(s);
      for (const auto& tok : tokenize(text)) {
        CHECK(unicode::substr(text, tok.start, tok.end) == tok.surface);
        CHECK_FALSE(tok.surface.empty());
      }
    }
  }

  TEST_CASE("stem examples") {
    CHECK(stem("enkazda") == "enkaz");
    CHECK(stem("evlerde") == "evler");
    CHECK(stem("Ali") == "ali");
  }

  TEST_CASE("property: stem is idempotent when the pass limit is not reached") {
    const std::vector<std::string> words = {
        "enkazda",  "evlerde",   "binalarda", "altında",   "kurtarıldı", "yardım",
        "ailesi",   "sokakta",   "Hatay'da",  "çocuklar",  "kardeşim",   "mahallesinde",
        "ekipler",  "depremde",  "ulaşamıyoruz", "sesleri", "arkadaşlarımız", "yaralılar",
        "göçükte",  "insanların", "evimizin", "kaldılar",  "bekliyor",  "annemler"};
    std::size_t checked = 0;
    for (const auto& w : words) {
      if (stem_passes(w) >= 2) continue;
      CHECK_MESSAGE(stem(stem(w)) == stem(w), w);
      ++checked;
    }
    CHECK(checked >= 10);
  }

  TEST_CASE("shape classes") {
    CHECK(shape_class("ACİL") == ShapeClass::kUpper);
    CHECK(shape_class("Hatay") == ShapeClass::kTitle);
    CHECK(shape_class("enkaz") == ShapeClass::kLower);
    CHECK(shape_class("12") == ShapeClass::kDigit);
    CHECK(shape_class("!") == ShapeClass::kPunct);
    CHECK(shape_class("no:12") == ShapeClass::kMixed);
  }

  TEST_CASE("tf-idf idf values") {
    auto v = TfIdfVectorizer::fit({{"a", "b"}, {"a"}}, 1);
    REQUIRE(v.terms() == std::vector<std::string>{"a", "b"});
    CHECK(v.idf()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.idf()[1] == doctest::Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(v.idf()[1] == doctest::Approx(1.405465).epsilon(1e-6));
  }

  TEST_CASE("tf-idf min_df prunes rare terms") {
    auto v = TfIdfVectorizer::fit({{"a", "b"}, {"a"}}, 2);
    CHECK(v.terms() == std::vector<std::string>{"a"});
  }

  TEST_CASE("tf-idf with no terms is an error") {
    CHECK_THROWS_AS(TfIdfVectorizer::fit({{}}, 1), ValidationError);
  }

  TEST_CASE("tf-idf transform") {
    auto v = TfIdfVectorizer::fit({{"a", "b"}, {"a"}}, 1);
    auto raw = v.transform_raw({"a", "a"});
    REQUIRE(raw.entries.size() == 1);
    CHECK(raw.entries[0].first == 0);
    CHECK(raw.entries[0].second == doctest::Approx(2.0));
    auto norm = v.transform({"a", "a"});
    CHECK(norm.entries[0].second == doctest::Approx(1.0));

    auto ab = v.transform({"a", "b"});
    REQUIRE(ab.entries.size() == 2);
    CHECK(ab.entries[0].second == doctest::Approx(0.57974).epsilon(1e-5));
    CHECK(ab.entries[1].second == doctest::Approx(0.81480).epsilon(1e-5));

    CHECK(v.transform({"zzz", "yyy"}).empty());
  }

  TEST_CASE("property: non-empty transforms have unit norm") {
    std::mt19937_64 rng(9);
    std::vector<std::vector<std::string>> corpus;
    for (int d = 0; d < 50; ++d) {
      std::vector<std::string> doc;
      for (std::size_t i = 0, n = 1 + rng() % 12; i < n; ++i) {
        doc.push_back("t" + std::to_string(rng() % 40));
      }
      corpus.push_back(doc);
    }
    auto v = TfIdfVectorizer::fit(corpus, 1);
    for (const auto& doc : corpus) {
      auto x = v.transform(doc);
      REQUIRE_FALSE(x.empty());
      CHECK(std::abs(x.norm() - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("property: terms present everywhere get idf exactly 1") {
    auto v = TfIdfVectorizer::fit({{"x", "y"}, {"y", "x", "x"}, {"x", "y"}}, 1);
    for (double idf : v.idf()) CHECK(idf == 1.0);
  }

  TEST_CASE("vectorizer json round trip keeps the fingerprint") {
    auto v = TfIdfVectorizer::fit({{"a", "b"}, {"a", "c"}}, 1);
    auto back = TfIdfVectorizer::from_json(v.to_json());
    CHECK(back.terms() == v.terms());
    CHECK(back.idf() == v.idf());
    CHECK(back.fingerprint() == v.fingerprint());
    CHECK(back.index_of("c") == 2);
    CHECK(back.index_of("d") == -1);
  }

  TEST_CASE("document terms are folded tokens") {
    CHECK(document_terms("ACİL Yardım!") == std::vector<std::string>{"acil", "yardım", "!"});
  }
}
