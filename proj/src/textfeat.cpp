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

#include "triage/textfeat.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "triage/errors.hpp"
#include "triage/unicode.hpp"

namespace triage::textfeat {

namespace {

// Longest first; the first applicable entry wins within a pass.
const std::array<std::u32string, 26> kSuffixes = {
    U"lardan", U"lerden", U"larda", U"lerde", U"ların", U"lerin", U"lar",
    U"ler",    U"dan",    U"den",   U"tan",   U"ten",   U"da",    U"de",
    U"ta",     U"te",     U"ın",    U"in",    U"un",    U"ün",    U"ı",
    U"i",      U"u",      U"ü",     U"a",     U"e"};

constexpr std::size_t kMinStem = 3;
constexpr int kMaxPasses = 2;
constexpr std::size_t kMaxAbbreviation = 4;

bool ends_with(const std::u32string& s, const std::u32string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::pair<std::u32string, int> strip_suffixes(std::string_view token) {
  auto word = unicode::fold(unicode::decode(token));
  int passes = 0;
  for (; passes < kMaxPasses; ++passes) {
    bool stripped = false;
    for (const auto& suffix : kSuffixes) {
      if (ends_with(word, suffix) && word.size() - suffix.size() >= kMinStem) {
        word.resize(word.size() - suffix.size());
        stripped = true;
        break;
      }
    }
    if (!stripped) break;
  }
  return {word, passes};
}

bool is_abbreviation(std::u32string_view core) {
  if (core.empty() || core.size() > kMaxAbbreviation) return false;
  if (!unicode::is_upper(core.front())) return false;
  return std::all_of(core.begin(), core.end(), unicode::is_letter);
}

}  // namespace

std::string_view to_string(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::kUpper: return "UPPER";
    case ShapeClass::kTitle: return "TITLE";
    case ShapeClass::kLower: return "LOWER";
    case ShapeClass::kDigit: return "DIGIT";
    case ShapeClass::kPunct: return "PUNCT";
    case ShapeClass::kMixed: return "MIXED";
  }
  return "MIXED";
}

std::vector<Token> tokenize(std::string_view text) {
  const auto chars = unicode::decode(text);
  const std::u32string_view view(chars);
  std::vector<Token> tokens;
  auto emit = [&](std::size_t start, std::size_t end) {
    tokens.push_back(
        Token{unicode::encode(view.substr(start, end - start)), start, end});
  };

  std::size_t i = 0;
  while (i < chars.size()) {
    if (unicode::is_space(chars[i])) {
      ++i;
      continue;
    }
    std::size_t chunk_end = i;
    while (chunk_end < chars.size() && !unicode::is_space(chars[chunk_end])) {
      ++chunk_end;
    }
    std::size_t lo = i;
    while (lo < chunk_end && unicode::is_punct(chars[lo])) {
      emit(lo, lo + 1);
      ++lo;
    }
    std::size_t hi = chunk_end;
    while (hi > lo && unicode::is_punct(chars[hi - 1])) --hi;
    if (lo < hi) {
      std::size_t core_end = hi;
      if (hi < chunk_end && chars[hi] == U'.' &&
          is_abbreviation(view.substr(lo, hi - lo))) {
        core_end = hi + 1;
      }
      emit(lo, core_end);
      hi = core_end;
    }
    for (std::size_t p = hi; p < chunk_end; ++p) emit(p, p + 1);
    i = chunk_end;
  }
  return tokens;
}

std::string stem(std::string_view token) {
  return unicode::encode(strip_suffixes(token).first);
}

int stem_passes(std::string_view token) { return strip_suffixes(token).second; }

ShapeClass shape_class(std::string_view token) {
  const auto chars = unicode::decode(token);
  if (chars.empty()) return ShapeClass::kMixed;
  const bool all_letters = std::all_of(chars.begin(), chars.end(), unicode::is_letter);
  if (all_letters) {
    if (std::all_of(chars.begin(), chars.end(), unicode::is_upper)) {
      return ShapeClass::kUpper;
    }
    if (std::all_of(chars.begin(), chars.end(), unicode::is_lower)) {
      return ShapeClass::kLower;
    }
    if (unicode::is_upper(chars.front()) &&
        std::all_of(chars.begin() + 1, chars.end(), unicode::is_lower)) {
      return ShapeClass::kTitle;
    }
    return ShapeClass::kMixed;
  }
  if (std::all_of(chars.begin(), chars.end(), unicode::is_digit)) {
    return ShapeClass::kDigit;
  }
  if (std::all_of(chars.begin(), chars.end(), unicode::is_punct)) {
    return ShapeClass::kPunct;
  }
  return ShapeClass::kMixed;
}

std::vector<std::string> document_terms(std::string_view text) {
  std::vector<std::string> terms;
  for (auto& token : tokenize(text)) terms.push_back(unicode::fold(token.surface));
  return terms;
}

double SparseVector::norm() const {
  double sum = 0.0;
  for (const auto& [index, weight] : entries) sum += weight * weight;
  return std::sqrt(sum);
}

TfIdfVectorizer::TfIdfVectorizer(std::vector<std::string> terms,
                                 std::vector<double> idf)
    : terms_(std::move(terms)), idf_(std::move(idf)) {
  if (terms_.size() != idf_.size()) {
    throw ValidationError("vectorizer terms and idf differ in length");
  }
  for (std::uint32_t i = 0; i < terms_.size(); ++i) {
    if (!std::isfinite(idf_[i])) throw ValidationError("non-finite idf weight");
    if (!index_.emplace(terms_[i], i).second) {
      throw ValidationError("duplicate vectorizer term: " + terms_[i]);
    }
  }
}

TfIdfVectorizer TfIdfVectorizer::fit(
    const std::vector<std::vector<std::string>>& corpus, std::size_t min_df) {
  if (corpus.empty()) throw ValidationError("cannot fit a vectorizer on an empty corpus");
  if (min_df < 1) throw ValidationError("min_df must be at least 1");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::vector<std::string> seen;
    seen.reserve(doc.size());
    for (const auto& term : doc) seen.push_back(unicode::fold(term));
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto& term : seen) ++df[term];
  }
  const double n = static_cast<double>(corpus.size());
  std::vector<std::string> terms;
  std::vector<double> idf;
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    terms.push_back(term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  if (terms.empty()) throw ValidationError("empty vocabulary; lower min_df");
  return TfIdfVectorizer(std::move(terms), std::move(idf));
}

long TfIdfVectorizer::index_of(std::string_view term) const {
  auto it = index_.find(term);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

SparseVector TfIdfVectorizer::transform_raw(const std::vector<std::string>& doc) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& term : doc) {
    auto it = index_.find(unicode::fold(term));
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  SparseVector out;
  for (const auto& [index, count] : counts) {
    out.entries.emplace_back(index, count * idf_[index]);
  }
  return out;
}

SparseVector TfIdfVectorizer::transform(const std::vector<std::string>& doc) const {
  auto out = transform_raw(doc);
  const double norm = out.norm();
  if (norm > 0.0) {
    for (auto& entry : out.entries) entry.second /= norm;
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string TfIdfVectorizer::fingerprint() const { return fnv1a_hex(to_json().dump()); }

nlohmann::json TfIdfVectorizer::to_json() const {
  return nlohmann::json{{"terms", terms_}, {"idf", idf_}};
}

TfIdfVectorizer TfIdfVectorizer::from_json(const nlohmann::json& j) {
  try {
    return TfIdfVectorizer(j.at("terms").get<std::vector<std::string>>(),
                           j.at("idf").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed vectorizer JSON: ") + e.what());
  }
}

}  // namespace triage::textfeat
