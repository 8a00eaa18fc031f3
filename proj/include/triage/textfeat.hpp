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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"

namespace triage::textfeat {

enum class ShapeClass { kUpper, kTitle, kLower, kDigit, kPunct, kMixed };

std::string_view to_string(ShapeClass shape);

// Whitespace split; edge punctuation becomes single-character tokens, except
// that a trailing '.' stays on short capitalised abbreviations ("Cad.").
std::vector<Token> tokenize(std::string_view text);

// Case-folded surface with at most two inflectional suffixes removed.
std::string stem(std::string_view token);

// Number of suffixes stem() removed from `token` (0, 1 or 2).
int stem_passes(std::string_view token);

ShapeClass shape_class(std::string_view token);

// Case-folded token surfaces, the classifier's view of a text.
std::vector<std::string> document_terms(std::string_view text);

struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly increasing index

  bool empty() const { return entries.empty(); }
  double norm() const;
};

class TfIdfVectorizer {
 public:
  TfIdfVectorizer() = default;
  TfIdfVectorizer(std::vector<std::string> terms, std::vector<double> idf);

  // idf(t) = ln((1 + N) / (1 + df(t))) + 1 over terms with df >= min_df.
  static TfIdfVectorizer fit(const std::vector<std::vector<std::string>>& corpus,
                             std::size_t min_df = 1);

  // Raw counts times idf, L2-normalised; out-of-vocabulary terms dropped.
  SparseVector transform(const std::vector<std::string>& doc) const;
  SparseVector transform_raw(const std::vector<std::string>& doc) const;

  std::size_t feature_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  // -1 when the term is not in the vocabulary.
  long index_of(std::string_view term) const;

  // Hex FNV-1a over the serialised vocabulary and weights.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static TfIdfVectorizer from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
};

std::string fnv1a_hex(std::string_view bytes);

}  // namespace triage::textfeat
