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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"

namespace triage::evalkit {

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

// Classes are visited in ascending order; inside a class examples are
// shuffled by `seed` and dealt round-robin, the dealing position carrying
// over from one class to the next so that fold totals also stay balanced.
FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed);
FoldAssignment stratified_kfold(const std::vector<HelpLabel>& labels, int k,
                                std::uint64_t seed);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold positives
  std::size_t tp = 0, fp = 0, fn = 0;
};

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Positive class is CallForHelp.
PRF binary_f1_positive(const std::vector<HelpLabel>& pred,
                       const std::vector<HelpLabel>& gold);

struct SpanScores {
  std::map<EntityTag, PRF> per_tag;  // all four tags present
  double weighted_f1 = 0.0;          // weighted by gold support
};

// Exact match on tag, start and end.
SpanScores conll_span_f1(const std::vector<std::vector<EntitySpan>>& pred,
                         const std::vector<std::vector<EntitySpan>>& gold);

nlohmann::json prf_to_json(const PRF& prf);
nlohmann::json span_scores_to_json(const SpanScores& scores);

struct LabeledExample {
  Tweet tweet;
  HelpLabel label = HelpLabel::kNotCallForHelp;
  std::vector<EntitySpan> spans;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

// {"tweet": {...}, "label": "CallForHelp", "spans": [...]}
nlohmann::json example_to_json(const LabeledExample& example);
LabeledExample example_from_json(const nlohmann::json& j);

// Throws IoError / ValidationError; malformed lines are errors here because
// labelled data feeds training.
std::vector<LabeledExample> read_labeled(const std::string& path);
void write_labeled(const std::string& path, const std::vector<LabeledExample>& data);

inline constexpr double kSyntheticPositiveShare = 0.42;

// Template-built Turkish help calls and news/chatter. round(0.42 n) are
// positives; every template is used at least once.
std::vector<LabeledExample> generate_synthetic_corpus(std::size_t n, std::uint64_t seed);

// Approximate centroids of the affected provinces, in affected_cities() order.
std::vector<std::pair<std::string, std::array<double, 2>>> city_centroids();

}  // namespace triage::evalkit
