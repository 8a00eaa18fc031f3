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

// Linear-chain CRF over the nine BIO labels with per-token state features
// and label-bigram transitions.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"

namespace triage::nertag {

using FeatureVector = std::vector<std::string>;

// bias, stem, shape of i-1/i/i+1 (BOS/EOS at the edges), lower-cased word,
// and istitle/islower/isupper flags of token i.
FeatureVector extract_features(const std::vector<Token>& tokens, std::size_t i);
std::vector<FeatureVector> extract_sequence(const std::vector<Token>& tokens);

constexpr std::size_t kL = kNumBioLabels;
using TransitionMatrix = std::array<double, kL * kL>;  // [from * kL + to]

class CrfModel {
 public:
  CrfModel() = default;
  // Zero weights over the given feature list.
  CrfModel(std::vector<std::string> features, double l2);

  std::size_t num_features() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }
  std::optional<std::uint32_t> find(std::string_view feature) const;

  double& state(std::size_t feature, std::size_t label) {
    return state_weights_[feature * kL + label];
  }
  double state(std::size_t feature, std::size_t label) const {
    return state_weights_[feature * kL + label];
  }
  double& transition(std::size_t from, std::size_t to) {
    return transition_weights_[from * kL + to];
  }
  double transition(std::size_t from, std::size_t to) const {
    return transition_weights_[from * kL + to];
  }

  std::vector<double>& state_weights() { return state_weights_; }
  const std::vector<double>& state_weights() const { return state_weights_; }
  TransitionMatrix& transition_weights() { return transition_weights_; }
  const TransitionMatrix& transition_weights() const { return transition_weights_; }

  double l2() const { return l2_; }
  void set_l2(double l2) { l2_ = l2; }
  double squared_norm() const;

  nlohmann::json to_json() const;
  static CrfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> features_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> state_weights_;  // [feature * kL + label]
  TransitionMatrix transition_weights_{};
  double l2_ = 0.0;
};

// Known-feature ids per position; unknown features are dropped.
using EncodedSequence = std::vector<std::vector<std::uint32_t>>;
EncodedSequence encode(const CrfModel& model,
                       const std::vector<FeatureVector>& features);

// Unnormalised log-score of a label sequence.
double sequence_score(const CrfModel& model, const EncodedSequence& seq,
                      const std::vector<BioLabel>& labels);
double sequence_score(const CrfModel& model,
                      const std::vector<FeatureVector>& features,
                      const std::vector<BioLabel>& labels);

struct Marginals {
  double log_z = 0.0;           // from the forward pass
  double log_z_backward = 0.0;  // same quantity from the backward pass
  std::vector<std::array<double, kL>> node;  // T rows
  std::vector<TransitionMatrix> edge;        // T-1 entries, [from * kL + to]
};

Marginals forward_backward(const CrfModel& model, const EncodedSequence& seq);
Marginals forward_backward(const CrfModel& model,
                           const std::vector<FeatureVector>& features);

struct Gradient {
  std::vector<double> state;  // same layout as CrfModel::state_weights()
  TransitionMatrix transition{};
};

struct NllResult {
  double nll = 0.0;
  Gradient grad;
};

// logZ - score(gold) + l2/2 ||w||^2 and its gradient.
NllResult nll_and_gradient(const CrfModel& model,
                           const std::vector<FeatureVector>& features,
                           const std::vector<BioLabel>& gold);

struct Decoded {
  std::vector<BioLabel> labels;
  double score = 0.0;
};

// Max-score path; ties go to the lowest label index.
Decoded viterbi_decode(const CrfModel& model, const EncodedSequence& seq);
Decoded viterbi_decode(const CrfModel& model,
                       const std::vector<FeatureVector>& features);

struct TrainingSequence {
  std::vector<FeatureVector> features;
  std::vector<BioLabel> gold;
};

struct CrfTrainConfig {
  int iterations = 1000;
  double l2 = 0.1;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

// Called after each pass with the 1-based iteration number.
using IterationCallback = std::function<void(int, const CrfModel&)>;

// Per-sequence SGD on sum_i nll_i + l2/2 ||w||^2 with step
// learning_rate / sqrt(t), t counting sequence updates.
CrfModel train_crf(const std::vector<TrainingSequence>& data,
                   const CrfTrainConfig& cfg,
                   const IterationCallback& on_iteration = {});

// sum_i (logZ_i - score_i) + l2/2 ||w||^2.
double corpus_objective(const CrfModel& model,
                        const std::vector<TrainingSequence>& data);
double token_accuracy(const CrfModel& model,
                      const std::vector<TrainingSequence>& data);

TrainingSequence make_training_sequence(std::string_view text,
                                        const std::vector<EntitySpan>& spans);

std::vector<EntitySpan> tag_tweet(const CrfModel& model, std::string_view text);

}  // namespace triage::nertag
