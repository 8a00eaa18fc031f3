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

// Training and cross-validation over labelled examples, shared by the CLI
// and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "triage/classify.hpp"
#include "triage/evalkit.hpp"
#include "triage/nertag.hpp"
#include "triage/textfeat.hpp"

namespace triage {

struct Models {
  textfeat::TfIdfVectorizer vectorizer;
  classify::LinearModel classifier;
  nertag::CrfModel tagger;
};

struct TrainingOptions {
  classify::TrainConfig classifier;
  nertag::CrfTrainConfig crf;
  std::size_t min_df = 1;
};

struct TrainingSummary {
  std::size_t examples = 0;
  std::size_t tagged_examples = 0;
  std::size_t feature_size = 0;
  double classifier_objective = 0.0;
  double classifier_accuracy = 0.0;
  std::size_t crf_features = 0;
  double crf_objective = 0.0;
  double crf_token_accuracy = 0.0;

  nlohmann::json to_json() const;
};

// The tagger learns from CallForHelp examples only.
Models train_models(const std::vector<evalkit::LabeledExample>& data,
                    const TrainingOptions& options, TrainingSummary* summary = nullptr);

inline const char* kVectorizerFile = "vectorizer.json";
inline const char* kClassifierFile = "classifier.json";
inline const char* kTaggerFile = "crf.json";

void save_models(const Models& models, const std::string& dir);
// Throws IoError naming the missing or unreadable file.
Models load_models(const std::string& dir);

struct EvalOptions {
  int k = 5;
  std::uint64_t seed = 7;
  TrainingOptions training;
};

// Stratified k-fold over the help label; the tagger is scored on the
// CallForHelp examples of each test fold.
nlohmann::json cross_validate(const std::vector<evalkit::LabeledExample>& data,
                              const EvalOptions& options);

}  // namespace triage
