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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "triage/domain.hpp"
#include "triage/textfeat.hpp"

namespace triage::classify {

struct TrainConfig {
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::string vectorizer_fingerprint;

  nlohmann::json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);
};

struct Prediction {
  HelpLabel label = HelpLabel::kNotCallForHelp;
  double margin = 0.0;
};

// lambda/2 * (||w||^2 + b^2) + mean hinge loss; labels map CallForHelp -> +1.
double objective(const LinearModel& model,
                 const std::vector<textfeat::SparseVector>& xs,
                 const std::vector<HelpLabel>& ys, double lambda);

// Called after every epoch with the 1-based epoch number and the model so far.
using EpochCallback = std::function<void(int, const LinearModel&)>;

// Pegasos stochastic subgradient descent with step 1/(lambda * t). The bias
// acts as the weight of a constant feature and is shrunk with w.
LinearModel train_classifier(const std::vector<textfeat::SparseVector>& xs,
                             const std::vector<HelpLabel>& ys,
                             std::size_t feature_size, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {});

// margin = w.x + b; CallForHelp iff margin > 0.
Prediction predict(const LinearModel& model, const textfeat::SparseVector& x);

}  // namespace triage::classify
