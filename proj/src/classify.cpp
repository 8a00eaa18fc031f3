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

#include "triage/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "triage/errors.hpp"

namespace triage::classify {

namespace {

double sign_of(HelpLabel y) { return y == HelpLabel::kCallForHelp ? 1.0 : -1.0; }

// Dense weights kept as scale * v so the shrink step is O(1).
struct ScaledWeights {
  std::vector<double> v;
  double scale = 1.0;

  double dot(const textfeat::SparseVector& x) const {
    double sum = 0.0;
    for (const auto& [index, value] : x.entries) sum += v[index] * value;
    return scale * sum;
  }

  void shrink(double factor) {
    if (factor <= 0.0) {
      std::fill(v.begin(), v.end(), 0.0);
      scale = 1.0;
      return;
    }
    scale *= factor;
    if (scale < 1e-9) {
      for (auto& w : v) w *= scale;
      scale = 1.0;
    }
  }

  void add(const textfeat::SparseVector& x, double step) {
    for (const auto& [index, value] : x.entries) v[index] += step * value / scale;
  }

  std::vector<double> materialize() const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
    return out;
  }
};

}  // namespace

double objective(const LinearModel& model,
                 const std::vector<textfeat::SparseVector>& xs,
                 const std::vector<HelpLabel>& ys, double lambda) {
  double sq = model.bias * model.bias;
  for (double w : model.weights) sq += w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hinge += std::max(0.0, 1.0 - sign_of(ys[i]) * predict(model, xs[i]).margin);
  }
  return 0.5 * lambda * sq + (xs.empty() ? 0.0 : hinge / static_cast<double>(xs.size()));
}

LinearModel train_classifier(const std::vector<textfeat::SparseVector>& xs,
                             const std::vector<HelpLabel>& ys,
                             std::size_t feature_size, const TrainConfig& cfg,
                             const EpochCallback& on_epoch) {
  if (xs.size() != ys.size()) throw ValidationError("feature and label counts differ");
  if (xs.size() < 2) throw ValidationError("need at least two training examples");
  const auto positives = std::count(ys.begin(), ys.end(), HelpLabel::kCallForHelp);
  if (positives == 0 || positives == static_cast<long>(ys.size())) {
    throw ValidationError("training data must contain both classes");
  }
  if (!(cfg.lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (cfg.epochs < 1) throw ValidationError("epochs must be at least 1");
  for (const auto& x : xs) {
    for (const auto& [index, value] : x.entries) {
      if (index >= feature_size) throw ValidationError("feature index out of range");
      if (!std::isfinite(value)) throw ValidationError("non-finite feature value");
    }
  }

  ScaledWeights w{std::vector<double>(feature_size, 0.0)};
  double bias = 0.0;
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  LinearModel snapshot;
  std::uint64_t t = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
      const double y = sign_of(ys[i]);
      const double margin = y * (w.dot(xs[i]) + bias);
      w.shrink(1.0 - eta * cfg.lambda);
      bias *= 1.0 - eta * cfg.lambda;
      if (margin < 1.0) {
        w.add(xs[i], eta * y);
        bias += eta * y;
      }
    }
    if (on_epoch) {
      snapshot.weights = w.materialize();
      snapshot.bias = bias;
      on_epoch(epoch, snapshot);
    }
  }

  LinearModel model;
  model.weights = w.materialize();
  model.bias = bias;
  return model;
}

Prediction predict(const LinearModel& model, const textfeat::SparseVector& x) {
  double margin = model.bias;
  for (const auto& [index, value] : x.entries) {
    if (index >= model.weights.size()) {
      throw ValidationError("feature index " + std::to_string(index) +
                            " out of range for model of size " +
                            std::to_string(model.weights.size()));
    }
    margin += model.weights[index] * value;
  }
  return {margin > 0.0 ? HelpLabel::kCallForHelp : HelpLabel::kNotCallForHelp, margin};
}

nlohmann::json LinearModel::to_json() const {
  return nlohmann::json{{"weights", weights},
                        {"bias", bias},
                        {"vectorizer_fingerprint", vectorizer_fingerprint}};
}

LinearModel LinearModel::from_json(const nlohmann::json& j) {
  LinearModel m;
  try {
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.vectorizer_fingerprint = j.at("vectorizer_fingerprint").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed classifier JSON: ") + e.what());
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw ValidationError("non-finite classifier weight");
  }
  if (!std::isfinite(m.bias)) throw ValidationError("non-finite classifier bias");
  return m;
}

}  // namespace triage::classify
