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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace triage::oracle {

using nertag::CrfModel;
using nertag::FeatureVector;
using nertag::kL;

CrfModel random_crf(std::mt19937_64& rng, std::size_t num_features, double scale, double l2) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < num_features; ++f) names.push_back("f" + std::to_string(f));
  CrfModel model(names, l2);
  std::normal_distribution<double> w(0.0, scale);
  for (auto& v : model.state_weights()) v = w(rng);
  for (auto& v : model.transition_weights()) v = w(rng);
  return model;
}

std::vector<FeatureVector> random_features(std::mt19937_64& rng, const CrfModel& model,
                                           std::size_t T) {
  std::uniform_int_distribution<std::size_t> pick(0, model.num_features() - 1);
  std::uniform_int_distribution<int> count(1, 3);
  std::bernoulli_distribution unknown(0.2);
  std::vector<FeatureVector> x(T);
  for (auto& row : x) {
    std::set<std::size_t> chosen;
    const int want = std::min<int>(count(rng), static_cast<int>(model.num_features()));
    while (static_cast<int>(chosen.size()) < want) chosen.insert(pick(rng));
    for (auto f : chosen) row.push_back(model.features()[f]);
    if (unknown(rng)) row.push_back("never-seen");
  }
  return x;
}

std::vector<BioLabel> random_labels(std::mt19937_64& rng, std::size_t T) {
  std::uniform_int_distribution<int> label(0, kNumBioLabels - 1);
  std::vector<BioLabel> y(T);
  for (auto& l : y) l = static_cast<BioLabel>(label(rng));
  return y;
}

double path_score(const CrfModel& model, const std::vector<FeatureVector>& x,
                  const std::vector<BioLabel>& y) {
  double s = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto label = static_cast<std::size_t>(y[t]);
    for (const auto& name : x[t]) {
      for (std::size_t f = 0; f < model.num_features(); ++f) {
        if (model.features()[f] == name) s += model.state(f, label);
      }
    }
    if (t > 0) s += model.transition(static_cast<std::size_t>(y[t - 1]), label);
  }
  return s;
}

Enumeration enumerate_paths(const CrfModel& model, const std::vector<FeatureVector>& x) {
  const std::size_t T = x.size();
  std::size_t count = 1;
  for (std::size_t t = 0; t < T; ++t) count *= kL;
  std::vector<double> scores;
  std::vector<std::vector<BioLabel>> paths;
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<BioLabel> y(T);
    std::size_t rest = code;
    for (std::size_t t = T; t-- > 0;) {
      y[t] = static_cast<BioLabel>(rest % kL);
      rest /= kL;
    }
    scores.push_back(path_score(model, x, y));
    paths.push_back(std::move(y));
  }

  Enumeration e;
  e.paths = scores.size();
  const double m = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += std::exp(s - m);
  e.log_z = m + std::log(total);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  e.best_score = scores[best];
  e.best_path = paths[best];
  e.node.assign(T, {});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::exp(scores[i] - e.log_z);
    for (std::size_t t = 0; t < T; ++t) e.node[t][static_cast<std::size_t>(paths[i][t])] += p;
  }
  return e;
}

std::vector<double> flatten(const CrfModel& model) {
  std::vector<double> out = model.state_weights();
  out.insert(out.end(), model.transition_weights().begin(), model.transition_weights().end());
  return out;
}

void unflatten(CrfModel& model, const std::vector<double>& params) {
  const auto n = model.state_weights().size();
  std::copy(params.begin(), params.begin() + static_cast<long>(n), model.state_weights().begin());
  std::copy(params.begin() + static_cast<long>(n), params.end(),
            model.transition_weights().begin());
}

std::vector<double> flatten(const nertag::Gradient& grad) {
  std::vector<double> out = grad.state;
  out.insert(out.end(), grad.transition.begin(), grad.transition.end());
  return out;
}

std::vector<double> numeric_gradient(const CrfModel& model, const std::vector<FeatureVector>& x,
                                     const std::vector<BioLabel>& y, double h) {
  CrfModel probe = model;
  auto params = flatten(model);
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    unflatten(probe, params);
    const double up = nertag::nll_and_gradient(probe, x, y).nll;
    params[i] = keep - h;
    unflatten(probe, params);
    const double down = nertag::nll_and_gradient(probe, x, y).nll;
    params[i] = keep;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

namespace {

struct EditSearch {
  const std::string& a;
  const std::string& b;
  const std::string& alphabet;
  std::size_t best = std::numeric_limits<std::size_t>::max();

  // i: next unread source char; out: target prefix produced so far.
  void step(std::size_t i, std::string& out, std::size_t cost) {
    if (cost >= best) return;
    if (out.size() > b.size() || b.compare(0, out.size(), out) != 0) return;
    const std::size_t src_left = a.size() - i;
    const std::size_t tgt_left = b.size() - out.size();
    const std::size_t gap = src_left > tgt_left ? src_left - tgt_left : tgt_left - src_left;
    if (cost + gap >= best) return;
    if (src_left == 0 && tgt_left == 0) {
      best = cost;
      return;
    }
    if (i < a.size()) {
      out.push_back(a[i]);
      step(i + 1, out, cost);
      out.pop_back();
      for (char c : alphabet) {
        if (c == a[i]) continue;
        out.push_back(c);
        step(i + 1, out, cost + 1);
        out.pop_back();
      }
      step(i + 1, out, cost + 1);
    }
    if (i + 1 < a.size() && a[i] != a[i + 1]) {
      out.push_back(a[i + 1]);
      out.push_back(a[i]);
      step(i + 2, out, cost + 1);
      out.pop_back();
      out.pop_back();
    }
    for (char c : alphabet) {
      out.push_back(c);
      step(i, out, cost + 1);
      out.pop_back();
    }
  }
};

}  // namespace

std::size_t edit_search(const std::string& a, const std::string& b,
                        const std::string& alphabet) {
  EditSearch search{a, b, alphabet};
  search.best = a.size() + b.size() + 1;
  std::string out;
  search.step(0, out, 0);
  return search.best;
}

std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char c : alphabet) out.push_back(out[i] + c);
    }
    begin = end;
  }
  return out;
}

}  // namespace triage::oracle
