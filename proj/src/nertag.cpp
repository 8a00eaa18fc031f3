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

#include "triage/nertag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "triage/errors.hpp"
#include "triage/textfeat.hpp"
#include "triage/unicode.hpp"

namespace triage::nertag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Row = std::array<double, kL>;

struct Potentials {
  std::vector<Row> state;
  TransitionMatrix trans{};
};

template <typename It>
double log_sum_exp(It first, It last) {
  double m = kNegInf;
  for (auto it = first; it != last; ++it) m = std::max(m, *it);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += std::exp(*it - m);
  return m + std::log(sum);
}

// Python str semantics over cased characters.
struct CaseFlags {
  bool title = false;
  bool lower = false;
  bool upper = false;
};

CaseFlags case_flags(std::string_view word) {
  const auto chars = unicode::decode(word);
  bool has_upper = false, has_lower = false;
  bool title = false, title_ok = true, prev_cased = false;
  for (char32_t c : chars) {
    const bool up = unicode::is_upper(c);
    const bool lo = unicode::is_lower(c);
    has_upper |= up;
    has_lower |= lo;
    if (up) {
      if (prev_cased) title_ok = false;
      title = true;
      prev_cased = true;
    } else if (lo) {
      if (!prev_cased) title_ok = false;
      prev_cased = true;
    } else {
      prev_cased = false;
    }
  }
  return {title && title_ok, has_lower && !has_upper, has_upper && !has_lower};
}

Potentials potentials(const CrfModel& model, const EncodedSequence& seq,
                      double scale = 1.0) {
  Potentials p;
  p.state.assign(seq.size(), Row{});
  const auto& w = model.state_weights();
  for (std::size_t t = 0; t < seq.size(); ++t) {
    auto& row = p.state[t];
    for (auto f : seq[t]) {
      const double* ws = &w[static_cast<std::size_t>(f) * kL];
      for (std::size_t y = 0; y < kL; ++y) row[y] += ws[y];
    }
    if (scale != 1.0) {
      for (auto& v : row) v *= scale;
    }
  }
  p.trans = model.transition_weights();
  if (scale != 1.0) {
    for (auto& v : p.trans) v *= scale;
  }
  return p;
}

Marginals run_forward_backward(const Potentials& p) {
  const std::size_t n = p.state.size();
  Marginals out;
  if (n == 0) return out;
  std::vector<Row> alpha(n), beta(n);
  std::array<double, kL> scratch{};

  alpha[0] = p.state[0];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < kL; ++j) {
      for (std::size_t i = 0; i < kL; ++i) scratch[i] = alpha[t - 1][i] + p.trans[i * kL + j];
      alpha[t][j] = p.state[t][j] + log_sum_exp(scratch.begin(), scratch.end());
    }
  }
  beta[n - 1].fill(0.0);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < kL; ++i) {
      for (std::size_t j = 0; j < kL; ++j) {
        scratch[j] = p.trans[i * kL + j] + p.state[t + 1][j] + beta[t + 1][j];
      }
      beta[t][i] = log_sum_exp(scratch.begin(), scratch.end());
    }
  }

  out.log_z = log_sum_exp(alpha[n - 1].begin(), alpha[n - 1].end());
  for (std::size_t y = 0; y < kL; ++y) scratch[y] = p.state[0][y] + beta[0][y];
  out.log_z_backward = log_sum_exp(scratch.begin(), scratch.end());

  out.node.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t y = 0; y < kL; ++y) {
      out.node[t][y] = std::exp(alpha[t][y] + beta[t][y] - out.log_z);
    }
  }
  out.edge.resize(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t i = 0; i < kL; ++i) {
      for (std::size_t j = 0; j < kL; ++j) {
        out.edge[t][i * kL + j] =
            std::exp(alpha[t][i] + p.trans[i * kL + j] + p.state[t + 1][j] +
                     beta[t + 1][j] - out.log_z);
      }
    }
  }
  return out;
}

double path_score(const Potentials& p, const std::vector<BioLabel>& labels) {
  double score = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const auto y = static_cast<std::size_t>(labels[t]);
    score += p.state[t][y];
    if (t > 0) score += p.trans[static_cast<std::size_t>(labels[t - 1]) * kL + y];
  }
  return score;
}

Decoded run_viterbi(const Potentials& p) {
  const std::size_t n = p.state.size();
  Decoded out;
  if (n == 0) return out;
  std::vector<Row> delta(n);
  std::vector<std::array<std::uint8_t, kL>> back(n);
  delta[0] = p.state[0];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < kL; ++j) {
      double best = kNegInf;
      std::uint8_t arg = 0;
      for (std::size_t i = 0; i < kL; ++i) {
        const double v = delta[t - 1][i] + p.trans[i * kL + j];
        if (v > best) {
          best = v;
          arg = static_cast<std::uint8_t>(i);
        }
      }
      delta[t][j] = best + p.state[t][j];
      back[t][j] = arg;
    }
  }
  std::size_t last = 0;
  for (std::size_t y = 1; y < kL; ++y) {
    if (delta[n - 1][y] > delta[n - 1][last]) last = y;
  }
  out.labels.resize(n);
  out.labels[n - 1] = static_cast<BioLabel>(last);
  for (std::size_t t = n - 1; t > 0; --t) {
    last = back[t][last];
    out.labels[t - 1] = static_cast<BioLabel>(last);
  }
  out.score = path_score(p, out.labels);
  return out;
}

void check_gold(const EncodedSequence& seq, const std::vector<BioLabel>& gold) {
  if (gold.size() != seq.size()) {
    throw ValidationError("gold label count " + std::to_string(gold.size()) +
                          " does not match sequence length " +
                          std::to_string(seq.size()));
  }
}

}  // namespace

FeatureVector extract_features(const std::vector<Token>& tokens, std::size_t i) {
  if (i >= tokens.size()) throw ValidationError("feature position out of range");
  using textfeat::shape_class;
  using textfeat::to_string;
  const auto& word = tokens[i].surface;
  const auto flags = case_flags(word);
  FeatureVector f;
  f.reserve(9);
  f.emplace_back("bias");
  f.push_back("stem=" + textfeat::stem(word));
  f.push_back("shape=" + std::string(to_string(shape_class(word))));
  f.push_back("prev.shape=" +
              (i == 0 ? std::string("BOS")
                      : std::string(to_string(shape_class(tokens[i - 1].surface)))));
  f.push_back("next.shape=" +
              (i + 1 == tokens.size()
                   ? std::string("EOS")
                   : std::string(to_string(shape_class(tokens[i + 1].surface)))));
  f.push_back("word=" + unicode::fold(word));
  f.push_back(std::string("istitle=") + (flags.title ? "1" : "0"));
  f.push_back(std::string("islower=") + (flags.lower ? "1" : "0"));
  f.push_back(std::string("isupper=") + (flags.upper ? "1" : "0"));
  return f;
}

std::vector<FeatureVector> extract_sequence(const std::vector<Token>& tokens) {
  std::vector<FeatureVector> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back(extract_features(tokens, i));
  return out;
}

CrfModel::CrfModel(std::vector<std::string> features, double l2)
    : features_(std::move(features)),
      state_weights_(features_.size() * kL, 0.0),
      l2_(l2) {
  index_.reserve(features_.size());
  for (std::uint32_t i = 0; i < features_.size(); ++i) {
    if (!index_.emplace(features_[i], i).second) {
      throw ValidationError("duplicate CRF feature: " + features_[i]);
    }
  }
}

std::optional<std::uint32_t> CrfModel::find(std::string_view feature) const {
  auto it = index_.find(std::string(feature));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double CrfModel::squared_norm() const {
  double sum = 0.0;
  for (double w : state_weights_) sum += w * w;
  for (double w : transition_weights_) sum += w * w;
  return sum;
}

nlohmann::json CrfModel::to_json() const {
  nlohmann::json state = nlohmann::json::array();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    state.push_back(std::vector<double>(state_weights_.begin() + f * kL,
                                        state_weights_.begin() + (f + 1) * kL));
  }
  nlohmann::json trans = nlohmann::json::array();
  for (std::size_t i = 0; i < kL; ++i) {
    trans.push_back(std::vector<double>(transition_weights_.begin() + i * kL,
                                        transition_weights_.begin() + (i + 1) * kL));
  }
  return nlohmann::json{{"features", features_},
                        {"state_weights", state},
                        {"transition_weights", trans},
                        {"l2", l2_}};
}

CrfModel CrfModel::from_json(const nlohmann::json& j) {
  try {
    CrfModel model(j.at("features").get<std::vector<std::string>>(),
                   j.at("l2").get<double>());
    const auto& state = j.at("state_weights");
    if (!state.is_array() || state.size() != model.num_features()) {
      throw ValidationError("state_weights must have one row per feature");
    }
    for (std::size_t f = 0; f < state.size(); ++f) {
      auto row = state[f].get<std::vector<double>>();
      if (row.size() != kL) throw ValidationError("state_weights rows must have 9 entries");
      std::copy(row.begin(), row.end(), model.state_weights_.begin() + f * kL);
    }
    const auto& trans = j.at("transition_weights");
    if (!trans.is_array() || trans.size() != kL) {
      throw ValidationError("transition_weights must be 9 x 9");
    }
    for (std::size_t i = 0; i < kL; ++i) {
      auto row = trans[i].get<std::vector<double>>();
      if (row.size() != kL) throw ValidationError("transition_weights must be 9 x 9");
      std::copy(row.begin(), row.end(), model.transition_weights_.begin() + i * kL);
    }
    for (double w : model.state_weights_) {
      if (!std::isfinite(w)) throw ValidationError("non-finite CRF weight");
    }
    for (double w : model.transition_weights_) {
      if (!std::isfinite(w)) throw ValidationError("non-finite CRF weight");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed CRF JSON: ") + e.what());
  }
}

EncodedSequence encode(const CrfModel& model,
                       const std::vector<FeatureVector>& features) {
  EncodedSequence seq(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    for (const auto& f : features[t]) {
      if (auto id = model.find(f)) seq[t].push_back(*id);
    }
  }
  return seq;
}

double sequence_score(const CrfModel& model, const EncodedSequence& seq,
                      const std::vector<BioLabel>& labels) {
  check_gold(seq, labels);
  return path_score(potentials(model, seq), labels);
}

double sequence_score(const CrfModel& model,
                      const std::vector<FeatureVector>& features,
                      const std::vector<BioLabel>& labels) {
  return sequence_score(model, encode(model, features), labels);
}

Marginals forward_backward(const CrfModel& model, const EncodedSequence& seq) {
  if (seq.empty()) throw ValidationError("forward_backward needs a non-empty sequence");
  return run_forward_backward(potentials(model, seq));
}

Marginals forward_backward(const CrfModel& model,
                           const std::vector<FeatureVector>& features) {
  return forward_backward(model, encode(model, features));
}

NllResult nll_and_gradient(const CrfModel& model,
                           const std::vector<FeatureVector>& features,
                           const std::vector<BioLabel>& gold) {
  const auto seq = encode(model, features);
  check_gold(seq, gold);
  if (seq.empty()) throw ValidationError("nll_and_gradient needs a non-empty sequence");
  const auto p = potentials(model, seq);
  const auto m = run_forward_backward(p);

  NllResult out;
  out.nll = m.log_z - path_score(p, gold) + 0.5 * model.l2() * model.squared_norm();
  out.grad.state.assign(model.state_weights().size(), 0.0);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto g = static_cast<std::size_t>(gold[t]);
    for (auto f : seq[t]) {
      double* row = &out.grad.state[static_cast<std::size_t>(f) * kL];
      for (std::size_t y = 0; y < kL; ++y) row[y] += m.node[t][y];
      row[g] -= 1.0;
    }
    if (t > 0) {
      for (std::size_t k = 0; k < kL * kL; ++k) out.grad.transition[k] += m.edge[t - 1][k];
      out.grad.transition[static_cast<std::size_t>(gold[t - 1]) * kL + g] -= 1.0;
    }
  }
  const auto& w = model.state_weights();
  for (std::size_t k = 0; k < w.size(); ++k) out.grad.state[k] += model.l2() * w[k];
  for (std::size_t k = 0; k < kL * kL; ++k) {
    out.grad.transition[k] += model.l2() * model.transition_weights()[k];
  }
  return out;
}

Decoded viterbi_decode(const CrfModel& model, const EncodedSequence& seq) {
  return run_viterbi(potentials(model, seq));
}

Decoded viterbi_decode(const CrfModel& model,
                       const std::vector<FeatureVector>& features) {
  return viterbi_decode(model, encode(model, features));
}

CrfModel train_crf(const std::vector<TrainingSequence>& data,
                   const CrfTrainConfig& cfg,
                   const IterationCallback& on_iteration) {
  if (data.empty()) throw ValidationError("CRF training data is empty");
  if (cfg.iterations < 1) throw ValidationError("iterations must be at least 1");
  if (!(cfg.l2 >= 0.0)) throw ValidationError("l2 must be non-negative");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");

  // Feature ids in first-seen order over the training data.
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<EncodedSequence> encoded;
  std::vector<const std::vector<BioLabel>*> golds;
  for (const auto& example : data) {
    if (example.features.size() != example.gold.size()) {
      throw ValidationError("training sequence has mismatched gold length");
    }
    if (example.features.empty()) continue;
    EncodedSequence seq(example.features.size());
    for (std::size_t t = 0; t < example.features.size(); ++t) {
      for (const auto& f : example.features[t]) {
        auto [it, inserted] = ids.emplace(f, static_cast<std::uint32_t>(names.size()));
        if (inserted) names.push_back(f);
        seq[t].push_back(it->second);
      }
    }
    encoded.push_back(std::move(seq));
    golds.push_back(&example.gold);
  }
  if (encoded.empty()) throw ValidationError("CRF training data has no tokens");

  CrfModel model(std::move(names), cfg.l2);
  // True weights are scale * stored weights.
  double scale = 1.0;
  auto& w = model.state_weights();
  auto& trans = model.transition_weights();
  auto rescale = [&] {
    for (auto& v : w) v *= scale;
    for (auto& v : trans) v *= scale;
    scale = 1.0;
  };

  const double n = static_cast<double>(encoded.size());
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::uint64_t step = 0;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto idx : order) {
      ++step;
      const double eta = cfg.learning_rate / std::sqrt(static_cast<double>(step));
      const auto& seq = encoded[idx];
      const auto& gold = *golds[idx];
      const auto p = potentials(model, seq, scale);
      const auto m = run_forward_backward(p);

      const double decay = 1.0 - eta * cfg.l2 / n;
      if (decay <= 0.0) {
        std::fill(w.begin(), w.end(), 0.0);
        trans.fill(0.0);
        scale = 1.0;
      } else {
        scale *= decay;
      }
      const double lr = eta / scale;
      for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto g = static_cast<std::size_t>(gold[t]);
        for (auto f : seq[t]) {
          double* row = &w[static_cast<std::size_t>(f) * kL];
          for (std::size_t y = 0; y < kL; ++y) row[y] -= lr * m.node[t][y];
          row[g] += lr;
        }
        if (t > 0) {
          for (std::size_t k = 0; k < kL * kL; ++k) trans[k] -= lr * m.edge[t - 1][k];
          trans[static_cast<std::size_t>(gold[t - 1]) * kL + g] += lr;
        }
      }
      if (scale < 1e-6) rescale();
    }
    if (on_iteration) {
      rescale();
      on_iteration(iter, model);
    }
  }
  rescale();
  return model;
}

double corpus_objective(const CrfModel& model,
                        const std::vector<TrainingSequence>& data) {
  double total = 0.0;
  for (const auto& example : data) {
    if (example.features.empty()) continue;
    const auto seq = encode(model, example.features);
    const auto p = potentials(model, seq);
    total += run_forward_backward(p).log_z - path_score(p, example.gold);
  }
  return total + 0.5 * model.l2() * model.squared_norm();
}

double token_accuracy(const CrfModel& model,
                      const std::vector<TrainingSequence>& data) {
  std::size_t correct = 0, total = 0;
  for (const auto& example : data) {
    if (example.features.empty()) continue;
    const auto decoded = viterbi_decode(model, example.features);
    for (std::size_t t = 0; t < decoded.labels.size(); ++t) {
      correct += decoded.labels[t] == example.gold[t];
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainingSequence make_training_sequence(std::string_view text,
                                        const std::vector<EntitySpan>& spans) {
  const auto tokens = textfeat::tokenize(text);
  return TrainingSequence{extract_sequence(tokens), spans_to_bio(tokens, spans)};
}

std::vector<EntitySpan> tag_tweet(const CrfModel& model, std::string_view text) {
  const auto tokens = textfeat::tokenize(text);
  if (tokens.empty()) return {};
  const auto decoded = viterbi_decode(model, extract_sequence(tokens));
  return bio_to_spans(text, tokens, decoded.labels);
}

}  // namespace triage::nertag
