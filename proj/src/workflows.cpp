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

#include "triage/workflows.hpp"

#include <filesystem>
#include <fstream>

#include "triage/errors.hpp"

namespace triage {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read model file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed model file " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("error while writing " + path.string());
}

std::vector<nertag::TrainingSequence> tagging_data(
    const std::vector<evalkit::LabeledExample>& data,
    const std::vector<std::size_t>& indices) {
  std::vector<nertag::TrainingSequence> out;
  for (auto i : indices) {
    if (data[i].label != HelpLabel::kCallForHelp) continue;
    out.push_back(nertag::make_training_sequence(data[i].tweet.text, data[i].spans));
  }
  return out;
}

Models train_subset(const std::vector<evalkit::LabeledExample>& data,
                    const std::vector<std::size_t>& indices,
                    const TrainingOptions& options, TrainingSummary* summary) {
  std::vector<std::vector<std::string>> docs;
  std::vector<HelpLabel> labels;
  for (auto i : indices) {
    docs.push_back(textfeat::document_terms(data[i].tweet.text));
    labels.push_back(data[i].label);
  }
  Models models;
  models.vectorizer = textfeat::TfIdfVectorizer::fit(docs, options.min_df);
  std::vector<textfeat::SparseVector> xs;
  xs.reserve(docs.size());
  for (const auto& doc : docs) xs.push_back(models.vectorizer.transform(doc));
  models.classifier = classify::train_classifier(
      xs, labels, models.vectorizer.feature_size(), options.classifier);
  models.classifier.vectorizer_fingerprint = models.vectorizer.fingerprint();

  const auto sequences = tagging_data(data, indices);
  models.tagger = nertag::train_crf(sequences, options.crf);

  if (summary) {
    summary->examples = indices.size();
    summary->tagged_examples = sequences.size();
    summary->feature_size = models.vectorizer.feature_size();
    summary->classifier_objective =
        classify::objective(models.classifier, xs, labels, options.classifier.lambda);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      correct += classify::predict(models.classifier, xs[i]).label == labels[i];
    }
    summary->classifier_accuracy =
        static_cast<double>(correct) / static_cast<double>(xs.size());
    summary->crf_features = models.tagger.num_features();
    summary->crf_objective = nertag::corpus_objective(models.tagger, sequences);
    summary->crf_token_accuracy = nertag::token_accuracy(models.tagger, sequences);
  }
  return models;
}

}  // namespace

nlohmann::json TrainingSummary::to_json() const {
  return nlohmann::json{{"examples", examples},
                        {"tagged_examples", tagged_examples},
                        {"feature_size", feature_size},
                        {"classifier_objective", classifier_objective},
                        {"classifier_accuracy", classifier_accuracy},
                        {"crf_features", crf_features},
                        {"crf_objective", crf_objective},
                        {"crf_token_accuracy", crf_token_accuracy}};
}

Models train_models(const std::vector<evalkit::LabeledExample>& data,
                    const TrainingOptions& options, TrainingSummary* summary) {
  if (data.empty()) throw ValidationError("no training data");
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return train_subset(data, all, options, summary);
}

void save_models(const Models& models, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  write_json(root / kVectorizerFile, models.vectorizer.to_json());
  write_json(root / kClassifierFile, models.classifier.to_json());
  write_json(root / kTaggerFile, models.tagger.to_json());
}

Models load_models(const std::string& dir) {
  const std::filesystem::path root(dir);
  Models models;
  models.vectorizer = textfeat::TfIdfVectorizer::from_json(read_json(root / kVectorizerFile));
  models.classifier = classify::LinearModel::from_json(read_json(root / kClassifierFile));
  models.tagger = nertag::CrfModel::from_json(read_json(root / kTaggerFile));
  if (models.classifier.weights.size() != models.vectorizer.feature_size()) {
    throw ValidationError("classifier size does not match the vectorizer");
  }
  if (models.classifier.vectorizer_fingerprint != models.vectorizer.fingerprint()) {
    throw ValidationError("classifier was trained against a different vectorizer");
  }
  return models;
}

nlohmann::json cross_validate(const std::vector<evalkit::LabeledExample>& data,
                              const EvalOptions& options) {
  std::vector<HelpLabel> labels;
  for (const auto& ex : data) labels.push_back(ex.label);
  const auto folds = evalkit::stratified_kfold(labels, options.k, options.seed);

  nlohmann::json cls_folds = nlohmann::json::array();
  nlohmann::json tag_folds = nlohmann::json::array();
  double cls_sum = 0.0, tag_sum = 0.0;
  std::map<EntityTag, double> tag_f1_sum;

  for (int fold = 0; fold < options.k; ++fold) {
    const auto train = folds.train_indices(fold);
    const auto test = folds.test_indices(fold);
    const auto models = train_subset(data, train, options.training, nullptr);

    std::vector<HelpLabel> pred, gold;
    std::vector<std::vector<EntitySpan>> pred_spans, gold_spans;
    for (auto i : test) {
      const auto x = models.vectorizer.transform(textfeat::document_terms(data[i].tweet.text));
      pred.push_back(classify::predict(models.classifier, x).label);
      gold.push_back(data[i].label);
      if (data[i].label == HelpLabel::kCallForHelp) {
        pred_spans.push_back(nertag::tag_tweet(models.tagger, data[i].tweet.text));
        gold_spans.push_back(data[i].spans);
      }
    }
    const auto prf = evalkit::binary_f1_positive(pred, gold);
    auto entry = evalkit::prf_to_json(prf);
    entry["fold"] = fold;
    entry["train_size"] = train.size();
    entry["test_size"] = test.size();
    cls_folds.push_back(entry);
    cls_sum += prf.f1;

    const auto spans = evalkit::conll_span_f1(pred_spans, gold_spans);
    auto tag_entry = evalkit::span_scores_to_json(spans);
    tag_entry["fold"] = fold;
    tag_entry["f1"] = spans.weighted_f1;
    tag_entry["documents"] = gold_spans.size();
    tag_folds.push_back(tag_entry);
    tag_sum += spans.weighted_f1;
    for (const auto& [tag, p] : spans.per_tag) tag_f1_sum[tag] += p.f1;
  }

  const double k = static_cast<double>(options.k);
  nlohmann::json mean_per_tag = nlohmann::json::object();
  for (const auto& [tag, sum] : tag_f1_sum) mean_per_tag[std::string(to_string(tag))] = sum / k;
  return nlohmann::json{
      {"k", options.k},
      {"seed", options.seed},
      {"examples", data.size()},
      {"classification", {{"folds", cls_folds}, {"mean_f1", cls_sum / k}}},
      {"tagging",
       {{"folds", tag_folds}, {"mean_f1", tag_sum / k}, {"mean_per_tag_f1", mean_per_tag}}}};
}

}  // namespace triage
