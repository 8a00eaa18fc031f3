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

#include "triage/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "triage/errors.hpp"
#include "triage/unicode.hpp"

namespace triage::evalkit {

std::vector<std::size_t> FoldAssignment::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k must be at least 2");
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(labels.size()) + " available examples");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldAssignment out{k, std::vector<int>(labels.size(), -1)};
  std::mt19937_64 rng(seed);
  int next = 0;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (auto i : members) {
      out.fold_of[i] = next;
      next = (next + 1) % k;
    }
  }
  return out;
}

FoldAssignment stratified_kfold(const std::vector<HelpLabel>& labels, int k,
                                std::uint64_t seed) {
  std::vector<int> ints;
  ints.reserve(labels.size());
  for (auto l : labels) ints.push_back(static_cast<int>(l));
  return stratified_kfold(ints, k, seed);
}

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.support = tp + fn;
  out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

PRF binary_f1_positive(const std::vector<HelpLabel>& pred,
                       const std::vector<HelpLabel>& gold) {
  if (pred.size() != gold.size()) {
    throw ValidationError("prediction and gold label counts differ");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == HelpLabel::kCallForHelp;
    const bool g = gold[i] == HelpLabel::kCallForHelp;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return prf_from_counts(tp, fp, fn);
}

SpanScores conll_span_f1(const std::vector<std::vector<EntitySpan>>& pred,
                         const std::vector<std::vector<EntitySpan>>& gold) {
  if (pred.size() != gold.size()) {
    throw ValidationError("prediction and gold document counts differ");
  }
  std::map<EntityTag, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (auto tag : kEntityTags) counts[tag] = {0, 0, 0};
  for (std::size_t d = 0; d < pred.size(); ++d) {
    using Key = std::tuple<int, std::size_t, std::size_t>;
    std::multiset<Key> remaining;
    for (const auto& s : gold[d]) remaining.emplace(static_cast<int>(s.tag), s.start, s.end);
    for (const auto& s : pred[d]) {
      auto it = remaining.find(Key{static_cast<int>(s.tag), s.start, s.end});
      if (it != remaining.end()) {
        ++counts[s.tag][0];
        remaining.erase(it);
      } else {
        ++counts[s.tag][1];
      }
    }
    for (const auto& [tag, start, end] : remaining) {
      ++counts[static_cast<EntityTag>(tag)][2];
    }
  }
  SpanScores out;
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [tag, c] : counts) {
    auto prf = prf_from_counts(c[0], c[1], c[2]);
    weighted += prf.f1 * static_cast<double>(prf.support);
    total += prf.support;
    out.per_tag[tag] = prf;
  }
  out.weighted_f1 = total == 0 ? 0.0 : weighted / static_cast<double>(total);
  return out;
}

nlohmann::json prf_to_json(const PRF& prf) {
  return nlohmann::json{{"precision", prf.precision}, {"recall", prf.recall},
                        {"f1", prf.f1},               {"support", prf.support},
                        {"tp", prf.tp},               {"fp", prf.fp},
                        {"fn", prf.fn}};
}

nlohmann::json span_scores_to_json(const SpanScores& scores) {
  nlohmann::json per_tag = nlohmann::json::object();
  for (const auto& [tag, prf] : scores.per_tag) per_tag[std::string(to_string(tag))] = prf_to_json(prf);
  return nlohmann::json{{"per_tag", per_tag}, {"weighted_f1", scores.weighted_f1}};
}

nlohmann::json example_to_json(const LabeledExample& example) {
  return nlohmann::json{{"tweet", example.tweet},
                        {"label", to_string(example.label)},
                        {"spans", example.spans}};
}

LabeledExample example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("labelled example must be an object");
  LabeledExample ex;
  auto tweet = j.find("tweet");
  auto label = j.find("label");
  if (tweet == j.end()) throw ValidationError("labelled example lacks 'tweet'");
  if (label == j.end() || !label->is_string()) {
    throw ValidationError("labelled example lacks 'label'");
  }
  ex.tweet = tweet->get<Tweet>();
  ex.label = parse_help_label(label->get<std::string>());
  if (auto spans = j.find("spans"); spans != j.end()) {
    if (!spans->is_array()) throw ValidationError("spans must be an array");
    for (const auto& s : *spans) ex.spans.push_back(s.get<EntitySpan>());
  }
  if (ex.label == HelpLabel::kNotCallForHelp && !ex.spans.empty()) {
    throw ValidationError("NotCallForHelp example " + ex.tweet.id + " carries spans");
  }
  if (auto problem = check_spans(ex.tweet.text, ex.spans); !problem.empty()) {
    throw ValidationError("example " + ex.tweet.id + ": " + problem);
  }
  for (auto& s : ex.spans) {
    if (s.surface.empty()) s.surface = unicode::substr(ex.tweet.text, s.start, s.end);
  }
  return ex;
}

std::vector<LabeledExample> read_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read labelled data: " + path);
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw ValidationError("no labelled examples in " + path);
  return out;
}

void write_labeled(const std::string& path, const std::vector<LabeledExample>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& ex : data) out << example_to_json(ex).dump() << '\n';
  if (!out) throw IoError("error while writing " + path);
}

namespace {

const std::vector<std::string> kFirstNames = {
    "Ali",    "Ayşe",  "Mehmet", "Fatma",   "Mustafa", "Zeynep", "Emre",
    "Elif",   "Hüseyin", "Hatice", "İbrahim", "Merve", "Ahmet",  "Emine",
    "Yusuf",  "Esra",  "Ömer",   "Şule",    "Hasan",   "Gül",    "Murat",
    "Derya",  "Kemal", "Sibel",  "Osman",   "Cemile",  "Burak",  "Ebru"};
const std::vector<std::string> kLastNames = {
    "Yılmaz", "Demir",  "Kaya",   "Şahin",  "Çelik",  "Aydın",  "Öztürk",
    "Arslan", "Doğan",  "Kılıç",  "Koç",    "Kurt",   "Özdemir", "Aslan",
    "Çetin",  "Polat",  "Erdoğan", "Güneş", "Yıldız", "Tekin",  "Bulut"};
const std::vector<std::string> kNeighbourhoods = {
    "Cumhuriyet", "Gazi",    "Yeni",    "Ekinci",   "Odabaşı", "Armutlu",
    "Hürriyet",   "Kurtuluş", "İstiklal", "Fatih",  "Saray",   "Emek",
    "Barbaros",   "Yavuz",   "Bahçelievler", "Zafer"};
const std::vector<std::string> kStreets = {
    "Atatürk", "İnönü", "Menderes", "Barış", "Çiçek",  "Güllü",
    "Millet",  "Kıbrıs", "Ulus",    "Bağlar", "Gündoğdu", "Mimar Sinan"};
const std::vector<std::string> kSites = {"Akasya", "Lale",  "Papatya", "Rönesans",
                                         "Ebrar",  "Palmiye", "Yıldız", "Nergis"};
const std::vector<std::string> kStatuses = {
    "enkaz altında", "enkaz altındalar", "göçük altında", "kayıp",
    "mahsur kaldı",  "yardım bekliyor",  "sesi geliyor",  "ulaşılamıyor",
    "yaralı",        "bina içinde kaldı"};
const std::vector<std::string> kTails = {"", "", "", " #deprem", " #afad",
                                         " #yardım", " @AFADBaskanlik"};

const std::vector<std::string> kPositiveTemplates = {
    "{PER} {STATUS}, {ADDR} {CITY} lütfen yardım edin",
    "ACİL! {ADDR} {CITY} {PER} {STATUS} #deprem",
    "{CITY} {ADDR} adresinde {PER} {STATUS}. Yardım edin!",
    "Arkadaşım {PER} {STATUS} adres: {ADDR} / {CITY}",
    "{PER} {STATUS} {ADDR} ekip lazım lütfen",
    "{CITY} için acil yardım: {PER} {STATUS}, adres {ADDR}",
    "{PER} {STATUS} lütfen paylaşın #deprem #yardım",
    "Acil çadır ve battaniye lazım, {ADDR} {CITY} {STATUS}",
    "{CITY} {ADDR} {PER} ve ailesi {STATUS} ses verin",
};

const std::vector<std::string> kNegativeTemplates = {
    "Deprem sonrası {CITY} bölgesinde çalışmalar sürüyor",
    "Geçmiş olsun Türkiye, çok üzgünüz",
    "AFAD açıklama yaptı: deprem {MAG} büyüklüğünde",
    "Depremde hayatını kaybedenlere Allah rahmet eylesin",
    "Kandilli: {CITY} merkezli {MAG} büyüklüğünde artçı deprem",
    "Deprem bölgesine giden yollar açık mı? Bilgisi olan var mı",
    "Yardım kampanyalarına katılan herkese teşekkürler",
    "Deprem nedeniyle lig maçları ertelendi",
    "Enkaz kaldırma çalışmaları {CITY} merkezde devam ediyor",
    "Haberler: {NUM} bina yıkıldı, kurtarma ekipleri bölgede",
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
  const std::string& pick(const std::vector<std::string>& v) { return v[below(v.size())]; }
  std::string number(int lo, int hi) {
    return std::to_string(std::uniform_int_distribution<int>(lo, hi)(rng_));
  }

  std::string person() {
    if (chance(0.2)) return pick(kFirstNames);
    return pick(kFirstNames) + " " + pick(kLastNames);
  }

  std::string city() {
    const auto& names = cities_;
    std::u32string name = unicode::decode(names[below(names.size())]);
    if (name.size() > 4 && chance(0.1)) {
      const auto i = 1 + below(name.size() - 3);
      std::swap(name[i], name[i + 1]);
    }
    if (chance(0.1)) {
      for (auto& c : name) c = unicode::to_upper(c);
    } else if (chance(0.1)) {
      name = unicode::fold(name);
    }
    return unicode::encode(name);
  }

  std::string address() {
    switch (below(6)) {
      case 0:
        return pick(kNeighbourhoods) + " Mah. " + pick(kStreets) + " Cad. No:" + number(1, 150);
      case 1:
        return pick(kNeighbourhoods) + " Mahallesi " + number(1, 400) + ". Sokak No:" +
               number(1, 90);
      case 2:
        return pick(kStreets) + " Cad. No:" + number(1, 200) + " Kat:" + number(1, 9);
      case 3:
        return pick(kNeighbourhoods) + " Mah. " + pick(kStreets) + " Sok. No:" +
               number(1, 60) + "/" + number(1, 20);
      case 4:
        return pick(kSites) + " Sitesi " + std::string(1, static_cast<char>('A' + below(6))) +
               " Blok Daire " + number(1, 40);
      default:
        return pick(kStreets) + " Caddesi " + pick(kSites) + " Apt. No:" + number(1, 120);
    }
  }

  std::string magnitude() { return number(4, 7) + "." + number(0, 9); }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> cities_ = {"Adana",   "Adıyaman",      "Diyarbakır", "Elazığ",
                                      "Gaziantep", "Hatay",       "Kahramanmaraş", "Kilis",
                                      "Malatya", "Osmaniye",      "Şanlıurfa"};
};

// Expands {SLOT} placeholders, recording entity spans in scalar offsets.
LabeledExample render(const std::string& pattern, HelpLabel label, Generator& gen) {
  std::u32string text;
  std::vector<EntitySpan> spans;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string::npos) {
      text += unicode::decode(std::string_view(pattern).substr(pos));
      break;
    }
    text += unicode::decode(std::string_view(pattern).substr(pos, open - pos));
    const auto close = pattern.find('}', open);
    const auto slot = pattern.substr(open + 1, close - open - 1);
    pos = close + 1;

    std::string value;
    std::optional<EntityTag> tag;
    if (slot == "PER") {
      value = gen.person();
      tag = EntityTag::kPer;
    } else if (slot == "CITY") {
      value = gen.city();
      tag = EntityTag::kCity;
    } else if (slot == "ADDR") {
      value = gen.address();
      tag = EntityTag::kAddr;
    } else if (slot == "STATUS") {
      value = gen.pick(kStatuses);
      tag = EntityTag::kStatus;
    } else if (slot == "MAG") {
      value = gen.magnitude();
    } else if (slot == "NUM") {
      value = gen.number(10, 900);
    }
    const auto chars = unicode::decode(value);
    if (tag && label == HelpLabel::kCallForHelp) {
      spans.push_back(EntitySpan{*tag, text.size(), text.size() + chars.size(), {}});
    }
    text += chars;
  }
  text += unicode::decode(gen.pick(kTails));
  if (gen.chance(0.1)) text = unicode::fold(text);

  LabeledExample ex;
  ex.label = label;
  ex.tweet.text = unicode::encode(text);
  for (auto& s : spans) {
    s.surface = unicode::encode(std::u32string_view(text).substr(s.start, s.end - s.start));
  }
  ex.spans = std::move(spans);
  return ex;
}

}  // namespace

std::vector<LabeledExample> generate_synthetic_corpus(std::size_t n, std::uint64_t seed) {
  if (n < 20) throw ValidationError("synthetic corpus needs n >= 20");
  const auto positives =
      static_cast<std::size_t>(std::llround(kSyntheticPositiveShare * static_cast<double>(n)));
  const auto negatives = n - positives;
  if (positives < kPositiveTemplates.size() || negatives < kNegativeTemplates.size()) {
    throw ValidationError("n = " + std::to_string(n) + " is too small to cover all templates");
  }

  Generator gen(seed);
  std::vector<LabeledExample> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < positives; ++i) {
    corpus.push_back(render(kPositiveTemplates[i % kPositiveTemplates.size()],
                            HelpLabel::kCallForHelp, gen));
  }
  for (std::size_t i = 0; i < negatives; ++i) {
    corpus.push_back(render(kNegativeTemplates[i % kNegativeTemplates.size()],
                            HelpLabel::kNotCallForHelp, gen));
  }
  std::shuffle(corpus.begin(), corpus.end(), gen.rng());

  // 2023-02-06T04:00:00Z plus up to twelve hours.
  const Timestamp base = parse_timestamp("2023-02-06T04:00:00Z");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char id[48];
    std::snprintf(id, sizeof(id), "syn%llu-%05zu", static_cast<unsigned long long>(seed), i);
    corpus[i].tweet.id = id;
    corpus[i].tweet.created_at =
        base + std::chrono::seconds(static_cast<long>(gen.below(12 * 3600)));
  }
  return corpus;
}

std::vector<std::pair<std::string, std::array<double, 2>>> city_centroids() {
  return {{"Adana", {37.00, 35.32}},        {"Adıyaman", {37.76, 38.28}},
          {"Diyarbakır", {37.91, 40.24}},   {"Elazığ", {38.67, 39.22}},
          {"Gaziantep", {37.07, 37.38}},    {"Hatay", {36.20, 36.16}},
          {"Kahramanmaraş", {37.58, 36.94}}, {"Kilis", {36.72, 37.12}},
          {"Malatya", {38.35, 38.31}},      {"Osmaniye", {37.07, 36.25}},
          {"Şanlıurfa", {37.16, 38.80}}};
}

}  // namespace triage::evalkit
