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

#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "triage/errors.hpp"
#include "triage/evalkit.hpp"
#include "triage/geoloc.hpp"
#include "triage/http_server.hpp"
#include "triage/ingest.hpp"
#include "triage/service.hpp"
#include "triage/store.hpp"
#include "triage/workflows.hpp"

namespace triage::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value && *value ? std::string(value) : fallback;
}

struct Paths {
  std::string data_dir = ".";

  std::string resolve(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(data_dir) / p).lexically_normal().string();
  }
};

void print_config(std::ostream& err, const std::string& command, const json& config) {
  err << json{{"command", command}, {"config", config}}.dump() << std::endl;
}

struct HyperFlags {
  double lambda = 1e-4;
  int epochs = 50;
  int iterations = 1000;
  double l2 = 0.1;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t min_df = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "classifier L2 coefficient")->capture_default_str();
    cmd->add_option("--epochs", epochs, "classifier epochs")->capture_default_str();
    cmd->add_option("--iterations", iterations, "CRF training iterations")->capture_default_str();
    cmd->add_option("--l2", l2, "CRF L2 coefficient")->capture_default_str();
    cmd->add_option("--learning-rate", learning_rate, "CRF base step size")
        ->capture_default_str();
    cmd->add_option("--train-seed", seed, "seed for training order")->capture_default_str();
    cmd->add_option("--min-df", min_df, "minimum document frequency")->capture_default_str();
  }

  TrainingOptions options() const {
    if (epochs < 1) throw ValidationError("--epochs must be at least 1");
    if (iterations < 1) throw ValidationError("--iterations must be at least 1");
    if (!(lambda > 0.0)) throw ValidationError("--lambda must be positive");
    if (!(l2 >= 0.0)) throw ValidationError("--l2 must be non-negative");
    if (!(learning_rate > 0.0)) throw ValidationError("--learning-rate must be positive");
    if (min_df < 1) throw ValidationError("--min-df must be at least 1");
    TrainingOptions o;
    o.classifier.lambda = lambda;
    o.classifier.epochs = epochs;
    o.classifier.seed = seed;
    o.crf.iterations = iterations;
    o.crf.l2 = l2;
    o.crf.learning_rate = learning_rate;
    o.crf.seed = seed;
    o.min_df = min_df;
    return o;
  }

  json to_json() const {
    return {{"lambda", lambda}, {"epochs", epochs},       {"iterations", iterations},
            {"l2", l2},         {"learning_rate", learning_rate}, {"train_seed", seed},
            {"min_df", min_df}};
  }
};

// ---- train ----

struct TrainArgs {
  std::string data = "corpus.jsonl";
  std::string models = "models";
  HyperFlags hyper;
};

int cmd_train(const Paths& paths, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto data_path = paths.resolve(a.data);
  const auto model_dir = paths.resolve(a.models);
  auto options = a.hyper.options();
  auto config = a.hyper.to_json();
  config["data"] = data_path;
  config["models"] = model_dir;
  print_config(err, "train", config);

  auto data = evalkit::read_labeled(data_path);
  TrainingSummary summary;
  auto models = train_models(data, options, &summary);
  save_models(models, model_dir);

  auto report = summary.to_json();
  report["vectorizer_fingerprint"] = models.vectorizer.fingerprint();
  report["artifacts"] = {(fs::path(model_dir) / kVectorizerFile).string(),
                         (fs::path(model_dir) / kClassifierFile).string(),
                         (fs::path(model_dir) / kTaggerFile).string()};
  out << report.dump(2) << std::endl;
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string data = "corpus.jsonl";
  int k = 5;
  std::uint64_t seed = 7;
  std::string output;
  HyperFlags hyper;
};

int cmd_eval(const Paths& paths, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto data_path = paths.resolve(a.data);
  EvalOptions options;
  options.k = a.k;
  options.seed = a.seed;
  options.training = a.hyper.options();
  auto config = a.hyper.to_json();
  config["data"] = data_path;
  config["k"] = a.k;
  config["seed"] = a.seed;
  config["output"] = a.output.empty() ? json() : json(paths.resolve(a.output));
  print_config(err, "eval", config);

  auto data = evalkit::read_labeled(data_path);
  const auto started = std::chrono::steady_clock::now();
  auto report = cross_validate(data, options);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  err << "evaluation finished in " << elapsed.count() << " s" << std::endl;

  const auto text = report.dump(2);
  if (!a.output.empty()) {
    const auto path = paths.resolve(a.output);
    std::ofstream file(path);
    if (!(file << text << '\n')) throw IoError("cannot write " + path);
  }
  out << text << std::endl;
  return kExitOk;
}

// ---- gen-corpus ----

struct GenArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 7;
  std::string output = "corpus.jsonl";
  bool tweets_only = false;
};

int cmd_gen_corpus(const Paths& paths, const GenArgs& a, std::ostream& out, std::ostream& err) {
  const auto path = paths.resolve(a.output);
  print_config(err, "gen-corpus",
               {{"n", a.n}, {"seed", a.seed}, {"output", path}, {"tweets_only", a.tweets_only}});
  auto corpus = evalkit::generate_synthetic_corpus(a.n, a.seed);
  if (a.tweets_only) {
    std::ofstream file(path);
    if (!file) throw IoError("cannot write " + path);
    for (const auto& ex : corpus) file << json(ex.tweet).dump() << '\n';
    if (!file) throw IoError("error while writing " + path);
  } else {
    evalkit::write_labeled(path, corpus);
  }
  const auto positives = std::count_if(corpus.begin(), corpus.end(), [](const auto& ex) {
    return ex.label == HelpLabel::kCallForHelp;
  });
  out << json{{"output", path}, {"examples", corpus.size()}, {"positives", positives}}.dump()
      << std::endl;
  return kExitOk;
}

// ---- serve ----

struct ServeArgs {
  std::string models = "models";
  std::string host = "0.0.0.0";
  int port = std::atoi(env_or("SERVER_PORT", "8080").c_str());
  std::string store = env_or("STORE_PATH", "triage.db");
  std::string bbox = env_or("BBOX", "");
  std::string cities;
  std::string mock_geocoder;
  std::string geocoder_url = env_or("GEOCODER_URL", "");
  double geocoder_rps = std::atof(env_or("GEOCODER_RPS", "10").c_str());
  int geocoder_in_flight = 4;
  std::string ui;
  std::size_t max_batch = 5000;
  int workers = 4;
};

int cmd_serve(const Paths& paths, const ServeArgs& a, std::ostream& err) {
  if (a.port < 1 || a.port > 65535) throw ValidationError("port must be in 1..65535");
  if (a.max_batch < 1) throw ValidationError("--max-batch must be at least 1");
  if (a.workers < 1) throw ValidationError("--workers must be at least 1");
  if (a.geocoder_in_flight < 1) throw ValidationError("--geocoder-in-flight must be at least 1");
  if (a.mock_geocoder.empty() == a.geocoder_url.empty()) {
    throw ValidationError("configure exactly one of --mock-geocoder or --geocoder-url");
  }

  ServiceConfig config;
  if (!a.bbox.empty()) config.pipeline.bbox = geoloc::parse_box(a.bbox);
  if (!a.cities.empty()) config.pipeline.cities = geoloc::CityList::load(paths.resolve(a.cities));
  config.max_batch = a.max_batch;
  config.workers = a.workers;

  const auto model_dir = paths.resolve(a.models);
  const auto store_path = paths.resolve(a.store);
  const auto& box = config.pipeline.bbox;
  print_config(err, "serve",
               {{"models", model_dir},
                {"host", a.host},
                {"port", a.port},
                {"store", store_path},
                {"bbox", {box.min_lat, box.max_lat, box.min_lon, box.max_lon}},
                {"cities", config.pipeline.cities.names()},
                {"mock_geocoder", a.mock_geocoder.empty() ? json() : json(paths.resolve(a.mock_geocoder))},
                {"geocoder_url", a.geocoder_url.empty() ? json() : json(a.geocoder_url)},
                {"geocoder_rps", a.geocoder_rps},
                {"geocoder_in_flight", a.geocoder_in_flight},
                {"ui", a.ui.empty() ? json() : json(paths.resolve(a.ui))},
                {"max_batch", a.max_batch},
                {"workers", a.workers}});

  auto models = load_models(model_dir);
  std::shared_ptr<geoloc::GeocodingProvider> provider;
  if (!a.mock_geocoder.empty()) {
    provider = geoloc::MockProvider::load(paths.resolve(a.mock_geocoder));
  } else {
    geoloc::HttpProviderConfig http;
    http.url_template = a.geocoder_url;
    http.api_key = env_or("GEOCODER_KEY", "");
    provider = std::make_shared<geoloc::HttpProvider>(http);
  }
  auto store = std::make_shared<Store>(store_path);
  auto geocoder = std::make_shared<geoloc::Geocoder>(
      provider, std::make_shared<StoreCache>(store),
      geoloc::GeocoderConfig{a.geocoder_in_flight, a.geocoder_rps});
  TriageService service(std::move(models), config, store, geocoder);
  service.on_batch([&err](const json& summary) {
    err << json{{"batch", summary}}.dump() << std::endl;
  });

  std::optional<std::string> ui;
  if (!a.ui.empty()) ui = paths.resolve(a.ui);
  HttpServer server(service, ui);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind(a.host, a.port);
  err << "listening on " << a.host << ":" << port << std::endl;

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  try {
    server.serve();
  } catch (...) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    throw;
  }
  watcher.join();
  err << "shutting down; final stats " << store->stats().to_json().dump() << std::endl;
  return kExitOk;
}

// ---- simulate ----

struct SimulateArgs {
  std::string server = "http://localhost:8080";
  std::string file = "demo_tweets.jsonl";
  double rate = 100.0;
  std::size_t batch_size = 100;
  std::string keywords;
  int timeout_seconds = 300;
};

json fetch_json(httplib::Client& client, const std::string& path) {
  auto res = client.Get(path);
  if (!res) throw IoError("GET " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw IoError("GET " + path + " returned " + std::to_string(res->status) + ": " + res->body);
  }
  return json::parse(res->body);
}

int cmd_simulate(const Paths& paths, const SimulateArgs& a, std::ostream& out,
                 std::ostream& err) {
  if (!(a.rate > 0.0)) throw ValidationError("--rate must be positive");
  if (a.batch_size < 1) throw ValidationError("--batch-size must be at least 1");
  const auto file = paths.resolve(a.file);
  const auto keyword_path = a.keywords.empty() ? std::string() : paths.resolve(a.keywords);
  print_config(err, "simulate",
               {{"server", a.server},
                {"file", file},
                {"rate", a.rate},
                {"batch_size", a.batch_size},
                {"keywords", keyword_path.empty() ? json() : json(keyword_path)}});

  auto batch = ingest::read_tweets(file);
  if (!keyword_path.empty()) {
    auto set = ingest::KeywordSet::load(ingest::KeywordSetName::kGeneral, keyword_path);
    batch.tweets = ingest::keyword_filter(batch.tweets, set);
    if (batch.tweets.empty()) throw ValidationError("no tweet matches the keyword set");
  }

  httplib::Client client(a.server);
  client.set_connection_timeout(std::chrono::seconds(5));
  client.set_read_timeout(std::chrono::seconds(a.timeout_seconds));
  client.set_write_timeout(std::chrono::seconds(a.timeout_seconds));

  json totals{{"posted", 0}, {"accepted", 0}, {"duplicates", 0}, {"rejected", 0}, {"failed", 0}};
  std::size_t batches = 0;
  json pending = json::array();
  auto flush = [&] {
    if (pending.empty()) return;
    auto res = client.Post("/api/v1/tweets", pending.dump(), "application/json");
    if (!res) throw IoError("POST to " + a.server + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw IoError("server rejected batch with " + std::to_string(res->status) + ": " +
                    res->body);
    }
    auto summary = json::parse(res->body);
    totals["posted"] = totals["posted"].get<std::size_t>() + pending.size();
    for (const char* key : {"accepted", "duplicates", "rejected", "failed"}) {
      totals[key] = totals[key].get<std::size_t>() + summary.value(key, std::size_t{0});
    }
    ++batches;
    pending = json::array();
  };

  auto summary = ingest::replay(batch, a.rate, [&](const Tweet& tweet) {
    pending.push_back(tweet);
    if (pending.size() >= a.batch_size) flush();
  });
  flush();

  totals["batches"] = batches;
  totals["skipped_lines"] = batch.skipped_count;
  totals["seconds"] = summary.duration.count();
  totals["stats"] = fetch_json(client, "/api/v1/stats");
  out << totals.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Earthquake call-for-help tweet triage"};
  app.require_subcommand(1);
  Paths paths;
  app.add_option("--data-dir", paths.data_dir, "root for relative paths")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train vectorizer, classifier and tagger");
  train_cmd->add_option("--data", train.data, "labelled JSONL")->capture_default_str();
  train_cmd->add_option("--models", train.models, "artifact directory")->capture_default_str();
  train.hyper.attach(train_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "stratified k-fold evaluation of both models");
  eval_cmd->add_option("--data", eval.data, "labelled JSONL")->capture_default_str();
  eval_cmd->add_option("-k,--folds", eval.k, "number of folds")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "fold assignment seed")->capture_default_str();
  eval_cmd->add_option("--output", eval.output, "also write the report here");
  eval.hyper.attach(eval_cmd);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "write the synthetic labelled corpus");
  gen_cmd->add_option("-n,--size", gen.n, "number of tweets")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--output", gen.output, "output JSONL")->capture_default_str();
  gen_cmd->add_flag("--tweets-only", gen.tweets_only, "write bare tweet objects");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "run the REST service");
  serve_cmd->add_option("--models", serve.models, "artifact directory")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "port (env SERVER_PORT)")->capture_default_str();
  serve_cmd->add_option("--store", serve.store, "SQLite file (env STORE_PATH)")
      ->capture_default_str();
  serve_cmd->add_option("--bbox", serve.bbox, "min_lat,max_lat,min_lon,max_lon (env BBOX)");
  serve_cmd->add_option("--cities", serve.cities, "city list, one per line");
  serve_cmd->add_option("--mock-geocoder", serve.mock_geocoder, "mock geocoder table JSON");
  serve_cmd->add_option("--geocoder-url", serve.geocoder_url,
                        "URL template with {address} and {key} (env GEOCODER_URL)");
  serve_cmd->add_option("--geocoder-rps", serve.geocoder_rps, "requests per second (env GEOCODER_RPS)")
      ->capture_default_str();
  serve_cmd->add_option("--geocoder-in-flight", serve.geocoder_in_flight,
                        "concurrent geocoder requests")
      ->capture_default_str();
  serve_cmd->add_option("--ui", serve.ui, "static UI bundle mounted at /");
  serve_cmd->add_option("--max-batch", serve.max_batch, "largest accepted batch")
      ->capture_default_str();
  serve_cmd->add_option("--workers", serve.workers, "pipeline threads per batch")
      ->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "replay a tweet file against a server");
  sim_cmd->add_option("--server", sim.server, "server base URL")->capture_default_str();
  sim_cmd->add_option("--file", sim.file, "tweet JSONL")->capture_default_str();
  sim_cmd->add_option("--rate", sim.rate, "tweets per second")->capture_default_str();
  sim_cmd->add_option("--batch-size", sim.batch_size, "tweets per POST")->capture_default_str();
  sim_cmd->add_option("--keywords", sim.keywords, "only replay tweets matching this keyword file");
  sim_cmd->add_option("--timeout", sim.timeout_seconds, "per-request timeout in seconds")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(paths, train, out, err);
    if (*eval_cmd) return cmd_eval(paths, eval, out, err);
    if (*gen_cmd) return cmd_gen_corpus(paths, gen, out, err);
    if (*serve_cmd) return cmd_serve(paths, serve, err);
    if (*sim_cmd) return cmd_simulate(paths, sim, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << std::endl;
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace triage::cli
