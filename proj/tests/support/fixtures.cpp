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

#include "fixtures.hpp"

#include <atomic>
#include <filesystem>
#include <random>

#include "triage/evalkit.hpp"

namespace triage::fixture {

namespace fs = std::filesystem;

std::string data_file(const std::string& name) {
  return (fs::path(TRIAGE_DATA_DIR) / name).string();
}

const Models& small_models() {
  static const Models models = [] {
    TrainingOptions options;
    options.crf.iterations = 60;
    return train_models(evalkit::generate_synthetic_corpus(400, 3), options);
  }();
  return models;
}

std::shared_ptr<geoloc::MockProvider> demo_provider() {
  return geoloc::MockProvider::load(data_file("mock_geocoder.json"));
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  root_ = (fs::temp_directory_path() /
           ("triage-test-" + std::to_string(rd()) + "-" + std::to_string(counter++)))
              .string();
  fs::create_directories(root_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(root_, ec);
}

std::string TempDir::path(const std::string& name) const {
  return name.empty() ? root_ : (fs::path(root_) / name).string();
}

}  // namespace triage::fixture
