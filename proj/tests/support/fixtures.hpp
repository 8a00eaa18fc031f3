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

#include <memory>
#include <string>

#include "triage/geoloc.hpp"
#include "triage/workflows.hpp"

namespace triage::fixture {

// Path of a file under the repository's data/ directory.
std::string data_file(const std::string& name);

// Models trained once per process on a 400-example synthetic corpus.
const Models& small_models();

// The shipped demo geocoder table.
std::shared_ptr<geoloc::MockProvider> demo_provider();

// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string path(const std::string& name = "") const;

 private:
  std::string root_;
};

}  // namespace triage::fixture
