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

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"
#include "triage/pipeline.hpp"
#include "triage/store.hpp"

namespace triage {

struct ServiceConfig {
  PipelineConfig pipeline;
  std::size_t max_batch = 5000;
  int workers = 4;
  std::string tile_url = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";
  int poll_interval_ms = 5000;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse error_response(int status, std::string message);

// Request handlers behind /api/v1, independent of the HTTP transport.
class TriageService {
 public:
  TriageService(Models models, ServiceConfig config, std::shared_ptr<Store> store,
                std::shared_ptr<geoloc::Geocoder> geocoder);

  // POST /api/v1/tweets
  ApiResponse ingest(std::string_view body);
  // GET /api/v1/results
  ApiResponse results(const std::map<std::string, std::string>& params);
  // GET /api/v1/filters
  ApiResponse filters();
  // GET /api/v1/tweets/{id}
  ApiResponse tweet(const std::string& id);
  // POST /api/v1/annotations
  ApiResponse save_annotation(std::string_view body);
  // GET /api/v1/stats
  ApiResponse stats();
  // GET /config.json
  ApiResponse client_config() const;

  // Invoked with the summary of every processed batch.
  void on_batch(std::function<void(const nlohmann::json&)> hook) { batch_hook_ = std::move(hook); }

  const ServiceConfig& config() const { return config_; }

 private:
  Models models_;
  ServiceConfig config_;
  std::shared_ptr<Store> store_;
  std::shared_ptr<geoloc::Geocoder> geocoder_;
  std::function<void(const nlohmann::json&)> batch_hook_;
};

}  // namespace triage
