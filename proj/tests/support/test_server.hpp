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
#include <optional>
#include <string>
#include <thread>

#include "httplib.h"
#include "triage/http_server.hpp"
#include "triage/service.hpp"

namespace triage::fixture {

// A TriageService behind a real HTTP listener on an ephemeral port.
class TestServer {
 public:
  explicit TestServer(const Models& models, ServiceConfig config = {},
                      std::shared_ptr<geoloc::GeocodingProvider> provider = nullptr,
                      std::optional<std::string> ui_dir = std::nullopt,
                      const std::string& store_path = ":memory:");
  ~TestServer();

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  httplib::Client client() const;
  Store& store() { return *store_; }

 private:
  std::shared_ptr<Store> store_;
  std::unique_ptr<TriageService> service_;
  std::unique_ptr<HttpServer> http_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace triage::fixture
