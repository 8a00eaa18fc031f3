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

#include "test_server.hpp"

#include "fixtures.hpp"

namespace triage::fixture {

TestServer::TestServer(const Models& models, ServiceConfig config,
                       std::shared_ptr<geoloc::GeocodingProvider> provider,
                       std::optional<std::string> ui_dir, const std::string& store_path)
    : store_(std::make_shared<Store>(store_path)) {
  if (!provider) provider = demo_provider();
  auto geocoder = std::make_shared<geoloc::Geocoder>(
      provider, std::make_shared<StoreCache>(store_), geoloc::GeocoderConfig{4, 0.0});
  service_ = std::make_unique<TriageService>(models, std::move(config), store_, geocoder);
  http_ = std::make_unique<HttpServer>(*service_, ui_dir);
  port_ = http_->bind("127.0.0.1", 0);
  thread_ = std::thread([this] { http_->serve(); });
  http_->wait_until_ready();
}

TestServer::~TestServer() {
  http_->stop();
  thread_.join();
}

httplib::Client TestServer::client() const {
  httplib::Client c("127.0.0.1", port_);
  c.set_read_timeout(std::chrono::seconds(120));
  return c;
}

}  // namespace triage::fixture
