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

#include "triage/http_server.hpp"

#include <map>

#include "httplib.h"
#include "triage/errors.hpp"

namespace triage {

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void reply(httplib::Response& res, const ApiResponse& api) {
  res.status = api.status;
  res.set_content(api.body.dump(), kJson);
}

std::map<std::string, std::string> query_params(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : req.params) out.insert_or_assign(key, value);
  return out;
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(TriageService& svc) : service(svc) {}
  TriageService& service;
  httplib::Server server;
};

HttpServer::HttpServer(TriageService& service, std::optional<std::string> ui_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  // Oversized bodies are rejected by httplib itself with 413; allow headroom
  // for max_batch tweets of moderate size.
  srv.set_payload_max_length(std::max<std::size_t>(svc.config().max_batch, 1) * 16 * 1024);

  srv.Post("/api/v1/tweets", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.ingest(req.body));
  });
  srv.Get("/api/v1/results", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.results(query_params(req)));
  });
  srv.Get("/api/v1/filters", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.filters());
  });
  srv.Get(R"(/api/v1/tweets/([^/]+))",
          [&svc](const httplib::Request& req, httplib::Response& res) {
            reply(res, svc.tweet(req.matches[1]));
          });
  srv.Post("/api/v1/annotations", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.save_annotation(req.body));
  });
  srv.Get("/api/v1/stats", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.stats());
  });
  srv.Get("/config.json", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.client_config());
  });

  if (ui_dir && !srv.set_mount_point("/", *ui_dir)) {
    throw IoError("UI directory does not exist: " + *ui_dir);
  }

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string message = res.status == 404 ? "no route for " + req.method + " " + req.path
                          : res.status == 413 ? "request body too large"
                                              : "request failed";
    reply(res, error_response(res.status, message));
  });
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        reply(res, error_response(500, message));
      });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::serve() {
  if (!impl_->server.listen_after_bind()) throw IoError("server stopped unexpectedly");
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace triage
