// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "server.hpp"

#include <chrono>
#include <stdexcept>

#include "httplib.h"

namespace vmouse::app {

namespace {

constexpr auto kKeepalive = std::chrono::milliseconds(1000);

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const json& details = json::array()) {
  send_json(res, status, {{"v", kMessageVersion}, {"error", message}, {"details", details}});
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json();
    throw ServiceError(400, "request body is empty");
  }
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "body is not valid JSON",
                       json::array({{{"field", "body"}, {"error", e.what()}}}));
  }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.what(), e.details());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"v", kMessageVersion}, {"status", "ok"}});
  });
  s.Post("/session/start", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 201, service_.start_session(parse_body(req, false)));
         }));
  s.Post(R"(/session/([^/]+)/trial)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, service_.submit_trial(req.matches[1], parse_body(req, false)));
         }));
  s.Get(R"(/session/([^/]+)/summary)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, service_.session_summary(req.matches[1]));
        }));
  s.Post(R"(/optimizer/([^/]+)/step)", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, 200, service_.optimizer_step(req.matches[1], parse_body(req, true)));
         }));
  s.Get(R"(/optimizer/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, 200, service_.optimizer_state(req.matches[1]));
        }));
  s.Get(R"(/session/([^/]+)/stream)", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          auto sub = service_.subscribe(id);
          res.set_header("Cache-Control", "no-cache");
          res.set_chunked_content_provider(
              "text/event-stream",
              [sub](size_t, httplib::DataSink& sink) {
                if (!sink.is_writable()) return false;
                auto msg = sub->next(kKeepalive);
                if (msg) {
                  const std::string frame = "data: " + *msg + "\n\n";
                  return sink.write(frame.data(), frame.size());
                }
                if (sub->closed()) {
                  sink.done();
                  return true;
                }
                static const std::string ping = ": keepalive\n\n";
                return sink.write(ping.data(), ping.size());
              },
              [this, id, sub](bool) { service_.unsubscribe(id, sub); });
        }));
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "no such route");
  });
}

int HttpServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  service_.close_streams();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace vmouse::app
