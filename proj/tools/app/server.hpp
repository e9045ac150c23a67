// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <thread>

#include "service.hpp"

namespace httplib {
class Server;
}

namespace vmouse::app {

/// HTTP front end of a Service. Routes:
///   POST /session/start            GET  /session/{id}/summary
///   POST /session/{id}/trial       GET  /session/{id}/stream  (SSE)
///   POST /optimizer/{id}/step      GET  /optimizer/{id}/state
///   GET  /health
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws std::runtime_error when binding fails.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace vmouse::app
