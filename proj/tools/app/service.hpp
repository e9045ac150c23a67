// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmouse/calibration.hpp"
#include "vmouse/fusion.hpp"
#include "vmouse/pointing.hpp"

namespace vmouse::app {

using json = nlohmann::json;

inline constexpr int kMessageVersion = 1;

/// Request failure carrying the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what, json details = json::array())
      : std::runtime_error(what), status_(status), details_(std::move(details)) {}
  int status() const noexcept { return status_; }
  const json& details() const noexcept { return details_; }

 private:
  int status_;
  json details_;
};

/// One subscriber of a session's push channel.
class Subscription {
 public:
  void push(std::string message);
  /// Waits up to `timeout` for a message; nullopt on timeout or once closed
  /// and drained.
  std::optional<std::string> next(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

struct SessionState {
  std::string id;
  pointing::TaskConfig task;
  fusion::VirtualConfig cfg;
  std::string source;  // "cursor-only" or "dual-sensor"
  std::vector<pointing::Trial> trials;
  std::vector<std::string> trial_sources;
};

/// Session and optimizer registry behind the HTTP routes. With a data
/// directory every accepted mutation is appended to disk before it is
/// acknowledged, and a new instance on the same directory rebuilds the
/// same state.
class Service {
 public:
  explicit Service(std::optional<std::filesystem::path> data_dir = std::nullopt);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  json start_session(const json& body);
  json submit_trial(const std::string& session_id, const json& body);
  json session_summary(const std::string& session_id) const;
  json optimizer_step(const std::string& optimizer_id, const json& body);
  json optimizer_state(const std::string& optimizer_id) const;

  std::shared_ptr<Subscription> subscribe(const std::string& session_id);
  void unsubscribe(const std::string& session_id, const std::shared_ptr<Subscription>& sub);
  /// Closes every subscription, e.g. before the server stops.
  void close_streams();

  /// Copy of a session, for tests and offline comparison.
  SessionState session(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  /// Snapshot of an optimizer; throws ServiceError(404) when unknown.
  opt::InTaskOptimizer optimizer(const std::string& optimizer_id) const;
  const std::vector<std::string>& load_warnings() const { return load_warnings_; }

 private:
  struct Session {
    mutable std::mutex mu;
    SessionState state;
    std::vector<std::shared_ptr<Subscription>> subscribers;
  };
  struct Optimizer {
    mutable std::mutex mu;
    opt::InTaskOptimizer opt;
  };

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Optimizer> find_optimizer(const std::string& id) const;
  void load();
  void append_session_line(const std::string& id, const json& line) const;
  void publish(Session& s, const json& message);
  static json summary_json(const SessionState& s);

  std::optional<std::filesystem::path> data_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<Optimizer>> optimizers_;
  std::uint64_t next_session_ = 1;
  std::vector<std::string> load_warnings_;
};

/// Wire form of a session summary (also used by `analyze --json`).
json to_json(const pointing::SessionSummary& s);
/// Parses a trial event body into an analysis trial. `index` selects the
/// task target when the body names none.
pointing::Trial trial_from_json(const json& body, const SessionState& session, std::size_t index,
                                std::string& source_out);

}  // namespace vmouse::app
