// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmouse/fusion.hpp"
#include "vmouse/pointing.hpp"

namespace vmouse::io {

inline constexpr int kDefaultP = 50;
inline constexpr int kDefaultCpi = 800;
inline constexpr int kMaxCpi = 12000;
inline constexpr std::uint64_t kSamplePeriodUs = 2000;

/// One sample line: t_us,btnL,btnR,dxf,dyf,dxr,dyr,mx,my
struct LogRecord {
  std::uint64_t t_us = 0;
  bool btn_l = false;
  bool btn_r = false;
  std::int64_t dxf = 0;
  std::int64_t dyf = 0;
  std::int64_t dxr = 0;
  std::int64_t dyr = 0;
  std::int64_t mx = 0;
  std::int64_t my = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// Formats without the trailing newline.
std::string encode_record(const LogRecord& r);
/// Strict inverse of encode_record. Throws ParseError naming `line_no`.
LogRecord decode_record(std::string_view line, std::size_t line_no = 1);

fusion::DualSample to_dual(const LogRecord& r);
LogRecord make_record(const fusion::DualSample& s, const fusion::CursorDelta& d);

enum class CommandKind { set_p, set_cpi, start, stop };

struct DeviceCommand {
  CommandKind kind = CommandKind::start;
  int value = 0;  // percent for SET_P, counts/inch for SET_CPI

  friend bool operator==(const DeviceCommand&, const DeviceCommand&) = default;
};

std::string encode_command(const DeviceCommand& c);
/// Throws ValidationError whose message is the reason reported after ERR.
DeviceCommand parse_command(std::string_view line);
/// Applies a SET_P or SET_CPI to `cfg`; START and STOP leave it unchanged.
fusion::VirtualConfig apply_command(const fusion::VirtualConfig& cfg, const DeviceCommand& c);

enum class LineKind { record, ok, err, comment, blank };
/// Classifies a stream line by its first character or keyword.
LineKind classify_line(std::string_view line);

/// Blocking FIFO with a fixed capacity: push waits while full, pop waits
/// while empty. After close(), push is refused and pop drains what is left.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

struct IngestWarning {
  std::size_t line = 0;
  std::string message;
};

/// Records between one START and the following STOP (or end of log).
struct LogSession {
  fusion::VirtualConfig start_config;
  std::vector<LogRecord> records;
  std::vector<fusion::CursorDelta> recomputed;  // mx/my from the raw fields
  std::size_t mismatches = 0;
  std::size_t first_line = 0;
};

struct IngestOptions {
  /// When set, clicks are grouped into tapping sessions of this task.
  std::optional<pointing::TaskConfig> task;
  pointing::Vec2 center = pointing::kDefaultScreenCenter;
};

struct IngestResult {
  std::vector<LogSession> sessions;
  std::size_t n_records = 0;
  std::size_t mismatches = 0;
  std::vector<IngestWarning> warnings;
  std::vector<std::string> device_errors;  // ERR lines, verbatim reason
  /// Tapping sessions (15 trials each, fewer for an incomplete tail), only
  /// with IngestOptions::task.
  std::vector<std::vector<pointing::Trial>> tapping_sessions;
};

/// Parses a device stream. Records are checked against a fresh fusion of
/// their raw fields under the (p, k) in force, with the carry reset at each
/// START. A final line without a newline is dropped with a warning; any
/// other malformed line throws ParseError.
IngestResult ingest_log(std::istream& in, const IngestOptions& options = {});
IngestResult ingest_log(const std::filesystem::path& path, const IngestOptions& options = {});

/// Splits one session's records into tapping trials: the first left click
/// of every group of n_targets + 1 clicks is the start click on target 0,
/// where the cursor is anchored.
std::vector<std::vector<pointing::Trial>> sessionize(const LogSession& session,
                                                     const pointing::TaskConfig& task,
                                                     pointing::Vec2 center);

}  // namespace vmouse::io
