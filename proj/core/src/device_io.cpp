// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/device_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "vmouse/error.hpp"

namespace vmouse::io {

namespace {

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  if (text.front() == '+') return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string encode_record(const LogRecord& r) {
  std::string out;
  out.reserve(64);
  out += std::to_string(r.t_us);
  out += r.btn_l ? ",1" : ",0";
  out += r.btn_r ? ",1" : ",0";
  for (std::int64_t v : {r.dxf, r.dyf, r.dxr, r.dyr, r.mx, r.my}) {
    out += ',';
    out += std::to_string(v);
  }
  return out;
}

LogRecord decode_record(std::string_view line, std::size_t line_no) {
  std::array<std::string_view, 9> fields;
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    const auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (n < fields.size()) fields[n] = field;
    ++n;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (n != fields.size()) {
    throw ParseError(line_no, "expected 9 fields, found " + std::to_string(n));
  }
  static constexpr const char* kNames[] = {"t_us", "btnL", "btnR", "dxf", "dyf",
                                           "dxr",  "dyr",  "mx",   "my"};
  LogRecord r;
  if (!parse_int(fields[0], r.t_us) || fields[0].front() == '-') {
    throw ParseError(line_no, "field t_us is not an unsigned integer");
  }
  for (int b = 1; b <= 2; ++b) {
    if (fields[b] != "0" && fields[b] != "1") {
      throw ParseError(line_no, std::string("field ") + kNames[b] + " must be 0 or 1");
    }
  }
  r.btn_l = fields[1] == "1";
  r.btn_r = fields[2] == "1";
  std::int64_t* ints[] = {&r.dxf, &r.dyf, &r.dxr, &r.dyr, &r.mx, &r.my};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!parse_int(fields[i + 3], *ints[i])) {
      throw ParseError(line_no, std::string("field ") + kNames[i + 3] + " is not an integer");
    }
  }
  return r;
}

fusion::DualSample to_dual(const LogRecord& r) {
  fusion::DualSample s;
  s.t_us = r.t_us;
  s.btn_left = r.btn_l;
  s.btn_right = r.btn_r;
  s.front = {static_cast<double>(r.dxf), static_cast<double>(r.dyf)};
  s.rear = {static_cast<double>(r.dxr), static_cast<double>(r.dyr)};
  return s;
}

LogRecord make_record(const fusion::DualSample& s, const fusion::CursorDelta& d) {
  LogRecord r;
  r.t_us = s.t_us;
  r.btn_l = s.btn_left;
  r.btn_r = s.btn_right;
  r.dxf = static_cast<std::int64_t>(s.front.dx);
  r.dyf = static_cast<std::int64_t>(s.front.dy);
  r.dxr = static_cast<std::int64_t>(s.rear.dx);
  r.dyr = static_cast<std::int64_t>(s.rear.dy);
  r.mx = d.mx;
  r.my = d.my;
  return r;
}

std::string encode_command(const DeviceCommand& c) {
  switch (c.kind) {
    case CommandKind::set_p:
      return "SET_P " + std::to_string(c.value);
    case CommandKind::set_cpi:
      return "SET_CPI " + std::to_string(c.value);
    case CommandKind::start:
      return "START";
    case CommandKind::stop:
      return "STOP";
  }
  return {};
}

DeviceCommand parse_command(std::string_view line) {
  line = trim_cr(line);
  const auto space = line.find(' ');
  const auto verb = line.substr(0, space);
  const auto arg = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
  if (verb == "START" || verb == "STOP") {
    if (space != std::string_view::npos) throw ValidationError(std::string(verb) + " takes no argument");
    return {verb == "START" ? CommandKind::start : CommandKind::stop, 0};
  }
  if (verb == "SET_P" || verb == "SET_CPI") {
    int v = 0;
    if (arg.empty() || !parse_int(arg, v)) {
      throw ValidationError(std::string(verb) + " needs an integer argument");
    }
    if (verb == "SET_P") {
      if (v < 0 || v > 100) throw ValidationError("SET_P out of range 0..100");
      return {CommandKind::set_p, v};
    }
    if (v < 1 || v > kMaxCpi) throw ValidationError("SET_CPI out of range 1..12000");
    return {CommandKind::set_cpi, v};
  }
  throw ValidationError("unknown command '" + std::string(verb) + "'");
}

fusion::VirtualConfig apply_command(const fusion::VirtualConfig& cfg, const DeviceCommand& c) {
  switch (c.kind) {
    case CommandKind::set_p:
      return fusion::VirtualConfig::make(c.value, cfg.user_cpi());
    case CommandKind::set_cpi:
      return fusion::VirtualConfig::make(cfg.p_percent(), c.value);
    default:
      return cfg;
  }
}

LineKind classify_line(std::string_view line) {
  line = trim_cr(line);
  if (line.empty()) return LineKind::blank;
  if (line.front() == '#') return LineKind::comment;
  if (line.rfind("OK ", 0) == 0) return LineKind::ok;
  if (line == "ERR" || line.rfind("ERR ", 0) == 0) return LineKind::err;
  return LineKind::record;
}

IngestResult ingest_log(std::istream& in, const IngestOptions& options) {
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  IngestResult result;
  auto cfg = fusion::VirtualConfig::make(kDefaultP, kDefaultCpi);
  fusion::Pipeline pipeline(cfg);
  LogSession* current = nullptr;

  auto open_session = [&](std::size_t line_no) {
    result.sessions.push_back({});
    current = &result.sessions.back();
    current->start_config = cfg;
    current->first_line = line_no;
    pipeline = fusion::Pipeline(cfg);
  };

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      result.warnings.push_back({line_no, "final line has no newline; dropped"});
      break;
    }
    const std::string_view line = trim_cr(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
    switch (classify_line(line)) {
      case LineKind::blank:
      case LineKind::comment:
        break;
      case LineKind::err:
        result.device_errors.emplace_back(line.size() > 4 ? line.substr(4) : std::string_view{});
        break;
      case LineKind::ok: {
        DeviceCommand cmd;
        try {
          cmd = parse_command(line.substr(3));
        } catch (const ValidationError& e) {
          throw ParseError(line_no, std::string("bad acknowledgement: ") + e.what());
        }
        cfg = apply_command(cfg, cmd);
        pipeline.set_config(cfg);
        if (cmd.kind == CommandKind::start) open_session(line_no);
        if (cmd.kind == CommandKind::stop) current = nullptr;
        break;
      }
      case LineKind::record: {
        const LogRecord rec = decode_record(line, line_no);
        if (!current) {
          result.warnings.push_back({line_no, "record outside START/STOP; opening an implicit session"});
          open_session(line_no);
        }
        const auto expect = pipeline.process(to_dual(rec));
        current->records.push_back(rec);
        current->recomputed.push_back(expect);
        if (expect.mx != rec.mx || expect.my != rec.my) ++current->mismatches;
        break;
      }
    }
  }

  for (const auto& s : result.sessions) {
    result.n_records += s.records.size();
    result.mismatches += s.mismatches;
    if (options.task) {
      auto groups = sessionize(s, *options.task, options.center);
      for (auto& g : groups) result.tapping_sessions.push_back(std::move(g));
    }
  }
  return result;
}

IngestResult ingest_log(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log " + path.string());
  return ingest_log(in, options);
}

std::vector<std::vector<pointing::Trial>> sessionize(const LogSession& session,
                                                     const pointing::TaskConfig& task,
                                                     pointing::Vec2 center) {
  const auto pairs = pointing::trial_targets(task, center);
  const std::size_t per_group = pairs.size() + 1;

  // Cumulative cursor and the index of every left-button press.
  std::vector<pointing::Vec2> cursor;
  std::vector<std::size_t> clicks;
  cursor.reserve(session.records.size());
  pointing::Vec2 pos;
  bool prev_down = false;
  for (std::size_t i = 0; i < session.records.size(); ++i) {
    const auto& r = session.records[i];
    pos += {static_cast<double>(r.mx), static_cast<double>(r.my)};
    cursor.push_back(pos);
    if (r.btn_l && !prev_down) clicks.push_back(i);
    prev_down = r.btn_l;
  }

  std::vector<std::vector<pointing::Trial>> out;
  for (std::size_t g = 0; g * per_group < clicks.size(); ++g) {
    const std::size_t first = clicks[g * per_group];
    const pointing::Vec2 offset = pairs.front().first - cursor[first];
    std::vector<pointing::Trial> trials;
    for (std::size_t k = 1; k < per_group && g * per_group + k < clicks.size(); ++k) {
      const std::size_t a = clicks[g * per_group + k - 1];
      const std::size_t b = clicks[g * per_group + k];
      const double t0 = static_cast<double>(session.records[a].t_us) * 1e-6;
      pointing::Trial t;
      t.prev_target = pairs[k - 1].first;
      t.target = pairs[k - 1].second;
      for (std::size_t i = a; i <= b; ++i) {
        t.path.push_back({static_cast<double>(session.records[i].t_us) * 1e-6 - t0, cursor[i] + offset});
      }
      t.click = cursor[b] + offset;
      t.mt_s = t.path.back().t_s;
      t.success = (t.click - t.target).norm() <= task.W / 2.0;
      trials.push_back(std::move(t));
    }
    if (!trials.empty()) out.push_back(std::move(trials));
  }
  return out;
}

}  // namespace vmouse::io
