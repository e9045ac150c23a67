// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/emulator.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "vmouse/error.hpp"

namespace vmouse::io {

namespace {

double parse_seconds(std::string_view arg, std::size_t line_no, std::string_view verb) {
  double v = 0.0;
  const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
  if (arg.empty() || res.ec != std::errc{} || res.ptr != arg.data() + arg.size() ||
      !std::isfinite(v) || v < 0.0) {
    throw ParseError(line_no, std::string(verb) + " needs a non-negative duration in seconds");
  }
  return v;
}

}  // namespace

std::vector<ScriptLine> parse_script(std::istream& in) {
  std::vector<ScriptLine> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto space = line.find(' ');
    const auto verb = line.substr(0, space);
    const auto arg = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    if (verb == "TAPPING") {
      try {
        out.push_back({line_no, TappingStep{pointing::TaskConfig::parse(std::string(arg))}});
      } catch (const ParseError&) {
        throw;
      } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
      }
    } else if (verb == "AIM") {
      const double s = parse_seconds(arg, line_no, verb);
      if (!(s > 0.0)) throw ParseError(line_no, "AIM needs a positive duration");
      out.push_back({line_no, AimStep{s}});
    } else if (verb == "IDLE") {
      out.push_back({line_no, IdleStep{parse_seconds(arg, line_no, verb)}});
    } else {
      out.push_back({line_no, CommandStep{std::string(line)}});
    }
  }
  return out;
}

std::vector<ScriptLine> parse_script(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_script(in);
}

EmulatorStats emulator_run(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                           const std::vector<ScriptLine>& script, std::uint64_t seed,
                           const LineSink& sink) {
  EmulatorStats stats;
  user::Simulator sim(model, cfg, pointing::kDefaultScreenCenter);
  bool streaming = false;
  sim.set_sink([&](const fusion::DualSample& s, const fusion::CursorDelta& d) {
    if (!streaming) return;
    sink(encode_record(make_record(s, d)));
    ++stats.records;
  });

  std::uint64_t activity = 0;
  for (const auto& entry : script) {
    const std::uint64_t step_seed = user::trial_seed(seed, 2, activity);
    if (const auto* c = std::get_if<CommandStep>(&entry.step)) {
      try {
        const DeviceCommand cmd = parse_command(c->text);
        sim.set_config(apply_command(sim.config(), cmd));
        if (cmd.kind == CommandKind::start) {
          sim.reset_carry();
          streaming = true;
        } else if (cmd.kind == CommandKind::stop) {
          streaming = false;
        }
        sink("OK " + encode_command(cmd));
        ++stats.acks;
      } catch (const ValidationError& e) {
        sink(std::string("ERR ") + e.what());
        ++stats.errors;
      }
      continue;
    }
    ++activity;
    if (const auto* t = std::get_if<TappingStep>(&entry.step)) {
      const auto centers = pointing::task_geometry(t->task);
      const auto pairs = pointing::trial_targets(t->task);
      sim.run_trial(centers.front(), t->task.W, user::trial_seed(step_seed, 0));
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        sim.run_trial(pairs[i].second, t->task.W, user::trial_seed(step_seed, i + 1));
      }
    } else if (const auto* a = std::get_if<AimStep>(&entry.step)) {
      user::AimGameOptions options;
      options.duration_s = a->seconds;
      user::play_aim_game(sim, options, step_seed);
    } else if (const auto* idle = std::get_if<IdleStep>(&entry.step)) {
      sim.idle(idle->seconds);
    }
  }
  stats.duration_s = sim.time_s();
  return stats;
}

EmulatorStats emulator_run(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                           const std::vector<ScriptLine>& script, std::uint64_t seed,
                           std::ostream& out) {
  return emulator_run(model, cfg, script, seed, [&](const std::string& line) { out << line << '\n'; });
}

EmulatorStats emulator_run_threaded(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                                    const std::vector<ScriptLine>& script, std::uint64_t seed,
                                    std::size_t capacity, const LineSink& consumer) {
  BoundedQueue<std::string> queue(capacity);
  EmulatorStats stats;
  std::exception_ptr failure;
  std::thread producer([&] {
    try {
      stats = emulator_run(model, cfg, script, seed, [&](const std::string& line) { queue.push(line); });
    } catch (...) {
      failure = std::current_exception();
    }
    queue.close();
  });
  std::exception_ptr consumer_failure;
  while (auto line = queue.pop()) {
    if (consumer_failure) continue;  // drain so the producer can finish
    try {
      consumer(*line);
    } catch (...) {
      consumer_failure = std::current_exception();
    }
  }
  producer.join();
  if (failure) std::rethrow_exception(failure);
  if (consumer_failure) std::rethrow_exception(consumer_failure);
  return stats;
}

}  // namespace vmouse::io
