// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vmouse/device_io.hpp"
#include "vmouse/synthetic_user.hpp"

namespace vmouse::io {

/// A command line sent to the device, kept verbatim. Invalid commands are
/// legal script content; the device answers them with ERR.
struct CommandStep {
  std::string text;
};

/// One ISO tapping session: a start click on target 0, then 15 trials.
struct TappingStep {
  pointing::TaskConfig task;
};

struct AimStep {
  double seconds = 60.0;
};

struct IdleStep {
  double seconds = 0.0;
};

using ScriptStep = std::variant<CommandStep, TappingStep, AimStep, IdleStep>;

struct ScriptLine {
  std::size_t line = 0;
  ScriptStep step;
};

/// Schedule grammar, one step per line:
///   SET_P <n> | SET_CPI <n> | START | STOP | any other command text
///   TAPPING D=<px>,W=<px>
///   AIM <seconds>
///   IDLE <seconds>
/// Blank lines and lines starting with '#' are ignored. Malformed activity
/// lines throw ParseError.
std::vector<ScriptLine> parse_script(std::istream& in);
std::vector<ScriptLine> parse_script(std::string_view text);

/// Receives each output line without its newline.
using LineSink = std::function<void(const std::string&)>;

struct EmulatorStats {
  std::size_t records = 0;
  std::size_t acks = 0;
  std::size_t errors = 0;
  double duration_s = 0.0;
};

/// Runs the schedule against a simulated participant holding the device.
/// Every command is answered with `OK <command>` or `ERR <reason>`;
/// configuration changes apply from the next sample. Records are emitted
/// only between START and STOP, and START clears the quantizer carry.
/// Output is a function of (model, cfg, script, seed) alone.
EmulatorStats emulator_run(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                           const std::vector<ScriptLine>& script, std::uint64_t seed,
                           const LineSink& sink);

/// Writes the stream to `out`, one newline-terminated line per output line.
EmulatorStats emulator_run(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                           const std::vector<ScriptLine>& script, std::uint64_t seed,
                           std::ostream& out);

/// Producer on a worker thread, `consumer` on the calling thread, joined by
/// a BoundedQueue of `capacity` lines. Producer exceptions are rethrown here.
EmulatorStats emulator_run_threaded(const user::ArmModel& model, const fusion::VirtualConfig& cfg,
                                    const std::vector<ScriptLine>& script, std::uint64_t seed,
                                    std::size_t capacity, const LineSink& consumer);

}  // namespace vmouse::io
