// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vmouse/synthetic_user.hpp"

namespace vmouse::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitValidation = 2;

/// Runs the `vmouse` command line. `args` excludes the program name.
/// Returns the process exit code: 0 success, 2 validation error (including
/// bad flags), 1 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "p_ref=0.4[,key=value...]" into a synthetic participant. Keys are
/// ArmModel fields: p_ref, noise_scale, wrist_amp, feedback_delay_s,
/// perception_frac, r_mm.
user::ArmModel parse_synthetic(const std::string& spec);

}  // namespace vmouse::app
