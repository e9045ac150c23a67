// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vmouse/kinematics.hpp"

namespace vmouse::pointing {

using kinematics::Vec2;

inline constexpr int kTargetsPerSession = 15;
inline constexpr double kEffectiveWidthFactor = 4.133;
inline const Vec2 kDefaultScreenCenter{960.0, 540.0};

/// Multi-directional tapping task: `n_targets` round targets of diameter W
/// on a circle of diameter D.
struct TaskConfig {
  double D = 300.0;  // px
  double W = 20.0;   // px
  int n_targets = kTargetsPerSession;

  /// Throws ValidationError unless D > W > 0 and n_targets >= 3.
  void validate() const;
  double id() const;

  /// Visiting order: n_targets + 1 indices, starting and ending at target 0,
  /// advancing ceil(n/2) positions per trial.
  std::vector<int> order() const;

  /// Parses "D=300,W=20".
  static TaskConfig parse(const std::string& text);
};

/// Target centers. Target 0 sits at center + (0, D/2); index i is rotated
/// by 2 pi i / n from +y toward +x.
std::vector<Vec2> task_geometry(const TaskConfig& cfg, Vec2 center = kDefaultScreenCenter);

/// Target for each trial of a session, in visiting order. Entry i is
/// (previous target, current target) for trial i; n_targets entries.
std::vector<std::pair<Vec2, Vec2>> trial_targets(const TaskConfig& cfg,
                                                 Vec2 center = kDefaultScreenCenter);

struct TimedPoint {
  double t_s = 0.0;
  Vec2 pos;
};

struct Trial {
  Vec2 prev_target;
  Vec2 target;
  Vec2 click;
  std::vector<TimedPoint> path;  // starts at the previous click
  double mt_s = 0.0;
  bool success = false;

  Vec2 start() const { return path.empty() ? prev_target : path.front().pos; }
};

enum class OutlierReason { short_movement, off_target, too_slow };
std::string to_string(OutlierReason reason);

struct RemovedTrial {
  std::size_t index = 0;
  OutlierReason reason = OutlierReason::short_movement;
  Trial trial;
};

struct ScreenResult {
  std::vector<Trial> kept;
  std::vector<RemovedTrial> removed;
};

/// Drops trials that moved less than D/2, started or ended more than 2W
/// from the intended positions, or took longer than log2(D/W + 1) s.
ScreenResult screen_outliers(std::span<const Trial> trials, const TaskConfig& cfg);

struct PathDeviation {
  double mae = 0.0;
  double rmse = 0.0;
  double pdr = 0.0;
  double ideal_length = 0.0;
};

enum class PdrNumerator { mae, rmse };

/// Deviation of `points` from the straight line start -> end. Throws
/// DegenerateError for a zero-length ideal path, EmptyInputError for an
/// empty path.
PathDeviation path_deviation(std::span<const Vec2> points, Vec2 start, Vec2 end,
                             PdrNumerator numerator = PdrNumerator::mae);

/// Index of the path point where the largest-amplitude sub-movement begins.
/// Sub-movements are runs of samples faster than `threshold` x peak speed.
std::size_t largest_submovement_start(std::span<const TimedPoint> path, double threshold = 0.05);

/// Deviation of a trial's cursor path from the line between the start of its
/// largest sub-movement and the click point.
PathDeviation path_deviation(const Trial& trial, PdrNumerator numerator = PdrNumerator::mae);

struct SessionSummary {
  double D = 0.0;
  double W = 0.0;
  double D_e = 0.0;
  double SD_xy = 0.0;
  double W_e = 0.0;
  double ID_e = 0.0;
  double MT_mean = 0.0;
  double TP = 0.0;
  double MAE = 0.0;
  double RMSE = 0.0;
  double PDR = 0.0;
  int n_trials = 0;
  int n_removed = 0;
  int n_errors = 0;
};

/// Screens the trials, then computes effective Fitts quantities over the
/// kept ones. SD_xy is the bivariate spread of click points relative to each
/// trial's target center. Throws DegenerateError when fewer than two trials
/// survive screening or all endpoints coincide.
SessionSummary summarize_session(std::span<const Trial> trials, const TaskConfig& cfg,
                                 PdrNumerator numerator = PdrNumerator::mae);

struct FittsFit {
  double a = 0.0;  // s
  double b = 0.0;  // s/bit
  double r2 = 0.0;
};

/// MT = a + b * ID_e by least squares. Throws ValidationError for fewer
/// than three sessions and DegenerateError when all ID_e coincide.
FittsFit fitts_fit(std::span<const SessionSummary> sessions);

struct BlockSummary {
  double p = 0.0;
  std::vector<SessionSummary> sessions;
  double TP_mean = 0.0;
  double TP_ci95 = 0.0;  // half-width
  double MAE_mean = 0.0;
  double PDR_mean = 0.0;
  FittsFit fit;
  bool fit_valid = false;
};

/// Mean-of-means throughput with a t confidence interval; the Fitts fit is
/// filled in when the sessions span at least two distinct ID_e values.
BlockSummary summarize_block(double p, std::vector<SessionSummary> sessions);

/// Column order: D,W,D_e,SD_xy,W_e,ID_e,MT_mean,TP,MAE,RMSE,PDR,n_trials,n_removed,n_errors
void write_session_csv_header(std::ostream& os);
void write_session_csv_row(std::ostream& os, const SessionSummary& s);
/// Column order: p,n_sessions,TP_mean,TP_ci95,MAE_mean,PDR_mean,fit_a,fit_b,fit_r2
void write_block_csv(std::ostream& os, std::span<const BlockSummary> blocks);

}  // namespace vmouse::pointing
