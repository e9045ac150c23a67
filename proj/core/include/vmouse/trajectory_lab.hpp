// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmouse/kinematics.hpp"

namespace vmouse::lab {

using kinematics::CountVec;
using kinematics::Pose;
using kinematics::Vec2;

enum class LemniscateShape { gerono, bernoulli };

std::string to_string(LemniscateShape shape);
/// Accepts "gerono" or "bernoulli"; throws ValidationError otherwise.
LemniscateShape parse_shape(const std::string& name);

struct PlanOptions {
  LemniscateShape shape = LemniscateShape::gerono;
  double sample_rate_hz = kinematics::kDefaultSampleRateHz;
  /// Motion duration; unset picks 9.2 s for translation and 11.8 s with
  /// rotation, the robot's average motion durations.
  std::optional<double> duration_s;
  /// Clockwise heading at the leftmost and rightmost extremes (degrees).
  double left_heading_deg = -20.0;
  double right_heading_deg = 40.0;
  /// Where the rotation axis sits on the device (fraction front->rear).
  double mount_p = 0.5;
};

/// A figure-eight robot path sampled uniformly in arc length. `points` are
/// positions of the mount axis; `heading_cw_deg` the clockwise device
/// rotation at each point.
struct TrajectoryPlan {
  LemniscateShape shape = LemniscateShape::gerono;
  double planned_length_mm = 700.0;
  bool rotate = false;
  double sample_rate_hz = kinematics::kDefaultSampleRateHz;
  double duration_s = 0.0;
  double left_heading_deg = -20.0;
  double right_heading_deg = 40.0;
  double mount_p = 0.5;
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<Vec2> points;
  std::vector<double> heading_cw_deg;

  /// Rotation profile: linear in x between the two extremes, or 0 when the
  /// plan does not rotate.
  double heading_at(double x) const;
  double polyline_length() const;
};

/// Throws ValidationError for non-positive length, rate, or duration.
TrajectoryPlan lemniscate_plan(double length_mm, bool rotate, const PlanOptions& options = {});

/// Device poses (rear-sensor reference, CCW heading) for a plan.
std::vector<Pose> plan_poses(const TrajectoryPlan& plan, double r_mm);

/// Total detected length of a count stream, in kilocounts.
double path_length(std::span<const CountVec> stream);

struct PositionResult {
  int p_percent = 0;
  double direct_kilocounts = 0.0;
  double fused_kilocounts = 0.0;
  double direct_mm = 0.0;
  double fused_mm = 0.0;
  double discrepancy_kilocounts = 0.0;  // mean trajectory distance fused vs direct
  double discrepancy_pct = 0.0;         // relative to the direct path length
};

struct EquivalenceReport {
  bool rotate = false;
  LemniscateShape shape = LemniscateShape::gerono;
  double planned_length_mm = 0.0;
  std::vector<PositionResult> positions;
  double mean_discrepancy_kilocounts = 0.0;
  double mean_discrepancy_pct = 0.0;
  std::optional<double> direct_ratio_20_80;
  std::optional<double> fused_ratio_20_80;
};

/// Compares an ideal sensor physically mounted at each position with the
/// two-sensor fusion at that position, at base CPI and k = 1.
EquivalenceReport run_experiment(const TrajectoryPlan& plan, std::span<const int> positions_percent,
                                 double r_mm = kinematics::kDefaultBaselineMm);

/// CSV: p_percent,mode,length_kilocounts,length_mm,discrepancy_pct
void write_csv(std::ostream& os, const EquivalenceReport& report);
void write_table(std::ostream& os, const EquivalenceReport& report);

}  // namespace vmouse::lab
