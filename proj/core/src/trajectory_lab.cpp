// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/trajectory_lab.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "vmouse/error.hpp"
#include "vmouse/fusion.hpp"

namespace vmouse::lab {

namespace {

constexpr std::size_t kArcTableSize = 200000;

// Unit-size curve, parameter t in [pi/2, pi/2 + 2 pi); t = pi/2 is the
// central crossing.
Vec2 unit_curve(LemniscateShape shape, double t) {
  const double s = std::sin(t);
  const double c = std::cos(t);
  if (shape == LemniscateShape::bernoulli) {
    const double den = 1.0 + s * s;
    return {c / den, s * c / den};
  }
  return {c, s * c};
}

double to_rad(double deg) { return deg * kinematics::kPi / 180.0; }

}  // namespace

std::string to_string(LemniscateShape shape) {
  return shape == LemniscateShape::bernoulli ? "bernoulli" : "gerono";
}

LemniscateShape parse_shape(const std::string& name) {
  if (name == "gerono") return LemniscateShape::gerono;
  if (name == "bernoulli") return LemniscateShape::bernoulli;
  throw ValidationError("unknown lemniscate shape '" + name + "'");
}

double TrajectoryPlan::heading_at(double x) const {
  if (!rotate || x_max <= x_min) return 0.0;
  const double u = std::clamp((x - x_min) / (x_max - x_min), 0.0, 1.0);
  return left_heading_deg + (right_heading_deg - left_heading_deg) * u;
}

double TrajectoryPlan::polyline_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

TrajectoryPlan lemniscate_plan(double length_mm, bool rotate, const PlanOptions& options) {
  if (!(length_mm > 0.0) || !std::isfinite(length_mm)) {
    throw ValidationError("planned path length must be positive");
  }
  if (!(options.sample_rate_hz > 0.0)) throw ValidationError("sample rate must be positive");
  const double duration = options.duration_s.value_or(rotate ? 11.8 : 9.2);
  if (!(duration > 0.0)) throw ValidationError("duration must be positive");
  if (!(options.mount_p >= 0.0 && options.mount_p <= 1.0)) {
    throw ValidationError("mount position must lie in [0, 1]");
  }

  // Cumulative arc length of the unit curve, used to invert s -> t.
  const double t0 = kinematics::kPi / 2.0;
  const double dt = 2.0 * kinematics::kPi / static_cast<double>(kArcTableSize);
  std::vector<double> arc(kArcTableSize + 1, 0.0);
  Vec2 prev = unit_curve(options.shape, t0);
  for (std::size_t i = 1; i <= kArcTableSize; ++i) {
    const Vec2 cur = unit_curve(options.shape, t0 + dt * static_cast<double>(i));
    arc[i] = arc[i - 1] + (cur - prev).norm();
    prev = cur;
  }
  const double scale = length_mm / arc.back();

  TrajectoryPlan plan;
  plan.shape = options.shape;
  plan.planned_length_mm = length_mm;
  plan.rotate = rotate;
  plan.sample_rate_hz = options.sample_rate_hz;
  plan.duration_s = duration;
  plan.left_heading_deg = options.left_heading_deg;
  plan.right_heading_deg = options.right_heading_deg;
  plan.mount_p = options.mount_p;

  const auto intervals = static_cast<std::size_t>(std::llround(duration * options.sample_rate_hz));
  if (intervals < 1) throw ValidationError("plan must contain at least one sample interval");
  plan.points.reserve(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double target = arc.back() * static_cast<double>(i) / static_cast<double>(intervals);
    const auto it = std::lower_bound(arc.begin(), arc.end(), target);
    std::size_t hi = static_cast<std::size_t>(it - arc.begin());
    hi = std::clamp<std::size_t>(hi, 1, kArcTableSize);
    const std::size_t lo = hi - 1;
    const double span = arc[hi] - arc[lo];
    const double frac = span > 0.0 ? (target - arc[lo]) / span : 0.0;
    const double t = t0 + dt * (static_cast<double>(lo) + frac);
    plan.points.push_back(scale * unit_curve(options.shape, t));
  }

  const auto [mn, mx] = std::minmax_element(plan.points.begin(), plan.points.end(),
                                            [](Vec2 a, Vec2 b) { return a.x < b.x; });
  plan.x_min = mn->x;
  plan.x_max = mx->x;
  plan.heading_cw_deg.reserve(plan.points.size());
  for (const auto& pt : plan.points) plan.heading_cw_deg.push_back(plan.heading_at(pt.x));
  return plan;
}

std::vector<Pose> plan_poses(const TrajectoryPlan& plan, double r_mm) {
  const kinematics::SensorOffset mount{plan.mount_p, r_mm};
  mount.validate();
  std::vector<Pose> poses;
  poses.reserve(plan.points.size());
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    poses.push_back(
        kinematics::pose_from_sensor_point(plan.points[i], -to_rad(plan.heading_cw_deg[i]), mount));
  }
  return poses;
}

double path_length(std::span<const CountVec> stream) {
  double total = 0.0;
  for (const auto& c : stream) total += c.norm();
  return total / 1000.0;
}

namespace {

double mean_trajectory_distance(std::span<const CountVec> a, std::span<const CountVec> b) {
  if (a.empty()) return 0.0;
  CountVec pa, pb;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa += a[i];
    pb += b[i];
    total += (pa - pb).norm();
  }
  return total / static_cast<double>(a.size());
}

double kilocounts_to_mm(double kc) {
  return kc * 1000.0 / kinematics::counts_per_mm(kinematics::kBaseCpi);
}

}  // namespace

EquivalenceReport run_experiment(const TrajectoryPlan& plan, std::span<const int> positions_percent,
                                 double r_mm) {
  const auto poses = plan_poses(plan, r_mm);
  EquivalenceReport report;
  report.rotate = plan.rotate;
  report.shape = plan.shape;
  report.planned_length_mm = plan.planned_length_mm;

  for (int p : positions_percent) {
    const auto cfg = fusion::VirtualConfig::make(p, kinematics::kBaseCpi);
    const auto stream = fusion::emulate_stream(poses, cfg, r_mm, plan.sample_rate_hz);
    PositionResult row;
    row.p_percent = p;
    row.direct_kilocounts = path_length(stream.direct);
    row.fused_kilocounts = path_length(stream.fused);
    row.direct_mm = kilocounts_to_mm(row.direct_kilocounts);
    row.fused_mm = kilocounts_to_mm(row.fused_kilocounts);
    row.discrepancy_kilocounts = mean_trajectory_distance(stream.fused, stream.direct) / 1000.0;
    row.discrepancy_pct = row.direct_kilocounts > 0.0
                              ? 100.0 * row.discrepancy_kilocounts / row.direct_kilocounts
                              : 0.0;
    report.positions.push_back(row);
  }

  if (!report.positions.empty()) {
    for (const auto& row : report.positions) {
      report.mean_discrepancy_kilocounts += row.discrepancy_kilocounts;
      report.mean_discrepancy_pct += row.discrepancy_pct;
    }
    const auto n = static_cast<double>(report.positions.size());
    report.mean_discrepancy_kilocounts /= n;
    report.mean_discrepancy_pct /= n;
  }

  const auto find = [&](int p) -> const PositionResult* {
    for (const auto& row : report.positions)
      if (row.p_percent == p) return &row;
    return nullptr;
  };
  if (const auto *a = find(20), *b = find(80); a && b) {
    if (b->direct_kilocounts > 0.0) report.direct_ratio_20_80 = a->direct_kilocounts / b->direct_kilocounts;
    if (b->fused_kilocounts > 0.0) report.fused_ratio_20_80 = a->fused_kilocounts / b->fused_kilocounts;
  }
  return report;
}

void write_csv(std::ostream& os, const EquivalenceReport& report) {
  os << "p_percent,mode,length_kilocounts,length_mm,discrepancy_pct\n";
  os << std::setprecision(10);
  for (const auto& row : report.positions) {
    os << row.p_percent << ",direct," << row.direct_kilocounts << ',' << row.direct_mm << ','
       << row.discrepancy_pct << '\n';
    os << row.p_percent << ",fused," << row.fused_kilocounts << ',' << row.fused_mm << ','
       << row.discrepancy_pct << '\n';
  }
}

void write_table(std::ostream& os, const EquivalenceReport& report) {
  os << "Virtual vs direct sensor, " << to_string(report.shape) << " path, "
     << report.planned_length_mm << " mm, " << (report.rotate ? "translate+rotate" : "translate only")
     << '\n';
  os << std::fixed;
  os << "  p%   direct(kc)   fused(kc)   direct(mm)   fused(mm)   discrepancy(kc)   disc.%\n";
  for (const auto& r : report.positions) {
    os << std::setw(4) << r.p_percent << std::setprecision(2) << std::setw(13)
       << r.direct_kilocounts << std::setw(12) << r.fused_kilocounts << std::setw(13) << r.direct_mm
       << std::setw(12) << r.fused_mm << std::setprecision(6) << std::setw(18)
       << r.discrepancy_kilocounts << std::setprecision(5) << std::setw(9) << r.discrepancy_pct
       << '\n';
  }
  os << std::setprecision(6) << "mean discrepancy: " << report.mean_discrepancy_kilocounts
     << " kc (" << report.mean_discrepancy_pct << "% of path length)\n";
  if (report.fused_ratio_20_80) {
    os << std::setprecision(4) << "length ratio 20%/80%: fused " << *report.fused_ratio_20_80
       << ", direct " << report.direct_ratio_20_80.value_or(0.0) << '\n';
  }
  os.unsetf(std::ios::fixed);
}

}  // namespace vmouse::lab
