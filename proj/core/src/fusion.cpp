// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/fusion.hpp"

#include <cmath>
#include <string>

#include "vmouse/error.hpp"

namespace vmouse::fusion {

VirtualConfig VirtualConfig::make(int p_percent, double user_cpi) {
  if (p_percent < 0 || p_percent > 100) {
    throw ValidationError("sensor position must be 0..100 percent, got " +
                          std::to_string(p_percent));
  }
  if (!(user_cpi > 0.0) || user_cpi > kinematics::kBaseCpi) {
    throw ValidationError("user CPI must be in (0, 12000], got " + std::to_string(user_cpi));
  }
  return VirtualConfig(p_percent, user_cpi);
}

CountVec virtual_fuse(const DualSample& sample, double p, double k) {
  return {k * (sample.front.dx + p * (sample.rear.dx - sample.front.dx)),
          k * (sample.front.dy + sample.rear.dy) / 2.0};
}

CountVec virtual_fuse(const DualSample& sample, const VirtualConfig& cfg) {
  return virtual_fuse(sample, cfg.p(), cfg.k());
}

double estimate_rotation(const DualSample& sample, double r_counts) {
  if (!(r_counts > 0.0)) {
    throw ValidationError("sensor baseline in counts must be positive");
  }
  return (sample.front.dx - sample.rear.dx) / r_counts;
}

CursorDelta CarryQuantizer::push(CountVec value) {
  acc_ += value;
  const double rx = std::trunc(acc_.dx);
  const double ry = std::trunc(acc_.dy);
  acc_.dx -= rx;
  acc_.dy -= ry;
  return {static_cast<std::int64_t>(rx), static_cast<std::int64_t>(ry)};
}

std::vector<CursorDelta> quantize_carry(std::span<const CountVec> stream) {
  CarryQuantizer q;
  std::vector<CursorDelta> out;
  out.reserve(stream.size());
  for (const auto& v : stream) out.push_back(q.push(v));
  return out;
}

EmulatedStream emulate_stream(std::span<const Pose> poses, const VirtualConfig& cfg, double r_mm,
                              double sample_rate_hz) {
  using kinematics::SensorOffset;
  const auto front = kinematics::ideal_sensor_read(poses, SensorOffset{0.0, r_mm},
                                                   kinematics::kBaseCpi);
  const auto rear = kinematics::ideal_sensor_read(poses, SensorOffset{1.0, r_mm},
                                                  kinematics::kBaseCpi);
  const auto direct = kinematics::ideal_sensor_read(poses, SensorOffset{cfg.p(), r_mm},
                                                    kinematics::kBaseCpi);
  const double period_us = 1e6 / sample_rate_hz;

  EmulatedStream out;
  out.dual.reserve(front.size());
  out.fused.reserve(front.size());
  out.direct.reserve(front.size());
  CarryQuantizer quantizer;
  for (std::size_t i = 0; i < front.size(); ++i) {
    DualSample s;
    s.t_us = static_cast<std::uint64_t>(std::llround(static_cast<double>(i + 1) * period_us));
    s.front = front[i];
    s.rear = rear[i];
    out.dual.push_back(s);
    out.fused.push_back(virtual_fuse(s, cfg));
    out.cursor.push_back(quantizer.push(out.fused.back()));
    out.direct.push_back(cfg.k() * direct[i]);
  }
  return out;
}

}  // namespace vmouse::fusion
