// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/kinematics.hpp"

#include <string>

#include "vmouse/error.hpp"

namespace vmouse::kinematics {

double normalize_angle(double rad) {
  double a = std::fmod(rad, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

void SensorOffset::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("sensor position p must lie in [0, 1], got " + std::to_string(p));
  }
  if (!(r_mm > 0.0) || !std::isfinite(r_mm)) {
    throw ValidationError("sensor baseline r must be positive, got " + std::to_string(r_mm));
  }
}

Vec2 sensor_world_position(const Pose& pose, const SensorOffset& offset) {
  return pose.position() + ((1.0 - offset.p) * offset.r_mm) * forward_axis(pose.theta);
}

Pose pose_from_sensor_point(Vec2 point, double theta, const SensorOffset& offset) {
  const Vec2 rear = point - ((1.0 - offset.p) * offset.r_mm) * forward_axis(theta);
  return Pose::make(rear.x, rear.y, theta);
}

CountVec ideal_sensor_delta(const Pose& from, const Pose& to, const SensorOffset& offset,
                            double cpi) {
  const Vec2 d = sensor_world_position(to, offset) - sensor_world_position(from, offset);
  const double scale = counts_per_mm(cpi);
  return {scale * d.dot(lateral_axis(from.theta)), scale * d.dot(forward_axis(from.theta))};
}

std::vector<CountVec> ideal_sensor_read(std::span<const Pose> poses, const SensorOffset& offset,
                                        double cpi) {
  if (poses.size() < 2) {
    throw EmptyInputError("ideal_sensor_read needs at least two poses");
  }
  offset.validate();
  std::vector<CountVec> out;
  out.reserve(poses.size() - 1);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    out.push_back(ideal_sensor_delta(poses[i - 1], poses[i], offset, cpi));
  }
  return out;
}

}  // namespace vmouse::kinematics
