// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace vmouse::kinematics {

inline constexpr double kBaseCpi = 12000.0;
inline constexpr double kMmPerInch = 25.4;
inline constexpr double kDefaultBaselineMm = 72.0;
inline constexpr double kDefaultSampleRateHz = 500.0;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

/// Rigid device state. The reference point is the rear sensor; theta is the
/// device heading, counter-clockwise positive, 0 when the device points
/// along world +y.
struct Pose {
  double x = 0.0;      // mm
  double y = 0.0;      // mm
  double theta = 0.0;  // rad, in (-pi, pi]

  static Pose make(double x, double y, double theta) {
    return {x, y, normalize_angle(theta)};
  }
  Vec2 position() const { return {x, y}; }
};

/// Position along the front->rear sensor axis. p = 0 is the front sensor,
/// p = 1 the rear sensor; r is the distance between them.
struct SensorOffset {
  double p = 0.0;
  double r_mm = kDefaultBaselineMm;

  /// Throws ValidationError unless 0 <= p <= 1 and r > 0.
  void validate() const;
};

/// Displacement reading of one sensor for one sample interval, in counts.
struct CountVec {
  double dx = 0.0;
  double dy = 0.0;

  CountVec& operator+=(CountVec o) {
    dx += o.dx;
    dy += o.dy;
    return *this;
  }
  friend CountVec operator+(CountVec a, CountVec b) { return {a.dx + b.dx, a.dy + b.dy}; }
  friend CountVec operator-(CountVec a, CountVec b) { return {a.dx - b.dx, a.dy - b.dy}; }
  friend CountVec operator*(double s, CountVec v) { return {s * v.dx, s * v.dy}; }
  friend bool operator==(CountVec, CountVec) = default;

  double norm() const { return std::hypot(dx, dy); }
};

/// Unit vector pointing from the rear sensor towards the front sensor.
inline Vec2 forward_axis(double theta) { return {-std::sin(theta), std::cos(theta)}; }
/// Unit vector of the device's +x (rightward) axis.
inline Vec2 lateral_axis(double theta) { return {std::cos(theta), std::sin(theta)}; }

inline double counts_per_mm(double cpi) { return cpi / kMmPerInch; }

/// World position of a sensor mounted at `offset` on a device at `pose`.
Vec2 sensor_world_position(const Pose& pose, const SensorOffset& offset);

/// Pose whose sensor at fraction `p` sits at `point` with heading `theta`.
Pose pose_from_sensor_point(Vec2 point, double theta, const SensorOffset& offset);

/// Reading of an ideal translation sensor for one pose pair: the sensor's
/// world displacement expressed in the frame of the earlier pose.
CountVec ideal_sensor_delta(const Pose& from, const Pose& to, const SensorOffset& offset,
                            double cpi);

/// Ideal readings for each consecutive pair; output has poses.size() - 1
/// entries. Throws EmptyInputError for fewer than two poses.
std::vector<CountVec> ideal_sensor_read(std::span<const Pose> poses, const SensorOffset& offset,
                                        double cpi);

}  // namespace vmouse::kinematics
