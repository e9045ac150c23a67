// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vmouse/error.hpp"
#include "vmouse/fusion.hpp"
#include "vmouse/trajectory_lab.hpp"

namespace vmouse::fusion {
namespace {

DualSample sample(CountVec front, CountVec rear) {
  DualSample s;
  s.front = front;
  s.rear = rear;
  return s;
}

TEST(VirtualFuse, EndpointsReproduceSensors) {
  const auto s = sample({7, 3}, {1, 3});
  EXPECT_EQ(virtual_fuse(s, 0.0, 1.0), (CountVec{7, 3}));
  EXPECT_EQ(virtual_fuse(s, 1.0, 1.0), (CountVec{1, 3}));
}

TEST(VirtualFuse, Midpoint) {
  EXPECT_EQ(virtual_fuse(sample({10, 4}, {2, 4}), VirtualConfig::make(50, kinematics::kBaseCpi)),
            (CountVec{6, 4}));
}

TEST(VirtualFuse, ScalesByK) {
  const auto cfg = VirtualConfig::make(25, 800);
  EXPECT_DOUBLE_EQ(cfg.k(), 800.0 / 12000.0);
  const auto got = virtual_fuse(sample({12, 6}, {4, 2}), cfg);
  EXPECT_DOUBLE_EQ(got.dx, cfg.k() * (0.75 * 12 + 0.25 * 4));
  EXPECT_DOUBLE_EQ(got.dy, cfg.k() * 4.0);
}

TEST(VirtualFuseProperty, AffineInP) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 50);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample({n(rng), n(rng)}, {n(rng), n(rng)});
    const auto a = virtual_fuse(s, 0.0, 1.0), b = virtual_fuse(s, 1.0, 1.0);
    for (int pp = 0; pp <= 100; pp += 10) {
      const double p = pp / 100.0;
      const auto got = virtual_fuse(s, VirtualConfig::make(pp, kinematics::kBaseCpi));
      EXPECT_NEAR(got.dx, (1 - p) * a.dx + p * b.dx, 1e-12 * (1 + std::abs(a.dx) + std::abs(b.dx)));
      EXPECT_EQ(got.dy, a.dy);  // dy does not depend on p
    }
  }
}

TEST(VirtualConfig, Validation) {
  EXPECT_THROW(VirtualConfig::make(-1, 800), ValidationError);
  EXPECT_THROW(VirtualConfig::make(101, 800), ValidationError);
  EXPECT_THROW(VirtualConfig::make(50, 0), ValidationError);
  EXPECT_THROW(VirtualConfig::make(50, 12001), ValidationError);
  EXPECT_NO_THROW(VirtualConfig::make(0, 12000));
  EXPECT_DOUBLE_EQ(VirtualConfig::make(37, 800).p(), 0.37);
}

TEST(EstimateRotation, Examples) {
  EXPECT_EQ(estimate_rotation(sample({5, 1}, {5, 9}), 34016), 0.0);
  const double th = estimate_rotation(sample({604, 0}, {10, 0}), 34016);
  EXPECT_NEAR(th, 594.0 / 34016.0, 1e-15);
  EXPECT_NEAR(th * 180.0 / kinematics::kPi, 1.0, 0.01);
  EXPECT_LT(estimate_rotation(sample({1, 0}, {3, 0}), 34016), 0.0);
}

TEST(EstimateRotationProperty, RecoversInPlaceRotation) {
  const double r_counts = 72.0 * kinematics::counts_per_mm(kinematics::kBaseCpi);
  for (double theta : {1e-4, 1e-3, 5e-3, 1e-2}) {
    const std::vector<kinematics::Pose> poses{kinematics::Pose::make(0, 0, 0),
                                              kinematics::Pose::make(0, 0, -theta)};
    const auto front = kinematics::ideal_sensor_read(poses, {0.0, 72.0}, kinematics::kBaseCpi);
    const auto rear = kinematics::ideal_sensor_read(poses, {1.0, 72.0}, kinematics::kBaseCpi);
    const double got = estimate_rotation(sample(front[0], rear[0]), r_counts);
    EXPECT_LE(std::abs(got - theta) / theta, 1e-3) << theta;
  }
}

std::vector<std::int64_t> reports_x(const std::vector<double>& xs) {
  std::vector<CountVec> in;
  for (double x : xs) in.push_back({x, 0.0});
  std::vector<std::int64_t> out;
  for (const auto& d : quantize_carry(in)) out.push_back(d.mx);
  return out;
}

TEST(QuantizeCarry, HandTrace) {
  EXPECT_EQ(reports_x({0.6667, 0.6667, 0.6667}), (std::vector<std::int64_t>{0, 1, 1}));
}

TEST(QuantizeCarry, IntegersPassThrough) {
  CarryQuantizer q;
  for (int v : {3, -2, 0, 17, -40}) {
    const auto d = q.push({static_cast<double>(v), static_cast<double>(-v)});
    EXPECT_EQ(d.mx, v);
    EXPECT_EQ(d.my, -v);
    EXPECT_EQ(q.remainder(), (CountVec{0, 0}));
  }
}

TEST(QuantizeCarry, AlternatingHalvesGiveZero) {
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(i % 2 ? -0.5 : 0.5);
  for (auto r : reports_x(xs)) EXPECT_EQ(r, 0);
}

TEST(QuantizeCarry, TruncatesTowardZero) {
  EXPECT_EQ(reports_x({-0.6667, -0.6667, -0.6667}), (std::vector<std::int64_t>{0, -1, -1}));
}

TEST(QuantizeCarryProperty, CarryConservation) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0, 3);
  CarryQuantizer q;
  double sx = 0, sy = 0;
  std::int64_t rx = 0, ry = 0;
  for (int i = 0; i < 100000; ++i) {
    const CountVec v{n(rng), n(rng)};
    sx += v.dx;
    sy += v.dy;
    const auto d = q.push(v);
    rx += d.mx;
    ry += d.my;
    ASSERT_LE(std::abs(static_cast<double>(rx) - std::trunc(sx)), 1.0);
    ASSERT_LE(std::abs(static_cast<double>(ry) - std::trunc(sy)), 1.0);
  }
}

TEST(Pipeline, CarrySurvivesConfigChangeAndClearsOnReset) {
  Pipeline pipe(VirtualConfig::make(0, 6000));  // k = 0.5
  EXPECT_EQ(pipe.process(sample({1, 0}, {1, 0})).mx, 0);
  pipe.set_config(VirtualConfig::make(100, 6000));
  EXPECT_EQ(pipe.process(sample({9, 0}, {1, 0})).mx, 1);  // 0.5 carried + 0.5
  EXPECT_EQ(pipe.process(sample({1, 0}, {1, 0})).mx, 0);
  pipe.reset();
  EXPECT_EQ(pipe.process(sample({1, 0}, {1, 0})).mx, 0);
}

TEST(Pipeline, IdentityAtUnitK) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(-30, 30);
  Pipeline front(VirtualConfig::make(0, kinematics::kBaseCpi));
  Pipeline rear(VirtualConfig::make(100, kinematics::kBaseCpi));
  for (int i = 0; i < 500; ++i) {
    const auto s = sample({double(u(rng)), double(u(rng))}, {double(u(rng)), double(u(rng))});
    EXPECT_EQ(virtual_fuse(s, 0.0, 1.0).dx, s.front.dx);
    EXPECT_EQ(virtual_fuse(s, 1.0, 1.0).dx, s.rear.dx);
    EXPECT_EQ(front.process(s).mx, static_cast<std::int64_t>(s.front.dx));
    EXPECT_EQ(rear.process(s).mx, static_cast<std::int64_t>(s.rear.dx));
  }
}

TEST(EmulateStream, StraightLineAt800Cpi) {
  std::vector<kinematics::Pose> poses;
  for (int i = 0; i <= 500; ++i) poses.push_back(kinematics::Pose::make(0, 100.0 * i / 500, 0));
  const double expect = 100.0 * 800.0 / 25.4;  // 3149.6
  for (int p : {0, 35, 100}) {
    const auto s = emulate_stream(poses, VirtualConfig::make(p, 800), 72.0);
    std::int64_t mx = 0, my = 0;
    for (const auto& d : s.cursor) mx += d.mx, my += d.my;
    EXPECT_EQ(mx, 0);
    EXPECT_LE(std::abs(static_cast<double>(my) - expect), 1.0);
    EXPECT_EQ(s.dual.size(), poses.size() - 1);
  }
}

TEST(EmulateStream, TranslationFusedEqualsDirect) {
  const auto plan = lab::lemniscate_plan(700.0, false);
  const auto poses = lab::plan_poses(plan, 72.0);
  for (int p : {20, 50, 80}) {
    const auto s = emulate_stream(poses, VirtualConfig::make(p, kinematics::kBaseCpi), 72.0);
    for (std::size_t i = 0; i < s.fused.size(); ++i) {
      ASSERT_NEAR(s.fused[i].dx, s.direct[i].dx, 1e-9);
      ASSERT_NEAR(s.fused[i].dy, s.direct[i].dy, 1e-9);
    }
  }
}

TEST(EmulateStream, RotationDiscrepancySmall) {
  const auto plan = lab::lemniscate_plan(700.0, true);
  const auto poses = lab::plan_poses(plan, 72.0);
  const auto s = emulate_stream(poses, VirtualConfig::make(20, kinematics::kBaseCpi), 72.0);
  double fx = 0, fy = 0, dx = 0, dy = 0, dist = 0, len = 0;
  for (std::size_t i = 0; i < s.fused.size(); ++i) {
    fx += s.fused[i].dx, fy += s.fused[i].dy;
    dx += s.direct[i].dx, dy += s.direct[i].dy;
    dist += std::hypot(fx - dx, fy - dy);
    len += s.direct[i].norm();
  }
  EXPECT_LT(dist / static_cast<double>(s.fused.size()) / len, 1e-3);
}

}  // namespace
}  // namespace vmouse::fusion
