// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "vmouse/error.hpp"
#include "vmouse/fusion.hpp"
#include "vmouse/trajectory_lab.hpp"

namespace vmouse::lab {
namespace {

// Arc length of the Gerono curve y^2 = x^2 (1 - x^2 / a^2), summed over a
// fine polyline in its own parameterization.
double gerono_length_oracle(double a, int n) {
  double len = 0.0;
  Vec2 prev{0.0, 0.0};
  for (int i = 1; i <= n; ++i) {
    const double t = 2.0 * kinematics::kPi * i / n;
    const Vec2 p{a * std::sin(t), a * std::sin(t) * std::cos(t)};
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

TEST(LemniscatePlan, PlannedLength) {
  for (auto shape : {LemniscateShape::gerono, LemniscateShape::bernoulli}) {
    PlanOptions o;
    o.shape = shape;
    const auto plan = lemniscate_plan(700.0, false, o);
    EXPECT_NEAR(plan.polyline_length(), 700.0, 3.5) << to_string(shape);
  }
}

TEST(LemniscatePlan, GeronoMatchesClosedFormCurve) {
  const auto plan = lemniscate_plan(700.0, false);
  const double half_width = 0.5 * (plan.x_max - plan.x_min);
  EXPECT_NEAR(gerono_length_oracle(half_width, 200000), 700.0, 3.5);
}

TEST(LemniscatePlan, RotationEndpoints) {
  const auto plan = lemniscate_plan(700.0, true);
  EXPECT_NEAR(plan.heading_at(plan.x_min), -20.0, 1e-9);
  EXPECT_NEAR(plan.heading_at(plan.x_max), 40.0, 1e-9);
  const auto [lo, hi] = std::minmax_element(plan.heading_cw_deg.begin(), plan.heading_cw_deg.end());
  EXPECT_NEAR(*lo, -20.0, 0.05);
  EXPECT_NEAR(*hi, 40.0, 0.05);
}

TEST(LemniscatePlan, NoRotationHeadingZero) {
  const auto plan = lemniscate_plan(700.0, false);
  for (double h : plan.heading_cw_deg) EXPECT_EQ(h, 0.0);
}

TEST(LemniscatePlan, RejectsBadInput) {
  EXPECT_THROW(lemniscate_plan(0.0, false), ValidationError);
  EXPECT_THROW(lemniscate_plan(-5.0, true), ValidationError);
  PlanOptions o;
  o.sample_rate_hz = 0;
  EXPECT_THROW(lemniscate_plan(700.0, false, o), ValidationError);
  o = {};
  o.duration_s = -1.0;
  EXPECT_THROW(lemniscate_plan(700.0, false, o), ValidationError);
  EXPECT_THROW(parse_shape("circle"), ValidationError);
  EXPECT_EQ(parse_shape("bernoulli"), LemniscateShape::bernoulli);
}

TEST(RunExperiment, TranslateOnlyAllEqual) {
  const std::vector<int> positions{0, 20, 50, 80, 100};
  const auto report = run_experiment(lemniscate_plan(700.0, false), positions);
  ASSERT_EQ(report.positions.size(), positions.size());
  for (const auto& p : report.positions) {
    EXPECT_NEAR(p.fused_kilocounts, report.positions.front().fused_kilocounts, 1e-9);
    EXPECT_NEAR(p.direct_kilocounts, p.fused_kilocounts, 1e-9);
    EXPECT_LE(p.discrepancy_pct, 1e-9);
  }
}

TEST(RunExperiment, RotationExpandsFrontPositions) {
  const std::vector<int> positions{20, 50, 80};
  const auto report = run_experiment(lemniscate_plan(700.0, true), positions);
  ASSERT_TRUE(report.fused_ratio_20_80.has_value());
  EXPECT_GT(report.positions[0].fused_kilocounts, report.positions[2].fused_kilocounts);
  EXPECT_GE(*report.fused_ratio_20_80, 1.03);
  EXPECT_LE(*report.fused_ratio_20_80, 1.10);
  EXPECT_LT(report.mean_discrepancy_pct, 0.1);
  for (const auto& p : report.positions) EXPECT_GE(p.discrepancy_kilocounts, 0.0);
}

TEST(PathLength, Examples) {
  EXPECT_EQ(path_length({}), 0.0);
  const std::vector<CountVec> s(1000, CountVec{3, 4});
  EXPECT_NEAR(path_length(s), 5.0, 1e-12);
}

TEST(PathLength, SevenHundredMillimetres) {
  const auto plan = lemniscate_plan(700.0, false);
  const auto poses = plan_poses(plan, 72.0);
  const auto s = kinematics::ideal_sensor_read(poses, {0.5, 72.0}, kinematics::kBaseCpi);
  EXPECT_NEAR(path_length(s), 700.0 / 2.1167, 0.5);
}

TEST(PathLengthProperty, InvariantUnderGlobalRotation) {
  const auto plan = lemniscate_plan(700.0, false);
  const auto poses = plan_poses(plan, 72.0);
  const auto base = path_length(kinematics::ideal_sensor_read(poses, {0.3, 72.0}, 800));
  for (double a : {0.3, 1.2, -2.5}) {
    std::vector<Pose> rotated;
    for (const auto& p : poses) {
      rotated.push_back(Pose::make(std::cos(a) * p.x - std::sin(a) * p.y,
                                   std::sin(a) * p.x + std::cos(a) * p.y, p.theta));
    }
    EXPECT_NEAR(path_length(kinematics::ideal_sensor_read(rotated, {0.3, 72.0}, 800)), base, 1e-9 * base);
  }
}

TEST(PathLengthProperty, SampleRateConvergence) {
  PlanOptions a, b;
  a.sample_rate_hz = 500;
  b.sample_rate_hz = 1000;
  const auto ra = run_experiment(lemniscate_plan(700.0, true, a), std::vector<int>{20});
  const auto rb = run_experiment(lemniscate_plan(700.0, true, b), std::vector<int>{20});
  const double la = ra.positions[0].direct_kilocounts, lb = rb.positions[0].direct_kilocounts;
  EXPECT_LT(std::abs(la - lb) / lb, 1e-3);
}

TEST(RunExperimentProperty, DiscrepancyShrinksWithRate) {
  double prev = INFINITY;
  for (double rate : {125.0, 250.0, 500.0, 1000.0}) {
    PlanOptions o;
    o.sample_rate_hz = rate;
    const auto r = run_experiment(lemniscate_plan(700.0, true, o), std::vector<int>{0, 20, 80, 100});
    EXPECT_LT(r.mean_discrepancy_pct, prev) << rate;
    prev = r.mean_discrepancy_pct;
  }
}

TEST(WriteCsv, Columns) {
  std::ostringstream os;
  write_csv(os, run_experiment(lemniscate_plan(700.0, false), std::vector<int>{50}));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "p_percent,mode,length_kilocounts,length_mm,discrepancy_pct");
  EXPECT_NE(os.str().find("\n50,direct,"), std::string::npos);
  EXPECT_NE(os.str().find("\n50,fused,"), std::string::npos);
}

}  // namespace
}  // namespace vmouse::lab
