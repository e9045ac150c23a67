// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vmouse/error.hpp"
#include "vmouse/gp.hpp"

namespace vmouse::opt {
namespace {

// Closed-form EI computed with the erfc-based normal CDF, separate from the
// library's helpers.
double ei_oracle(double mu, double sigma, double best, double xi) {
  const double g = best - mu - xi;
  const double z = g / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
  return g * cdf + sigma * pdf;
}

GPState with(std::initializer_list<std::pair<double, double>> pts) {
  GPState s;
  for (auto [p, v] : pts) s = gp_update(s, {p, v, "test"});
  return s;
}

TEST(ExpectedImprovement, ZeroSigma) {
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0, 0.01), 0.0);
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.0, 0.01), 0.0);
  EXPECT_NEAR(expected_improvement(0.5, 0.0, 1.0, 0.01), 0.49, 1e-15);
}

TEST(ExpectedImprovement, WorkedExample) {
  // mu = 0, sigma = 1, best = 1, xi = 0: Phi(1) + phi(1)
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 1.0, 0.0), 1.0833154705876864, 1e-9);
}

TEST(ExpectedImprovementProperty, MatchesOracleNonNegativeAndGrowsWithSigma) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.01, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const double mu = u(rng), best = u(rng), sigma = s(rng);
    const double ei = expected_improvement(mu, sigma, best);
    EXPECT_GE(ei, 0.0);
    EXPECT_NEAR(ei, ei_oracle(mu, sigma, best, kDefaultXi), 1e-9);
    EXPECT_GE(expected_improvement(mu, sigma * 1.5, best), ei - 1e-12);
  }
}

TEST(GpUpdate, RejectsOutOfDomain) {
  EXPECT_THROW(gp_update({}, {10.0, 0.1, ""}), ValidationError);
  EXPECT_THROW(gp_update({}, {90.0, 0.1, ""}), ValidationError);
  EXPECT_THROW(gp_update({}, {50.0, NAN, ""}), ValidationError);
  EXPECT_NO_THROW(gp_update({}, {20.0, 0.1, ""}));
  EXPECT_NO_THROW(gp_update({}, {80.0, 0.1, ""}));
}

TEST(GpUpdate, RefitCadence) {
  GPState s;
  for (int i = 0; i < 4; ++i) s = gp_update(s, {30.0 + 10 * i, 0.1 + 0.01 * i * i, ""});
  EXPECT_FALSE(s.fitted);
  s = gp_update(s, {75.0, 0.3, ""});
  EXPECT_TRUE(s.fitted);
  const Kernel k = s.kernel;
  s = gp_update(s, {22.0, 0.25, ""});
  EXPECT_EQ(s.kernel, k);  // reused until the tenth observation
}

TEST(Posterior, InterpolatesNoiseFreeData) {
  GPState s = with({{30, 0.3}, {50, 0.1}, {70, 0.4}});
  s.kernel = {15.0, 0.02, 1e-10};
  for (auto [p, v] : {std::pair{30.0, 0.3}, {50.0, 0.1}, {70.0, 0.4}}) {
    const auto post = posterior(s, p);
    EXPECT_NEAR(post.mean, v, 1e-6);
    EXPECT_LT(post.sd, 1e-3);
  }
}

TEST(Posterior, VarianceNeverExceedsPrior) {
  const GPState s = with({{25, 0.2}, {40, 0.15}, {60, 0.12}, {75, 0.3}});
  for (int p = 20; p <= 80; ++p) {
    EXPECT_LE(posterior(s, p).sd, std::sqrt(s.kernel.signal_var) + 1e-12);
  }
}

TEST(Posterior, DuplicatePointsStayWellPosed) {
  const GPState s = with({{50, 0.1}, {50, 0.12}, {50, 0.11}, {50, 0.1}, {50, 0.13}, {50, 0.1}});
  const auto post = posterior(s, 50.0);
  EXPECT_TRUE(std::isfinite(post.mean));
  EXPECT_NEAR(post.mean, 0.11, 0.02);
}

TEST(Posterior, EmptyStateIsPrior) {
  const auto post = posterior(GPState{}, 40.0);
  EXPECT_EQ(post.mean, 0.0);
  EXPECT_EQ(post.sd, 1.0);
}

TEST(EiAcquire, TiesGoToLowerPosition) {
  // A symmetric posterior around 50 makes 40 and 60 tie.
  GPState s;
  s.observations = {{50.0, 0.1, ""}};
  s.kernel = {10.0, 1.0, 1e-6};
  const std::vector<int> grid{40, 60};
  EXPECT_EQ(ei_acquire(s, grid), 40);
  const std::vector<int> reversed{60, 40};
  EXPECT_EQ(ei_acquire(s, reversed), 40);
}

TEST(EiAcquire, Errors) {
  EXPECT_THROW(ei_acquire(with({{50, 0.1}}), std::vector<int>{}), ValidationError);
  EXPECT_THROW(ei_acquire(GPState{}, default_grid()), ValidationError);
}

TEST(DefaultGrid, IntegerPercents) {
  const auto g = default_grid();
  EXPECT_EQ(g.size(), 61u);
  EXPECT_EQ(g.front(), 20);
  EXPECT_EQ(g.back(), 80);
}

TEST(BayesLoop, FindsQuadraticMinimum) {
  auto f = [](double p) { return 0.05 + 1e-4 * (p - 42.0) * (p - 42.0); };
  GPState s;
  for (int p : {30, 50, 70}) s = gp_update(s, {double(p), f(p), ""});
  for (int i = 0; i < 12; ++i) {
    const int next = ei_acquire(s, default_grid());
    s = gp_update(s, {double(next), f(next), ""});
  }
  EXPECT_LE(std::abs(posterior_argmin(s, default_grid()) - 42), 5);
}

TEST(LogMarginalLikelihood, FitDoesNotLowerIt) {
  GPState s = with({{20, 0.3}, {35, 0.12}, {50, 0.1}, {65, 0.18}});
  const Kernel before = s.kernel;
  const double ll0 = log_marginal_likelihood(s, before);
  fit_hyperparameters(s);
  EXPECT_GE(log_marginal_likelihood(s, s.kernel), ll0 - 1e-9);
}

}  // namespace
}  // namespace vmouse::opt
