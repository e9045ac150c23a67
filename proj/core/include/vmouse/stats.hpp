// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace vmouse::stats {

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;  // 0 when y has no variance
};

/// Ordinary least squares y = intercept + slope * x. Throws DegenerateError
/// when x has no variance or fewer than two points are given.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Student-t confidence interval on the mean. Throws ValidationError for
/// fewer than two values or a level outside (0, 1).
MeanCi mean_ci(std::span<const double> values, double level = 0.95);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator).
double stddev(std::span<const double> values);

struct FriedmanResult {
  double chi2 = 0.0;
  int df = 0;
};

/// Friedman rank test over a subjects x conditions matrix (rows are
/// subjects). Ties get average ranks; no tie correction is applied.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& matrix);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace vmouse::stats
