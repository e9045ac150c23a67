// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "vmouse/error.hpp"

namespace vmouse::stats {

double mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) throw ValidationError("standard deviation needs at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("linear_fit: x and y differ in length");
  if (x.size() < 2) throw DegenerateError("linear_fit needs at least two points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DegenerateError("linear_fit: predictor has zero variance");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

MeanCi mean_ci(std::span<const double> values, double level) {
  if (values.size() < 2) throw ValidationError("confidence interval needs at least two values");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0, 1)");
  const boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  const double sd = stddev(values);
  return {mean(values), t * sd / std::sqrt(static_cast<double>(values.size()))};
}

namespace {

// Average ranks (1-based) of one row.
std::vector<double> average_ranks(const std::vector<double>& row) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  std::vector<double> ranks(row.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && row[idx[j + 1]] == row[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[idx[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

FriedmanResult friedman_test(const std::vector<std::vector<double>>& matrix) {
  const std::size_t n = matrix.size();
  if (n < 2) throw ValidationError("Friedman test needs at least two subjects");
  const std::size_t k = matrix.front().size();
  if (k < 2) throw ValidationError("Friedman test needs at least two conditions");
  std::vector<double> rank_means(k, 0.0);
  for (const auto& row : matrix) {
    if (row.size() != k) throw ValidationError("Friedman test: ragged matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw ValidationError("Friedman test: non-finite value");
    }
    const auto r = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) rank_means[j] += r[j];
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double dev = 0.0;
  for (double& rm : rank_means) {
    rm /= nd;
    dev += (rm - (kd + 1.0) / 2.0) * (rm - (kd + 1.0) / 2.0);
  }
  return {12.0 * nd / (kd * (kd + 1.0)) * dev, static_cast<int>(k) - 1};
}

double normal_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace vmouse::stats
