// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vmouse/error.hpp"
#include "vmouse/stats.hpp"

namespace vmouse::opt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLengthscales[] = {4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0, 60.0};
constexpr double kNoiseRatios[] = {1e-6, 1e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0};

double sq_exp(double a, double b, double l) {
  const double d = (a - b) / l;
  return std::exp(-0.5 * d * d);
}

Eigen::MatrixXd correlation(const std::vector<Observation>& obs, double l) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = sq_exp(obs[static_cast<std::size_t>(i)].p_percent,
                       obs[static_cast<std::size_t>(j)].p_percent, l);
    }
  }
  return c;
}

Eigen::VectorXd centered(const GPState& state) {
  const double m = state.prior_mean();
  Eigen::VectorXd y(static_cast<Eigen::Index>(state.observations.size()));
  for (std::size_t i = 0; i < state.observations.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = state.observations[i].value - m;
  }
  return y;
}

double sample_variance(const std::vector<Observation>& obs) {
  if (obs.size() < 2) return 0.0;
  std::vector<double> v;
  for (const auto& o : obs) v.push_back(o.value);
  const double sd = stats::stddev(v);
  return sd * sd;
}

void default_hyperparameters(GPState& state) {
  double var = sample_variance(state.observations);
  if (!(var > 0.0)) {
    const double m = state.observations.empty() ? 0.0 : std::abs(state.prior_mean());
    var = std::max(kNoiseFloor, 0.01 * m * m);
  }
  state.kernel.lengthscale = 15.0;
  state.kernel.signal_var = var;
  state.kernel.noise_var = std::max(kNoiseFloor, state.default_noise_ratio * var);
}

}  // namespace

std::optional<double> GPState::incumbent() const {
  if (observations.empty()) return std::nullopt;
  double best = observations.front().value;
  for (const auto& o : observations) best = std::min(best, o.value);
  return best;
}

double GPState::prior_mean() const {
  if (observations.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : observations) s += o.value;
  return s / static_cast<double>(observations.size());
}

double log_marginal_likelihood(const GPState& state, const Kernel& kernel) {
  const auto& obs = state.observations;
  if (obs.empty()) return 0.0;
  Eigen::MatrixXd k = kernel.signal_var * correlation(obs, kernel.lengthscale);
  k.diagonal().array() += kernel.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd y = centered(state);
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(obs.size()) * kLog2Pi;
}

void fit_hyperparameters(GPState& state) {
  const auto& obs = state.observations;
  if (obs.size() < 2) {
    default_hyperparameters(state);
    return;
  }
  const Eigen::VectorXd y = centered(state);
  const double n = static_cast<double>(obs.size());
  double best_ll = -std::numeric_limits<double>::infinity();
  Kernel best = state.kernel;
  for (double l : kLengthscales) {
    const Eigen::MatrixXd c = correlation(obs, l);
    for (double ratio : kNoiseRatios) {
      Eigen::MatrixXd a = c;
      a.diagonal().array() += ratio;
      const Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) continue;
      // With K = s2 * A, the likelihood peaks at s2 = y' A^-1 y / n.
      const double quad = y.dot(llt.solve(y));
      const double s2 = std::max(quad / n, kNoiseFloor);
      const Kernel k{l, s2, std::max(ratio * s2, kNoiseFloor)};
      const double ll = log_marginal_likelihood(state, k);
      if (ll > best_ll) {
        best_ll = ll;
        best = k;
      }
    }
  }
  state.kernel = best;
  state.fitted = true;
}

GPState gp_update(GPState state, Observation obs) {
  if (!std::isfinite(obs.value)) throw ValidationError("observation value must be finite");
  if (!(obs.p_percent >= kDomainMin && obs.p_percent <= kDomainMax)) {
    throw ValidationError("observation position must lie in [20, 80] percent");
  }
  if (state.refit_every < 1) throw ValidationError("refit_every must be at least 1");
  state.observations.push_back(std::move(obs));
  const auto n = state.observations.size();
  if (n % static_cast<std::size_t>(state.refit_every) == 0) {
    fit_hyperparameters(state);
  } else if (!state.fitted) {
    default_hyperparameters(state);
  }
  return state;
}

std::vector<Posterior> posterior(const GPState& state, std::span<const double> p_percent) {
  std::vector<Posterior> out;
  out.reserve(p_percent.size());
  const auto& kern = state.kernel;
  if (state.observations.empty()) {
    for (std::size_t i = 0; i < p_percent.size(); ++i) {
      out.push_back({0.0, std::sqrt(kern.signal_var)});
    }
    return out;
  }
  Eigen::MatrixXd k = kern.signal_var * correlation(state.observations, kern.lengthscale);
  k.diagonal().array() += kern.noise_var;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw DegenerateError("GP covariance is not positive definite");
  const Eigen::VectorXd alpha = llt.solve(centered(state));
  const double m = state.prior_mean();
  const auto n = static_cast<Eigen::Index>(state.observations.size());
  Eigen::VectorXd ks(n);
  for (double p : p_percent) {
    for (Eigen::Index i = 0; i < n; ++i) {
      ks(i) = kern.signal_var *
              sq_exp(p, state.observations[static_cast<std::size_t>(i)].p_percent, kern.lengthscale);
    }
    const Eigen::VectorXd v = llt.matrixL().solve(ks);
    const double var = std::max(0.0, kern.signal_var - v.squaredNorm());
    out.push_back({m + ks.dot(alpha), std::sqrt(var)});
  }
  return out;
}

Posterior posterior(const GPState& state, double p_percent) {
  const double q[] = {p_percent};
  return posterior(state, q).front();
}

double expected_improvement(double mu, double sigma, double best, double xi) {
  const double gain = best - mu - xi;
  if (!(sigma > 0.0)) return std::max(0.0, gain);
  const double z = gain / sigma;
  return gain * stats::normal_cdf(z) + sigma * stats::normal_pdf(z);
}

std::vector<int> default_grid() {
  std::vector<int> g(kDomainMax - kDomainMin + 1);
  std::iota(g.begin(), g.end(), kDomainMin);
  return g;
}

namespace {

std::vector<int> sorted_candidates(std::span<const int> candidates) {
  if (candidates.empty()) throw ValidationError("candidate grid is empty");
  std::vector<int> c(candidates.begin(), candidates.end());
  std::sort(c.begin(), c.end());
  return c;
}

std::vector<double> as_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

int ei_acquire(const GPState& state, std::span<const int> candidates, double xi) {
  const auto c = sorted_candidates(candidates);
  if (state.observations.empty()) throw ValidationError("EI needs at least one observation");
  const double best = *state.incumbent();
  const auto post = posterior(state, as_double(c));
  int arg = c.front();
  double top = -1.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double ei = expected_improvement(post[i].mean, post[i].sd, best, xi);
    if (ei > top) {
      top = ei;
      arg = c[i];
    }
  }
  return arg;
}

int posterior_argmin(const GPState& state, std::span<const int> candidates) {
  const auto c = sorted_candidates(candidates);
  const auto post = posterior(state, as_double(c));
  int arg = c.front();
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (post[i].mean < low) {
      low = post[i].mean;
      arg = c[i];
    }
  }
  return arg;
}

}  // namespace vmouse::opt
