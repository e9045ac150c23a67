// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vmouse::opt {

inline constexpr int kDomainMin = 20;  // percent
inline constexpr int kDomainMax = 80;
inline constexpr double kDefaultXi = 0.01;
inline constexpr double kNoiseFloor = 1e-6;

struct Observation {
  double p_percent = 0.0;
  double value = 0.0;  // PDR
  std::string source;  // free-form tag, e.g. "synthetic", "cursor-only", "override"

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Squared-exponential kernel sigma_f^2 exp(-(a - b)^2 / (2 l^2)) plus
/// white noise sigma_n^2 on the diagonal.
struct Kernel {
  double lengthscale = 15.0;  // percentage points
  double signal_var = 1.0;
  double noise_var = kNoiseFloor;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// Exact GP over sensor position with a constant mean equal to the mean of
/// the observations.
struct GPState {
  std::vector<Observation> observations;
  Kernel kernel;
  int refit_every = 5;
  bool fitted = false;           // hyperparameters come from a likelihood fit
  double default_noise_ratio = 0.1;  // sigma_n^2 / sigma_f^2 before the first fit

  /// Lowest observed value; nullopt when empty.
  std::optional<double> incumbent() const;
  double prior_mean() const;

  friend bool operator==(const GPState&, const GPState&) = default;
};

/// Appends an observation. Hyperparameters are refitted by marginal
/// likelihood whenever the count reaches a multiple of refit_every;
/// otherwise the fitted ones are reused (or the defaults are recomputed from
/// the data before the first fit). Throws ValidationError for p outside
/// [20, 80] or a non-finite value.
GPState gp_update(GPState state, Observation obs);

/// Grid search over lengthscale and noise ratio with the signal variance
/// profiled out in closed form.
void fit_hyperparameters(GPState& state);

/// Log marginal likelihood of the observations under `kernel`.
double log_marginal_likelihood(const GPState& state, const Kernel& kernel);

struct Posterior {
  double mean = 0.0;
  double sd = 0.0;  // of the latent function, noise excluded
};

/// Posterior at each query point; the prior when there are no observations.
std::vector<Posterior> posterior(const GPState& state, std::span<const double> p_percent);
Posterior posterior(const GPState& state, double p_percent);

/// EI for minimization. With sigma <= 0 it reduces to max(0, best - mu - xi).
double expected_improvement(double mu, double sigma, double best, double xi = kDefaultXi);

/// Integer grid kDomainMin..kDomainMax.
std::vector<int> default_grid();

/// Candidate with the largest EI; ties go to the lower p. Throws
/// ValidationError for an empty grid or an empty state.
int ei_acquire(const GPState& state, std::span<const int> candidates, double xi = kDefaultXi);

/// Candidate with the lowest posterior mean; ties go to the lower p.
int posterior_argmin(const GPState& state, std::span<const int> candidates);

}  // namespace vmouse::opt
