// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmouse/gp.hpp"
#include "vmouse/pointing.hpp"
#include "vmouse/synthetic_user.hpp"

namespace vmouse::opt {

// ---------------------------------------------------------------------------
// One-shot calibration

struct CalibrationPlan {
  std::vector<int> positions{20, 40, 50, 60, 80};  // percent, visiting order of each round
  double per_position_s = 240.0;
  int rounds = 3;
  double rest_s = 60.0;

  /// Throws ValidationError for an empty or duplicated position set, any
  /// position outside [1, 99], or non-positive durations.
  void validate() const;
  /// Position order for every round, each round shuffled by `seed`.
  std::vector<int> schedule(std::uint64_t seed) const;
};

/// Supplies the tapping sessions recorded at `p_percent` during one visit.
using BlockSource =
    std::function<std::vector<pointing::SessionSummary>(int p_percent, double seconds, int round)>;

struct CalibrationChoice {
  std::vector<int> subset;  // positions whose CI reaches the top mean, ascending
  double median = 0.0;
  int chosen_p = 0;         // median snapped to the nearest tested position
};

/// Best subset = positions whose TP upper confidence bound reaches the
/// highest mean; the median of the subset snaps to the nearest tested
/// position, ties to the lower one. BlockSummary::p is a fraction.
CalibrationChoice choose_position(std::span<const pointing::BlockSummary> blocks);

struct CalibrationResult {
  std::vector<int> schedule;
  std::vector<pointing::BlockSummary> blocks;  // ascending p
  CalibrationChoice choice;
};

/// Throws ValidationError when a position ends with fewer than two sessions.
CalibrationResult run_calibration(const CalibrationPlan& plan, const BlockSource& source,
                                  std::uint64_t seed);

/// Tapping sessions from a synthetic user, cycling the study D x W set until
/// the visit time is used up. Session seeds repeat across positions.
class SyntheticBlockSource {
 public:
  SyntheticBlockSource(user::ArmModel model, std::uint64_t seed,
                       double user_cpi = user::kDefaultUserCpi);
  std::vector<pointing::SessionSummary> operator()(int p_percent, double seconds, int round) const;

 private:
  user::ArmModel model_;
  std::uint64_t seed_;
  double user_cpi_;
};

// ---------------------------------------------------------------------------
// In-task optimization

struct OptimizerOptions {
  std::vector<int> seeds{30, 50, 70};
  double xi = kDefaultXi;
  int refit_every = 5;

  friend bool operator==(const OptimizerOptions&, const OptimizerOptions&) = default;
};

/// Suggests positions for successive measurement blocks: the seed points
/// first, then the EI maximizer on the 20..80 grid.
class InTaskOptimizer {
 public:
  explicit InTaskOptimizer(OptimizerOptions options = {});

  int suggest() const;
  void observe(Observation obs);
  /// Grid minimizer of the posterior mean; 50 before any data.
  int best_p() const;
  std::vector<Posterior> posterior_curve() const;

  const GPState& state() const { return state_; }
  const OptimizerOptions& options() const { return options_; }

  std::string to_checkpoint() const;
  /// Throws ParseError on a malformed or foreign document.
  static InTaskOptimizer from_checkpoint(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static InTaskOptimizer load(const std::filesystem::path& path);

  friend bool operator==(const InTaskOptimizer&, const InTaskOptimizer&) = default;

 private:
  OptimizerOptions options_;
  GPState state_;
};

inline constexpr const char* kCheckpointFormat = "vmouse-optimizer-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Measures PDR for one block at `p_percent`.
using PdrSource = std::function<double(int p_percent)>;

struct InTaskResult {
  std::vector<Observation> trajectory;
  int final_p = 0;
  InTaskOptimizer optimizer;
};

/// Runs `budget` measure/update iterations (budget >= 4). Exceptions from the
/// source, including SourceExhausted, propagate.
InTaskResult optimize_in_task(const PdrSource& source, int budget, OptimizerOptions options = {});

/// PDR from `seconds` of simulated aim-game play per call; each call draws
/// fresh targets. With max_calls set, further calls throw SourceExhausted.
class SyntheticPdrSource {
 public:
  SyntheticPdrSource(user::ArmModel model, std::uint64_t seed, double seconds = 60.0,
                     double user_cpi = user::kDefaultUserCpi,
                     std::optional<int> max_calls = std::nullopt);
  double operator()(int p_percent);
  int calls() const { return calls_; }
  /// Skips `n` calls, so a resumed run draws what the original would have.
  void skip(int n) { calls_ += n; }

 private:
  user::ArmModel model_;
  std::uint64_t seed_;
  double seconds_;
  double user_cpi_;
  std::optional<int> max_calls_;
  int calls_ = 0;
};

}  // namespace vmouse::opt
