// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vmouse/fusion.hpp"
#include "vmouse/kinematics.hpp"
#include "vmouse/pointing.hpp"

namespace vmouse::user {

using kinematics::Pose;
using kinematics::Vec2;

inline constexpr double kMaxWristDeviation = 0.44;  // rad
inline constexpr int kMaxSubmovements = 20;
inline constexpr double kDefaultUserCpi = 800.0;

/// Arm and motor-control parameters of a simulated participant. Lengths in
/// mm, times in s, cursor quantities in px (1 count = 1 px).
struct ArmModel {
  /// Rotation pivot relative to the device center at rest; nullopt puts the
  /// pivot at infinity (no pivot rotation).
  std::optional<Vec2> pivot{Vec2{0.0, -300.0}};
  double wrist_amp = 0.40;       // rad of deviation reached over wrist_span_mm of lateral travel
  double wrist_span_mm = 80.0;
  double wrist_gain_sd = 0.3;    // per sub-movement variability of the wrist coupling
  double wrist_relax_per_mm = 0.01;  // decay of deviation toward its positional value
  double p_ref = 0.5;
  double noise_scale = 0.24;     // along-track noise sd, fraction of amplitude for a 100 ms sub-movement
  double lateral_noise_ratio = 0.5;
  double correction_interval = 0.1;
  double feedback_delay_s = 0.1;  // visual latency of the perceived cursor
  double ballistic_frac = 0.8;    // share of a sub-movement that runs before a correction can start
  double reaction_s = 0.05;
  double dwell_s = 0.05;
  double submove_base_s = 0.12;
  double submove_sqrt_s = 0.09;   // s per sqrt(amplitude / W)
  double tolerance_frac = 0.25;   // correction threshold, fraction of W
  double perception_frac = 0.10;  // target localization noise sd, fraction of W
  double r_mm = kinematics::kDefaultBaselineMm;

  /// Throws ValidationError when a parameter is out of range.
  void validate() const;
};

struct TimedPose {
  double t_s = 0.0;
  Pose pose;
};

struct TrialTrace {
  double t_start_s = 0.0;  // simulator clock at the previous click
  Vec2 start;              // cursor at trial start, px
  Vec2 target;
  double W = 0.0;
  std::vector<TimedPose> poses;  // first entry is the pose at trial start
  std::vector<fusion::DualSample> samples;
  std::vector<pointing::TimedPoint> cursor;  // t relative to trial start; first point is `start`
  Vec2 click;
  double mt_s = 0.0;
  bool success = false;    // click landed inside the target
  bool completed = true;   // false when the sub-movement cap or a deadline ended the trial
  int n_submovements = 0;
};

/// Converts a trace into an analysis trial aimed from `prev_target`.
pointing::Trial to_trial(const TrialTrace& trace, Vec2 prev_target);

/// Closed-loop pointing simulator. The device pose, wrist state, fusion
/// carry and cursor persist across trials, as in one continuous session.
class Simulator {
 public:
  using SampleSink = std::function<void(const fusion::DualSample&, const fusion::CursorDelta&)>;

  Simulator(const ArmModel& model, const fusion::VirtualConfig& cfg, Vec2 cursor = {});

  /// Moves toward `target` and clicks. `trial_seed` fixes every random draw
  /// of the trial, so the same seed replays the same intent at any p.
  /// A trial still running at `deadline_s` (simulator clock) is abandoned.
  TrialTrace run_trial(Vec2 target, double W, std::uint64_t trial_seed,
                       std::optional<double> deadline_s = std::nullopt);

  /// Holds the device still, emitting zero samples.
  void idle(double seconds);

  void set_config(const fusion::VirtualConfig& cfg) { pipeline_.set_config(cfg); }
  const fusion::VirtualConfig& config() const { return pipeline_.config(); }
  void set_sink(SampleSink sink) { sink_ = std::move(sink); }
  /// Clears the device-side quantizer carry, as a session START does.
  void reset_carry() { pipeline_.reset(); }

  const ArmModel& model() const { return model_; }
  Vec2 cursor() const { return cursor_; }
  double time_s() const { return static_cast<double>(t_us_) * 1e-6; }
  const Pose& pose() const { return pose_; }

 private:
  struct StepOut {
    fusion::DualSample sample;
    fusion::CursorDelta delta;
  };
  StepOut step(Vec2 d_px, double wrist_gain, bool button);

  ArmModel model_;
  fusion::Pipeline pipeline_;
  fusion::CarryQuantizer front_q_, rear_q_;
  SampleSink sink_;
  Pose pose_;
  Vec2 home_;       // reference-point position at rest
  Vec2 pivot_world_;
  double psi_ = 0.0;
  Vec2 cursor_;
  std::uint64_t t_us_ = 0;
};

/// One trial from `start` with a fresh simulator.
TrialTrace simulate_trial(const ArmModel& model, Vec2 start, Vec2 target, double W,
                          const fusion::VirtualConfig& cfg, std::uint64_t seed = 1);

/// Deterministic per-trial seed derived from a run seed and indices.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct SessionTrace {
  pointing::TaskConfig task;
  std::vector<pointing::Trial> trials;
  std::vector<TrialTrace> traces;
};

/// One ISO multi-directional session: the cursor starts on the first target
/// and the 15 following clicks form the trials.
SessionTrace simulate_session(const ArmModel& model, const fusion::VirtualConfig& cfg,
                              const pointing::TaskConfig& task, std::uint64_t seed,
                              std::uint64_t session_index,
                              Vec2 center = pointing::kDefaultScreenCenter);

/// D x W combinations of the tapping study, in presentation order.
std::vector<pointing::TaskConfig> study_tasks();

/// `n_sessions` sessions cycling through study_tasks(), summarized. Sessions
/// that fail to summarize are skipped.
std::vector<pointing::SessionSummary> simulate_block(const ArmModel& model,
                                                     const fusion::VirtualConfig& cfg,
                                                     int n_sessions, std::uint64_t seed,
                                                     pointing::PdrNumerator numerator =
                                                         pointing::PdrNumerator::mae);

struct AimGameOptions {
  double duration_s = 60.0;
  Vec2 screen{1920.0, 1080.0};
  double target_w = 50.0;
  double lifetime_s = 3.5;
  double initial_rate = 2.0;  // targets/s
  double min_rate = 0.4;
  double max_rate = 4.0;
  double adapt_gain = 0.1;    // log-rate step scale
  double min_remaining_s = 0.6;  // targets closer to expiry are skipped when others are live
  double target_success = 0.92;
};

struct RateSample {
  double t_s = 0.0;
  double rate = 0.0;
};

struct TargetEvent {
  double t_s = 0.0;
  bool hit = false;
};

struct AimGameResult {
  std::vector<TrialTrace> traces;  // one per click attempt, in time order
  std::vector<RateSample> rate_history;
  std::vector<TargetEvent> events;  // hit or expiry per target
  double duration_s = 0.0;
  double achieved_rate = 0.0;       // time-weighted mean spawn rate
  int hits = 0;
  int expired = 0;

  /// Fraction of targets hit among events in the final `window_s` seconds.
  double success_rate(double window_s) const;
};

/// Adaptive aim trainer: targets spawn at random screen positions at the
/// current rate and persist for lifetime_s; the user goes for the oldest
/// live target that still has min_remaining_s to live. The rate moves multiplicatively toward target_success.
AimGameResult simulate_aim_game(const ArmModel& model, const fusion::VirtualConfig& cfg,
                                const AimGameOptions& options, std::uint64_t seed);

/// Same game on an existing simulator, starting at its current clock. Event
/// and rate times are relative to that start.
AimGameResult play_aim_game(Simulator& sim, const AimGameOptions& options, std::uint64_t seed);

/// Mean path deviation rate over completed, successful aim-game trials that
/// started at least 2W from their target.
double mean_pdr(const AimGameResult& game,
                pointing::PdrNumerator numerator = pointing::PdrNumerator::mae);

struct RegressionResult {
  double slope_dx = 0.0;
  double slope_dy = 0.0;
  double intercept_dx = 0.0;
  double intercept_dy = 0.0;
  double r2_dx = 0.0;
  double r2_dy = 0.0;
  std::size_t n_samples = 0;
};

/// Per-sample regression of rear readings on front readings, per axis.
RegressionResult regress_rear_on_front(std::span<const fusion::DualSample> samples);

/// Plays `duration_s` (>= 60) of aim game at the model's p_ref and regresses
/// the raw streams. Throws DegenerateError when a stream has no variance.
RegressionResult regression_check(const ArmModel& model, double duration_s, std::uint64_t seed = 1);

}  // namespace vmouse::user
