// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/synthetic_user.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "vmouse/error.hpp"
#include "vmouse/stats.hpp"

namespace vmouse::user {

namespace {

using kinematics::SensorOffset;

constexpr double kSampleRateHz = kinematics::kDefaultSampleRateHz;
constexpr std::uint64_t kSamplePeriodUs = 2000;
constexpr double kNoiseReferenceS = 0.1;

double min_jerk(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

struct Submovement {
  double t0 = 0.0;
  double duration = 0.0;
  Vec2 planned;
  Vec2 executed;
  double wrist_gain = 1.0;

  double progress(double t) const { return min_jerk((t - t0) / duration); }
};

struct Draw {
  double along = 0.0;
  double lateral = 0.0;
  double wrist = 0.0;
};

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void ArmModel::validate() const {
  require(wrist_amp >= 0.0 && wrist_amp <= kMaxWristDeviation, "wrist_amp must lie in [0, 0.44] rad");
  require(wrist_span_mm > 0.0, "wrist_span_mm must be positive");
  require(wrist_gain_sd >= 0.0, "wrist_gain_sd must be non-negative");
  require(wrist_relax_per_mm >= 0.0 && wrist_relax_per_mm < 1.0, "wrist_relax_per_mm must lie in [0, 1)");
  require(p_ref >= 0.0 && p_ref <= 1.0, "p_ref must lie in [0, 1]");
  require(noise_scale >= 0.0 && lateral_noise_ratio >= 0.0, "noise parameters must be non-negative");
  require(correction_interval > 0.0, "correction_interval must be positive");
  require(feedback_delay_s >= 0.0, "feedback_delay_s must be non-negative");
  require(ballistic_frac >= 0.0 && ballistic_frac <= 1.0, "ballistic_frac must lie in [0, 1]");
  require(reaction_s >= 0.0 && dwell_s >= 0.0, "reaction and dwell times must be non-negative");
  require(submove_base_s > 0.0 && submove_sqrt_s >= 0.0, "sub-movement timing must be positive");
  require(tolerance_frac > 0.0 && perception_frac >= 0.0, "tolerance must be positive");
  require(r_mm > 0.0, "r_mm must be positive");
  if (pivot) require(pivot->norm() > r_mm, "pivot must lie outside the device");
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the three words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

pointing::Trial to_trial(const TrialTrace& trace, Vec2 prev_target) {
  pointing::Trial t;
  t.prev_target = prev_target;
  t.target = trace.target;
  t.click = trace.click;
  t.path = trace.cursor;
  t.mt_s = trace.mt_s;
  t.success = trace.success;
  return t;
}

Simulator::Simulator(const ArmModel& model, const fusion::VirtualConfig& cfg, Vec2 cursor)
    : model_(model), pipeline_(cfg), cursor_(cursor) {
  model_.validate();
  pose_ = Pose::make(0.0, -0.5 * model_.r_mm, 0.0);  // device center at the origin
  home_ = kinematics::sensor_world_position(pose_, {model_.p_ref, model_.r_mm});
  if (model_.pivot) pivot_world_ = *model_.pivot;
}

Simulator::StepOut Simulator::step(Vec2 d_px, double wrist_gain, bool button) {
  const double mm_per_px = kinematics::kMmPerInch / pipeline_.config().user_cpi();
  const SensorOffset ref{model_.p_ref, model_.r_mm};
  const Vec2 ref_now = kinematics::sensor_world_position(pose_, ref);
  // The hand moves the reference point so that it would read exactly d_px.
  const Vec2 world = (d_px.x * mm_per_px) * kinematics::lateral_axis(pose_.theta) +
                     (d_px.y * mm_per_px) * kinematics::forward_axis(pose_.theta);
  const Vec2 ref_next = ref_now + world;

  const double coupling = model_.wrist_amp / model_.wrist_span_mm;
  psi_ -= coupling * wrist_gain * world.x;
  const double psi_home = -coupling * (ref_next.x - home_.x);
  psi_ += model_.wrist_relax_per_mm * world.norm() * (psi_home - psi_);
  psi_ = std::clamp(psi_, -kMaxWristDeviation, kMaxWristDeviation);

  double theta = psi_;
  if (model_.pivot) {
    const Vec2 center =
        ref_next + ((model_.p_ref - 0.5) * model_.r_mm) * kinematics::forward_axis(pose_.theta);
    theta -= std::atan2(center.x - pivot_world_.x, center.y - pivot_world_.y);
  }
  const Pose next = kinematics::pose_from_sensor_point(ref_next, theta, ref);

  StepOut out;
  t_us_ += kSamplePeriodUs;
  out.sample.t_us = t_us_;
  out.sample.btn_left = button;
  const auto f = front_q_.push(
      kinematics::ideal_sensor_delta(pose_, next, {0.0, model_.r_mm}, kinematics::kBaseCpi));
  const auto r = rear_q_.push(
      kinematics::ideal_sensor_delta(pose_, next, {1.0, model_.r_mm}, kinematics::kBaseCpi));
  out.sample.front = {static_cast<double>(f.mx), static_cast<double>(f.my)};
  out.sample.rear = {static_cast<double>(r.mx), static_cast<double>(r.my)};
  out.delta = pipeline_.process(out.sample);
  cursor_ += Vec2{static_cast<double>(out.delta.mx), static_cast<double>(out.delta.my)};
  pose_ = next;
  if (sink_) sink_(out.sample, out.delta);
  return out;
}

void Simulator::idle(double seconds) {
  const auto n = static_cast<long>(std::llround(seconds * kSampleRateHz));
  for (long i = 0; i < n; ++i) step({}, 1.0, false);
}

TrialTrace Simulator::run_trial(Vec2 target, double W, std::uint64_t seed,
                                std::optional<double> deadline_s) {
  if (!(W > 0.0)) throw ValidationError("target width must be positive");
  const double dt = 1.0 / kSampleRateHz;
  const double t_begin = time_s();

  TrialTrace tr;
  tr.t_start_s = t_begin;
  tr.start = cursor_;
  tr.target = target;
  tr.W = W;
  tr.poses.push_back({0.0, pose_});
  tr.cursor.push_back({0.0, cursor_});

  // Every draw happens up front so the trial's randomness does not depend on p.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec2 perceived =
      target + (model_.perception_frac * W) * Vec2{normal(rng), normal(rng)};
  std::array<Draw, kMaxSubmovements> draws{};
  for (auto& d : draws) {
    d.along = normal(rng);
    d.lateral = normal(rng);
    d.wrist = normal(rng);
  }

  std::vector<Submovement> subs;
  const double tol = model_.tolerance_frac * W;
  const auto delay_steps = static_cast<std::size_t>(std::llround(model_.feedback_delay_s * kSampleRateHz));
  double t = 0.0;
  double next_check = model_.reaction_s;
  std::optional<double> click_at;
  Vec2 executed_prev;

  auto remaining_plan = [&](double at) {
    Vec2 rem;
    for (const auto& s : subs) rem += (1.0 - s.progress(at)) * s.planned;
    return rem;
  };
  auto executed_at = [&](double at) {
    Vec2 e;
    for (const auto& s : subs) e += s.progress(at) * s.executed;
    return e;
  };
  auto all_done = [&](double at) {
    return std::all_of(subs.begin(), subs.end(),
                       [&](const Submovement& s) { return at >= s.t0 + s.duration; });
  };

  bool pressed = false;
  while (!pressed) {
    if (!click_at && t + 1e-9 >= model_.reaction_s) {
      const bool tick = t + 1e-9 >= next_check;
      if (tick) next_check += model_.correction_interval;
      // Visual feedback lags; the user extrapolates with the plan as of then.
      const std::size_t lag = std::min(delay_steps, tr.cursor.size() - 1);
      const Vec2 seen = tr.cursor[tr.cursor.size() - 1 - lag].pos;
      const Vec2 err = perceived - (seen + remaining_plan(t - static_cast<double>(lag) * dt));
      const double amp = err.norm();
      if (amp > tol) {
        const bool committed =
            !subs.empty() && t < subs.back().t0 + model_.ballistic_frac * subs.back().duration;
        if (tick && !committed) {
          if (subs.size() >= static_cast<std::size_t>(kMaxSubmovements)) {
            tr.completed = false;
            click_at = t;
          } else {
            const Draw& d = draws[subs.size()];
            const Vec2 u = (1.0 / amp) * err;
            const Vec2 n{-u.y, u.x};
            Submovement s;
            s.t0 = t;
            s.duration = model_.submove_base_s + model_.submove_sqrt_s * std::sqrt(amp / W);
            // Slower sub-movements are proportionally more precise.
            const double sd = model_.noise_scale * amp * kNoiseReferenceS / s.duration;
            s.planned = err;
            s.executed = err + (sd * d.along) * u + (sd * model_.lateral_noise_ratio * d.lateral) * n;
            s.wrist_gain = std::max(0.0, 1.0 + model_.wrist_gain_sd * d.wrist);
            subs.push_back(s);
          }
        }
      } else if (all_done(t)) {
        click_at = t + model_.dwell_s;
      }
    }
    if (deadline_s && t_begin + t >= *deadline_s) {
      tr.completed = false;
      break;
    }
    pressed = click_at && t + 1e-9 >= *click_at;
    t += dt;
    const Vec2 executed_now = executed_at(t);
    const double gain = subs.empty() ? 1.0 : subs.back().wrist_gain;
    tr.samples.push_back(step(executed_now - executed_prev, gain, pressed).sample);
    executed_prev = executed_now;
    tr.poses.push_back({t, pose_});
    tr.cursor.push_back({t, cursor_});
  }
  tr.n_submovements = static_cast<int>(subs.size());
  tr.click = cursor_;
  tr.mt_s = t;
  tr.success = pressed && (tr.click - target).norm() <= W / 2.0;
  return tr;
}

TrialTrace simulate_trial(const ArmModel& model, Vec2 start, Vec2 target, double W,
                          const fusion::VirtualConfig& cfg, std::uint64_t seed) {
  Simulator sim(model, cfg, start);
  return sim.run_trial(target, W, seed);
}

SessionTrace simulate_session(const ArmModel& model, const fusion::VirtualConfig& cfg,
                              const pointing::TaskConfig& task, std::uint64_t seed,
                              std::uint64_t session_index, Vec2 center) {
  const auto pairs = pointing::trial_targets(task, center);
  SessionTrace out;
  out.task = task;
  Simulator sim(model, cfg, pairs.front().first);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto trace = sim.run_trial(pairs[i].second, task.W, trial_seed(seed, session_index, i));
    out.trials.push_back(to_trial(trace, pairs[i].first));
    out.traces.push_back(std::move(trace));
  }
  return out;
}

std::vector<pointing::TaskConfig> study_tasks() {
  std::vector<pointing::TaskConfig> out;
  for (double d : {300.0, 900.0}) {
    for (double w : {20.0, 50.0, 120.0}) out.push_back({d, w, pointing::kTargetsPerSession});
  }
  return out;
}

std::vector<pointing::SessionSummary> simulate_block(const ArmModel& model,
                                                     const fusion::VirtualConfig& cfg,
                                                     int n_sessions, std::uint64_t seed,
                                                     pointing::PdrNumerator numerator) {
  const auto tasks = study_tasks();
  std::vector<pointing::SessionSummary> out;
  for (int s = 0; s < n_sessions; ++s) {
    const auto& task = tasks[static_cast<std::size_t>(s) % tasks.size()];
    const auto session = simulate_session(model, cfg, task, seed, static_cast<std::uint64_t>(s));
    try {
      out.push_back(pointing::summarize_session(session.trials, task, numerator));
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

RegressionResult regress_rear_on_front(std::span<const fusion::DualSample> samples) {
  std::vector<double> fx, fy, rx, ry;
  fx.reserve(samples.size());
  fy.reserve(samples.size());
  rx.reserve(samples.size());
  ry.reserve(samples.size());
  for (const auto& s : samples) {
    fx.push_back(s.front.dx);
    fy.push_back(s.front.dy);
    rx.push_back(s.rear.dx);
    ry.push_back(s.rear.dy);
  }
  const auto ax = stats::linear_fit(fx, rx);
  const auto ay = stats::linear_fit(fy, ry);
  RegressionResult r;
  r.slope_dx = ax.slope;
  r.intercept_dx = ax.intercept;
  r.r2_dx = ax.r2;
  r.slope_dy = ay.slope;
  r.intercept_dy = ay.intercept;
  r.r2_dy = ay.r2;
  r.n_samples = samples.size();
  return r;
}

RegressionResult regression_check(const ArmModel& model, double duration_s, std::uint64_t seed) {
  if (!(duration_s >= 60.0)) throw ValidationError("regression check needs at least 60 s of play");
  const int p = static_cast<int>(std::lround(model.p_ref * 100.0));
  AimGameOptions options;
  options.duration_s = duration_s;
  const auto game =
      simulate_aim_game(model, fusion::VirtualConfig::make(p, kDefaultUserCpi), options, seed);
  std::vector<fusion::DualSample> all;
  for (const auto& tr : game.traces) all.insert(all.end(), tr.samples.begin(), tr.samples.end());
  if (all.size() < 2) throw DegenerateError("aim game produced no samples");
  return regress_rear_on_front(all);
}

}  // namespace vmouse::user
