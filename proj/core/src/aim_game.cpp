// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "vmouse/error.hpp"
#include "vmouse/synthetic_user.hpp"

namespace vmouse::user {

namespace {

struct LiveTarget {
  int id = 0;
  double spawn_s = 0.0;
  Vec2 pos;
};

void validate(const AimGameOptions& o) {
  if (!(o.duration_s > 0.0)) throw ValidationError("aim game duration must be positive");
  if (!(o.target_w > 0.0) || !(o.screen.x > 2.0 * o.target_w) || !(o.screen.y > 2.0 * o.target_w)) {
    throw ValidationError("aim game targets must fit on the screen");
  }
  if (!(o.lifetime_s > 0.0)) throw ValidationError("target lifetime must be positive");
  if (!(o.min_rate > 0.0) || !(o.min_rate <= o.initial_rate) || !(o.initial_rate <= o.max_rate)) {
    throw ValidationError("spawn rates must satisfy 0 < min <= initial <= max");
  }
  if (!(o.target_success > 0.0 && o.target_success < 1.0)) {
    throw ValidationError("target success rate must lie in (0, 1)");
  }
  if (!(o.adapt_gain >= 0.0)) throw ValidationError("adapt_gain must be non-negative");
}

}  // namespace

double AimGameResult::success_rate(double window_s) const {
  int hit = 0, total = 0;
  for (const auto& e : events) {
    if (e.t_s < duration_s - window_s) continue;
    ++total;
    if (e.hit) ++hit;
  }
  return total > 0 ? static_cast<double>(hit) / total : 0.0;
}

AimGameResult simulate_aim_game(const ArmModel& model, const fusion::VirtualConfig& cfg,
                                const AimGameOptions& options, std::uint64_t seed) {
  validate(options);
  Simulator sim(model, cfg, 0.5 * options.screen);
  return play_aim_game(sim, options, seed);
}

AimGameResult play_aim_game(Simulator& sim, const AimGameOptions& options, std::uint64_t seed) {
  validate(options);
  AimGameResult result;
  result.duration_s = options.duration_s;
  const double t0 = sim.time_s();
  auto clock = [&] { return sim.time_s() - t0; };
  std::mt19937_64 rng(trial_seed(seed, 0x61696d));
  std::uniform_real_distribution<double> ux(options.target_w, options.screen.x - options.target_w);
  std::uniform_real_distribution<double> uy(options.target_w, options.screen.y - options.target_w);

  std::deque<LiveTarget> live;
  double rate = options.initial_rate;
  double next_spawn = 0.0;
  int next_id = 0;
  result.rate_history.push_back({0.0, rate});

  const double up = std::exp(options.adapt_gain * (1.0 - options.target_success));
  const double down = std::exp(-options.adapt_gain * options.target_success);
  auto set_rate = [&](double t, double factor) {
    rate = std::clamp(rate * factor, options.min_rate, options.max_rate);
    result.rate_history.push_back({t, rate});
  };

  // Spawns and expiries up to `until`, in time order. Live targets expire
  // oldest first because they spawn in order.
  auto advance = [&](double until) {
    while (true) {
      const double expiry = live.empty() ? INFINITY : live.front().spawn_s + options.lifetime_s;
      const double next = std::min(next_spawn, expiry);
      if (next > until || next >= options.duration_s) break;
      if (next_spawn <= expiry) {
        live.push_back({next_id++, next_spawn, {ux(rng), uy(rng)}});
        next_spawn += 1.0 / rate;
      } else {
        live.pop_front();
        result.events.push_back({expiry, false});
        ++result.expired;
        set_rate(expiry, down);
      }
    }
  };

  std::uint64_t attempt = 0;
  while (clock() < options.duration_s) {
    advance(clock());
    if (live.empty()) {
      const double wait = std::min(next_spawn, options.duration_s) - clock();
      sim.idle(std::max(wait, 1.0 / kinematics::kDefaultSampleRateHz));
      continue;
    }
    // Oldest target that can still plausibly be reached, else the oldest.
    const double now = clock();
    auto pick = std::find_if(live.begin(), live.end(), [&](const LiveTarget& l) {
      return l.spawn_s + options.lifetime_s - now >= options.min_remaining_s;
    });
    const LiveTarget target = pick != live.end() ? *pick : live.front();
    const double deadline = std::min(target.spawn_s + options.lifetime_s, options.duration_s);
    auto trace = sim.run_trial(target.pos, options.target_w, trial_seed(seed, 1, attempt++),
                               t0 + deadline);
    const double t_end = clock();
    advance(t_end - 1e-9);
    if (trace.success) {
      const auto it = std::find_if(live.begin(), live.end(),
                                   [&](const LiveTarget& l) { return l.id == target.id; });
      if (it != live.end()) {
        live.erase(it);
        result.events.push_back({t_end, true});
        ++result.hits;
        set_rate(t_end, up);
      }
    }
    result.traces.push_back(std::move(trace));
  }

  double weighted = 0.0;
  for (std::size_t i = 0; i < result.rate_history.size(); ++i) {
    const double a = std::min(result.rate_history[i].t_s, options.duration_s);
    const double b = i + 1 < result.rate_history.size()
                          ? std::min(result.rate_history[i + 1].t_s, options.duration_s)
                          : options.duration_s;
    weighted += result.rate_history[i].rate * (b - a);
  }
  result.achieved_rate = weighted / options.duration_s;
  return result;
}

double mean_pdr(const AimGameResult& game, pointing::PdrNumerator numerator) {
  double total = 0.0;
  int n = 0;
  for (const auto& tr : game.traces) {
    if (!tr.completed || !tr.success) continue;
    if ((tr.target - tr.start).norm() < 2.0 * tr.W) continue;  // retries after a miss
    try {
      total += pointing::path_deviation(to_trial(tr, tr.start), numerator).pdr;
      ++n;
    } catch (const std::exception&) {
    }
  }
  if (n == 0) throw DegenerateError("no usable aim-game trials for path deviation");
  return total / n;
}

}  // namespace vmouse::user
