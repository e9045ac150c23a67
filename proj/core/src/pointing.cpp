// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/pointing.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vmouse/error.hpp"
#include "vmouse/stats.hpp"

namespace vmouse::pointing {

void TaskConfig::validate() const {
  if (!(W > 0.0) || !(D > W) || !std::isfinite(D)) {
    throw ValidationError("task requires D > W > 0");
  }
  if (n_targets < 3) throw ValidationError("task requires at least three targets");
}

double TaskConfig::id() const { return std::log2(D / W + 1.0); }

std::vector<int> TaskConfig::order() const {
  validate();
  const int step = (n_targets + 1) / 2;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_targets) + 1);
  for (int i = 0; i <= n_targets; ++i) out.push_back((i * step) % n_targets);
  return out;
}

TaskConfig TaskConfig::parse(const std::string& text) {
  TaskConfig cfg;
  bool have_d = false, have_w = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("task spec item '" + item + "' lacks '='");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("task spec value in '" + item + "' is not a number");
    }
    if (key == "D") {
      cfg.D = value;
      have_d = true;
    } else if (key == "W") {
      cfg.W = value;
      have_w = true;
    } else if (key == "N") {
      cfg.n_targets = static_cast<int>(value);
    } else {
      throw ValidationError("unknown task spec key '" + key + "'");
    }
  }
  if (!have_d || !have_w) throw ValidationError("task spec needs both D and W");
  cfg.validate();
  return cfg;
}

std::vector<Vec2> task_geometry(const TaskConfig& cfg, Vec2 center) {
  cfg.validate();
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(cfg.n_targets));
  const double radius = cfg.D / 2.0;
  for (int i = 0; i < cfg.n_targets; ++i) {
    const double a = 2.0 * kinematics::kPi * i / cfg.n_targets;
    out.push_back(center + radius * Vec2{std::sin(a), std::cos(a)});
  }
  return out;
}

std::vector<std::pair<Vec2, Vec2>> trial_targets(const TaskConfig& cfg, Vec2 center) {
  const auto centers = task_geometry(cfg, center);
  const auto order = cfg.order();
  std::vector<std::pair<Vec2, Vec2>> out;
  for (std::size_t i = 1; i < order.size(); ++i) {
    out.emplace_back(centers[static_cast<std::size_t>(order[i - 1])],
                     centers[static_cast<std::size_t>(order[i])]);
  }
  return out;
}

std::string to_string(OutlierReason reason) {
  switch (reason) {
    case OutlierReason::short_movement:
      return "short_movement";
    case OutlierReason::off_target:
      return "off_target";
    case OutlierReason::too_slow:
      return "too_slow";
  }
  return "unknown";
}

ScreenResult screen_outliers(std::span<const Trial> trials, const TaskConfig& cfg) {
  cfg.validate();
  const double max_mt = cfg.id();
  ScreenResult out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    const Vec2 start = t.start();
    if ((t.click - start).norm() < cfg.D / 2.0) {
      out.removed.push_back({i, OutlierReason::short_movement, t});
    } else if ((start - t.prev_target).norm() > 2.0 * cfg.W ||
               (t.click - t.target).norm() > 2.0 * cfg.W) {
      out.removed.push_back({i, OutlierReason::off_target, t});
    } else if (t.mt_s > max_mt) {
      out.removed.push_back({i, OutlierReason::too_slow, t});
    } else {
      out.kept.push_back(t);
    }
  }
  return out;
}

PathDeviation path_deviation(std::span<const Vec2> points, Vec2 start, Vec2 end,
                             PdrNumerator numerator) {
  if (points.empty()) throw EmptyInputError("path deviation of an empty path");
  const Vec2 axis = end - start;
  const double length = axis.norm();
  if (!(length > 0.0)) throw DegenerateError("ideal path has zero length");
  const Vec2 unit = (1.0 / length) * axis;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& p : points) {
    const Vec2 rel = p - start;
    const double e = rel.x * unit.y - rel.y * unit.x;  // signed perpendicular distance
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(points.size());
  PathDeviation out;
  out.mae = abs_sum / n;
  out.rmse = std::sqrt(sq_sum / n);
  out.ideal_length = length;
  out.pdr = (numerator == PdrNumerator::mae ? out.mae : out.rmse) / length;
  return out;
}

std::size_t largest_submovement_start(std::span<const TimedPoint> path, double threshold) {
  if (path.size() < 2) return 0;
  std::vector<double> speed(path.size() - 1);
  double peak = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double d = (path[i + 1].pos - path[i].pos).norm();
    const double dt = path[i + 1].t_s - path[i].t_s;
    speed[i] = dt > 0.0 ? d / dt : d;
    peak = std::max(peak, speed[i]);
  }
  if (!(peak > 0.0)) return 0;
  const double cut = threshold * peak;
  std::size_t best_start = 0;
  double best_amp = -1.0;
  std::size_t i = 0;
  while (i < speed.size()) {
    if (speed[i] <= cut) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < speed.size() && speed[j + 1] > cut) ++j;
    const double amp = (path[j + 1].pos - path[i].pos).norm();
    if (amp > best_amp) {
      best_amp = amp;
      best_start = i;
    }
    i = j + 1;
  }
  return best_start;
}

PathDeviation path_deviation(const Trial& trial, PdrNumerator numerator) {
  if (trial.path.empty()) throw EmptyInputError("trial has no cursor path");
  const std::size_t s = largest_submovement_start(trial.path);
  std::vector<Vec2> pts;
  pts.reserve(trial.path.size());
  for (const auto& tp : trial.path) pts.push_back(tp.pos);
  return path_deviation(pts, trial.path[s].pos, trial.click, numerator);
}

SessionSummary summarize_session(std::span<const Trial> trials, const TaskConfig& cfg,
                                 PdrNumerator numerator) {
  const auto screened = screen_outliers(trials, cfg);
  const auto& kept = screened.kept;
  if (kept.size() < 2) {
    throw DegenerateError("session has fewer than two usable trials after screening");
  }
  SessionSummary s;
  s.D = cfg.D;
  s.W = cfg.W;
  s.n_trials = static_cast<int>(kept.size());
  s.n_removed = static_cast<int>(screened.removed.size());

  Vec2 mean_off;
  for (const auto& t : kept) mean_off += t.click - t.target;
  const auto n = static_cast<double>(kept.size());
  mean_off = (1.0 / n) * mean_off;
  double ss = 0.0, dist = 0.0, mt = 0.0;
  for (const auto& t : kept) {
    const Vec2 d = (t.click - t.target) - mean_off;
    ss += d.dot(d);
    dist += (t.click - t.start()).norm();
    mt += t.mt_s;
    if (!t.success) ++s.n_errors;
  }
  s.SD_xy = std::sqrt(ss / (n - 1.0));
  if (!(s.SD_xy > 0.0)) throw DegenerateError("all endpoints coincide; effective width is zero");
  s.W_e = kEffectiveWidthFactor * s.SD_xy;
  s.D_e = dist / n;
  s.MT_mean = mt / n;
  s.ID_e = std::log2(s.D_e / s.W_e + 1.0);
  if (!(s.MT_mean > 0.0)) throw DegenerateError("mean movement time is zero");
  s.TP = s.ID_e / s.MT_mean;

  int counted = 0;
  for (const auto& t : kept) {
    try {
      const auto dev = path_deviation(t, numerator);
      s.MAE += dev.mae;
      s.RMSE += dev.rmse;
      s.PDR += dev.pdr;
      ++counted;
    } catch (const std::exception&) {
      // trials without a usable path do not contribute to path metrics
    }
  }
  if (counted > 0) {
    s.MAE /= counted;
    s.RMSE /= counted;
    s.PDR /= counted;
  }
  return s;
}

FittsFit fitts_fit(std::span<const SessionSummary> sessions) {
  if (sessions.size() < 3) throw ValidationError("Fitts regression needs at least three sessions");
  std::vector<double> id, mt;
  for (const auto& s : sessions) {
    id.push_back(s.ID_e);
    mt.push_back(s.MT_mean);
  }
  try {
    const auto fit = stats::linear_fit(id, mt);
    return {fit.intercept, fit.slope, fit.r2};
  } catch (const DegenerateError&) {
    throw DegenerateError("Fitts regression is rank deficient: all ID_e coincide");
  }
}

BlockSummary summarize_block(double p, std::vector<SessionSummary> sessions) {
  if (sessions.empty()) throw EmptyInputError("block has no sessions");
  BlockSummary b;
  b.p = p;
  std::vector<double> tp, mae, pdr;
  for (const auto& s : sessions) {
    tp.push_back(s.TP);
    mae.push_back(s.MAE);
    pdr.push_back(s.PDR);
  }
  b.TP_mean = stats::mean(tp);
  b.TP_ci95 = tp.size() >= 2 ? stats::mean_ci(tp).half_width : 0.0;
  b.MAE_mean = stats::mean(mae);
  b.PDR_mean = stats::mean(pdr);
  if (sessions.size() >= 3) {
    try {
      b.fit = fitts_fit(sessions);
      b.fit_valid = true;
    } catch (const DegenerateError&) {
      b.fit_valid = false;
    }
  }
  b.sessions = std::move(sessions);
  return b;
}

void write_session_csv_header(std::ostream& os) {
  os << "D,W,D_e,SD_xy,W_e,ID_e,MT_mean,TP,MAE,RMSE,PDR,n_trials,n_removed,n_errors\n";
}

void write_session_csv_row(std::ostream& os, const SessionSummary& s) {
  const auto flags = os.flags();
  os << std::setprecision(12) << s.D << ',' << s.W << ',' << s.D_e << ',' << s.SD_xy << ','
     << s.W_e << ',' << s.ID_e << ',' << s.MT_mean << ',' << s.TP << ',' << s.MAE << ','
     << s.RMSE << ',' << s.PDR << ',' << s.n_trials << ',' << s.n_removed << ',' << s.n_errors
     << '\n';
  os.flags(flags);
}

void write_block_csv(std::ostream& os, std::span<const BlockSummary> blocks) {
  const auto flags = os.flags();
  os << "p,n_sessions,TP_mean,TP_ci95,MAE_mean,PDR_mean,fit_a,fit_b,fit_r2\n";
  os << std::setprecision(10);
  for (const auto& b : blocks) {
    os << b.p << ',' << b.sessions.size() << ',' << b.TP_mean << ',' << b.TP_ci95 << ','
       << b.MAE_mean << ',' << b.PDR_mean << ',';
    if (b.fit_valid) {
      os << b.fit.a << ',' << b.fit.b << ',' << b.fit.r2 << '\n';
    } else {
      os << ",,\n";
    }
  }
  os.flags(flags);
}

}  // namespace vmouse::pointing
