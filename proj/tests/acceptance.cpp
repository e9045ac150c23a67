// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

// Headless acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hand_session.hpp"
#include "service.hpp"
#include "test_util.hpp"
#include "vmouse/calibration.hpp"
#include "vmouse/device_io.hpp"
#include "vmouse/emulator.hpp"
#include "vmouse/fusion.hpp"
#include "vmouse/gp.hpp"
#include "vmouse/pointing.hpp"
#include "vmouse/stats.hpp"
#include "vmouse/synthetic_user.hpp"
#include "vmouse/trajectory_lab.hpp"

namespace {

using namespace vmouse;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<int> kAllPositions{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto still = lab::lemniscate_plan(700.0, false);
  const auto moving = lab::lemniscate_plan(700.0, true);
  const auto a = lab::run_experiment(still, kAllPositions);
  const auto b = lab::run_experiment(moving, kAllPositions);
  double worst = 0.0;
  for (const auto& row : a.positions) worst = std::max(worst, row.discrepancy_pct / 100.0);
  const double secs = seconds_since(t0);
  o.check(worst <= 1e-9, fmt("translate-only relative discrepancy %.3g > 1e-9", worst));
  o.check(b.mean_discrepancy_pct < 0.1, fmt("rotating mean discrepancy %.4f%% >= 0.1%%", b.mean_discrepancy_pct));
  o.check(secs < 5.0, fmt("runtime %.2f s", secs));
  o.note(fmt("translate %.2g rel, rotate %.5f%%, %.2f s", worst, b.mean_discrepancy_pct, secs));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto r = lab::run_experiment(lab::lemniscate_plan(700.0, true), std::vector<int>{20, 80});
  const double ratio = r.fused_ratio_20_80.value_or(0.0);
  o.check(ratio >= 1.03 && ratio <= 1.10, fmt("ratio %.4f outside [1.03, 1.10]", ratio));
  o.note(fmt("L(20%%)/L(80%%) = %.4f", ratio));
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  fusion::CarryQuantizer q;
  double sx = 0, sy = 0;
  std::int64_t rx = 0, ry = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const fusion::CountVec v{u(rng), u(rng)};
    sx += v.dx;
    sy += v.dy;
    const auto d = q.push(v);
    rx += d.mx;
    ry += d.my;
    worst = std::max({worst, std::abs(static_cast<double>(rx) - std::trunc(sx)),
                      std::abs(static_cast<double>(ry) - std::trunc(sy))});
  }
  o.check(worst <= 1.0, fmt("max |sum reports - trunc(sum)| = %.3g", worst));
  const std::vector<fusion::CountVec> hand{{0.6667, 0.0}, {0.6667, 0.0}, {0.6667, 0.0}};
  const auto rep = fusion::quantize_carry(hand);
  const bool exact = rep.size() == 3 && rep[0].mx == 0 && rep[1].mx == 1 && rep[2].mx == 1;
  o.check(exact, "hand trace is not [0,1,1]");
  o.note(fmt("max deviation %.0f over 1e6 samples, hand trace [0,1,1]", worst));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto r = user::regression_check(user::ArmModel{}, 60.0, 1);
  o.check(r.slope_dx >= 0.4 && r.slope_dx <= 0.7, fmt("dX slope %.3f", r.slope_dx));
  o.check(r.slope_dy >= 0.98 && r.slope_dy <= 1.02, fmt("dY slope %.3f", r.slope_dy));
  o.check(std::abs(r.intercept_dx) < 0.5 && std::abs(r.intercept_dy) < 0.5,
          fmt("intercepts %.3f, %.3f", r.intercept_dx, r.intercept_dy));
  o.note(fmt("slopes dX %.3f dY %.3f", r.slope_dx, r.slope_dy));
  o.note(fmt("intercepts %.3f %.3f counts", r.intercept_dx, r.intercept_dy));
  return o;
}

// Rank-counting oracle, independent of the library.
double friedman_oracle(const std::vector<std::vector<double>>& m) {
  const double n = static_cast<double>(m.size());
  const double k = static_cast<double>(m[0].size());
  std::vector<double> rsum(m[0].size(), 0.0);
  for (const auto& row : m) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      double less = 0, equal = 0;
      for (double v : row) {
        less += v < row[j];
        equal += v == row[j];
      }
      rsum[j] += less + (equal + 1.0) / 2.0;
    }
  }
  double ss = 0.0;
  for (double r : rsum) ss += r * r;
  return 12.0 / (n * k * (k + 1.0)) * ss - 3.0 * n * (k + 1.0);
}

Outcome criterion5() {
  Outcome o;
  namespace t = vmouse::testing;
  const auto trials = t::hand_session();
  const auto s = pointing::summarize_session(trials, t::hand_task());
  o.check(std::abs(s.SD_xy - t::kHandSdXy) <= 1e-6, fmt("SD_xy %.9f", s.SD_xy));
  o.check(std::abs(s.W_e - t::kHandWe) <= 1e-6 && std::abs(s.W_e - 4.133 * s.SD_xy) <= 1e-9,
          fmt("W_e %.9f", s.W_e));
  o.check(std::abs(s.ID_e - t::kHandIde) <= 1e-6 &&
              std::abs(s.ID_e - std::log2(s.D_e / s.W_e + 1.0)) <= 1e-9,
          fmt("ID_e %.9f", s.ID_e));
  o.check(std::abs(s.TP - t::kHandTp) <= 1e-6, fmt("TP %.9f", s.TP));
  for (const auto& tr : trials) {
    const auto d = pointing::path_deviation(tr);
    if (d.mae > d.rmse + 1e-12) o.check(false, "MAE > RMSE on a trial");
  }
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(0, 20);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::vector<double>> m(18, std::vector<double>(7));
    for (auto& row : m)
      for (auto& v : row) v = u(rng);
    worst = std::max(worst, std::abs(stats::friedman_test(m).chi2 - friedman_oracle(m)));
  }
  o.check(worst <= 1e-9, fmt("Friedman deviation %.3g", worst));
  o.note(fmt("TP %.6f bits/s, Friedman max dev %.2g", s.TP, worst));
  return o;
}

user::ArmModel model_with(double p_ref) {
  user::ArmModel m;
  m.p_ref = p_ref;
  return m;
}

struct PositionSweep {
  std::vector<int> p;
  std::vector<double> mae, tp;
};

PositionSweep sweep(double p_ref, std::uint64_t seed) {
  PositionSweep s;
  s.p = {0, 20, 40, 50, 60, 80, 100};
  const auto model = model_with(p_ref);
  for (int p : s.p) {
    // 7 sessions x 15 trials = 105 trials per position
    const auto sessions = user::simulate_block(model, fusion::VirtualConfig::make(p, 800), 7, seed);
    std::vector<double> mae, tp;
    for (const auto& x : sessions) {
      mae.push_back(x.MAE);
      tp.push_back(x.TP);
    }
    s.mae.push_back(stats::mean(mae));
    s.tp.push_back(stats::mean(tp));
  }
  return s;
}

bool unimodal(const std::vector<double>& v) {
  const auto m = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  for (std::size_t i = 1; i <= m; ++i)
    if (v[i] > v[i - 1]) return false;
  for (std::size_t i = m + 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double p_ref : {0.35, 0.50, 0.65}) {
    const auto s = sweep(p_ref, 11);
    const double mn = *std::min_element(s.mae.begin(), s.mae.end());
    const int best_tp = s.p[std::max_element(s.tp.begin(), s.tp.end()) - s.tp.begin()];
    const std::string tag = fmt("p_ref %.2f: ", p_ref);
    o.check(unimodal(s.mae), tag + "MAE not unimodal");
    o.check(s.mae.front() >= 1.15 * mn && s.mae.back() >= 1.15 * mn,
            tag + fmt("extremes %.1f%%/%.1f%% above min", 100 * (s.mae.front() / mn - 1),
                      100 * (s.mae.back() / mn - 1)));
    o.check(std::abs(best_tp - 100.0 * p_ref) <= 10.0 + 1e-9, tag + fmt("TP peak at %.0f%%", best_tp));
    o.note(tag + fmt("extremes +%.0f%%/+%.0f%%, TP peak %.0f%%", 100 * (s.mae.front() / mn - 1),
                     100 * (s.mae.back() / mn - 1), best_tp));
  }
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, fmt("runtime %.1f s", secs));
  o.note(fmt("%.1f s", secs));
  return o;
}

double mean_tp(double p_ref, int p, std::uint64_t seed) {
  const auto sessions = user::simulate_block(model_with(p_ref), fusion::VirtualConfig::make(p, 800), 60, seed);
  std::vector<double> tp;
  for (const auto& x : sessions) tp.push_back(x.TP);
  return stats::mean(tp);
}

Outcome criterion7() {
  Outcome o;
  for (double p_ref : {0.35, 0.50, 0.65}) {
    const std::string tag = fmt("p_ref %.2f: ", p_ref);
    const double target = 100.0 * p_ref;
    opt::SyntheticPdrSource pdr(model_with(p_ref), 21);
    const auto gp = opt::optimize_in_task(std::ref(pdr), 15);
    const auto cal = opt::run_calibration(opt::CalibrationPlan{},
                                          opt::SyntheticBlockSource(model_with(p_ref), 22), 23);
    const int pc = cal.choice.chosen_p;
    o.check(std::abs(gp.final_p - target) <= 10.0 + 1e-9, tag + fmt("GP chose %.0f", gp.final_p));
    o.check(std::abs(pc - target) <= 10.0 + 1e-9, tag + fmt("calibration chose %.0f", pc));
    o.check(std::abs(gp.final_p - pc) <= 10, tag + "GP and calibration disagree");
    std::string gain;
    if (p_ref != 0.5) {
      const double personal = mean_tp(p_ref, pc, 31);
      const double fixed = mean_tp(p_ref, 50, 31);
      const double rel = personal / fixed - 1.0;
      o.check(rel >= 0.02, tag + fmt("TP gain %.2f%% at p=%.0f", 100.0 * rel, pc));
      gain = fmt(", TP +%.1f%%", 100.0 * rel);
    }
    o.note(tag + fmt("GP %.0f, calibration %.0f", gp.final_p, pc) + gain);
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mu_d(0.0, 1.0), sd_d(0.01, 0.5), best_d(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double mu = mu_d(rng), sd = sd_d(rng), best = best_d(rng);
    double acc = 0.0;
    for (int k = 0; k < 1000000; ++k) acc += std::max(0.0, best - (mu + sd * z(rng)) - opt::kDefaultXi);
    worst = std::max(worst, std::abs(acc / 1e6 - opt::expected_improvement(mu, sd, best)));
  }
  o.check(worst <= 1e-3, fmt("max |EI - MC| = %.3g", worst));
  bool zeros = true;
  for (double mu : {0.995, 1.0, 1.2}) zeros = zeros && opt::expected_improvement(mu, 0.0, 1.0) == 0.0;
  o.check(zeros, "EI nonzero with sigma = 0 and mu >= best - xi");
  o.note(fmt("max |EI - MC| = %.2g", worst));
  return o;
}

Outcome criterion9() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::int64_t> d(-5000, 5000);
  std::uniform_int_distribution<std::uint64_t> t(0, 1ULL << 40);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    io::LogRecord r{t(rng), (d(rng) & 1) != 0, (d(rng) & 1) != 0, d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)};
    if (io::decode_record(io::encode_record(r)) != r) ++bad;
  }
  o.check(bad == 0, fmt("%.0f round-trip failures", bad));

  const auto script = io::parse_script(
      "SET_CPI 800\nSET_P 50\nSTART\nTAPPING D=300,W=20\nSET_P 30\nAIM 20\nSTOP\n"
      "SET_P 70\nSTART\nTAPPING D=900,W=50\nSTOP\n");
  std::stringstream log;
  io::emulator_run(user::ArmModel{}, fusion::VirtualConfig::make(50, 800), script, 9, log);
  const auto ing = io::ingest_log(log);
  o.check(ing.n_records > 0 && ing.mismatches == 0,
          fmt("%.0f mismatches in %.0f records", ing.mismatches, ing.n_records));

  vmouse::testing::TempDir dir;
  app::json before;
  {
    app::Service svc(dir.path());
    const auto s = svc.start_session({{"task", "D=300,W=20"}, {"p", 40}});
    const std::string sid = s["session_id"];
    const auto trials = vmouse::testing::hand_session();
    for (const auto& tr : trials) {
      app::json path = app::json::array();
      for (const auto& pt : tr.path) path.push_back({pt.t_s, pt.pos.x, pt.pos.y});
      svc.submit_trial(sid, {{"path", path}, {"click", {tr.click.x, tr.click.y}}, {"mt_s", tr.mt_s}});
    }
    svc.optimizer_step("acc", {{"session_id", sid}});
    for (int p : {30, 50, 70, 45, 55}) {
      svc.optimizer_step("acc", {{"observation", {{"p", p}, {"pdr", 0.05 + 1e-5 * (p - 42) * (p - 42)}}}});
    }
    before = svc.optimizer_state("acc");
  }
  { std::ofstream(dir.path() / "sessions" / "s000001.jsonl", std::ios::app) << R"({"kind":"trial","tr)"; }
  app::Service restarted(dir.path());
  const auto after = restarted.optimizer_state("acc");
  o.check(after == before, "restarted optimizer state differs");
  o.note(fmt("%.0f records, 0 mismatches, restart identical (%.0f observations)", ing.n_records,
             before["observations"].size()));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("criterion 10: SKIPPED (secondary component not built)\n");
  return failed == 0 ? 0 : 1;
}
