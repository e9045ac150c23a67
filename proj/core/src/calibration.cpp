// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "vmouse/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "vmouse/error.hpp"

namespace vmouse::opt {

using nlohmann::json;

void CalibrationPlan::validate() const {
  if (positions.empty()) throw ValidationError("calibration plan has no positions");
  std::set<int> seen;
  for (int p : positions) {
    if (p < 1 || p > 99) throw ValidationError("calibration positions must lie in [1, 99] percent");
    if (!seen.insert(p).second) throw ValidationError("calibration positions must be distinct");
  }
  if (!(per_position_s > 0.0)) throw ValidationError("per-position time must be positive");
  if (rounds < 1) throw ValidationError("calibration needs at least one round");
  if (!(rest_s >= 0.0)) throw ValidationError("rest time must be non-negative");
}

std::vector<int> CalibrationPlan::schedule(std::uint64_t seed) const {
  validate();
  std::mt19937_64 rng(user::trial_seed(seed, 0x63616c));
  std::vector<int> out;
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> order = positions;
    std::shuffle(order.begin(), order.end(), rng);
    out.insert(out.end(), order.begin(), order.end());
  }
  return out;
}

CalibrationChoice choose_position(std::span<const pointing::BlockSummary> blocks) {
  if (blocks.empty()) throw EmptyInputError("no calibration blocks");
  double top = blocks.front().TP_mean;
  for (const auto& b : blocks) top = std::max(top, b.TP_mean);

  CalibrationChoice c;
  std::vector<int> tested;
  for (const auto& b : blocks) {
    const int p = static_cast<int>(std::lround(b.p * 100.0));
    tested.push_back(p);
    if (b.TP_mean + b.TP_ci95 >= top) c.subset.push_back(p);
  }
  std::sort(c.subset.begin(), c.subset.end());
  std::sort(tested.begin(), tested.end());
  const std::size_t n = c.subset.size();
  c.median = n % 2 == 1 ? c.subset[n / 2] : 0.5 * (c.subset[n / 2 - 1] + c.subset[n / 2]);

  c.chosen_p = tested.front();
  double best = std::abs(c.median - tested.front());
  for (int p : tested) {
    const double d = std::abs(c.median - p);
    if (d < best) {
      best = d;
      c.chosen_p = p;
    }
  }
  return c;
}

CalibrationResult run_calibration(const CalibrationPlan& plan, const BlockSource& source,
                                  std::uint64_t seed) {
  CalibrationResult result;
  result.schedule = plan.schedule(seed);
  std::map<int, std::vector<pointing::SessionSummary>> sessions;
  std::map<int, int> visits;
  for (int p : result.schedule) {
    auto got = source(p, plan.per_position_s, visits[p]++);
    auto& dst = sessions[p];
    dst.insert(dst.end(), got.begin(), got.end());
  }
  for (auto& [p, list] : sessions) {
    if (list.size() < 2) {
      throw ValidationError("position " + std::to_string(p) + " has fewer than two usable sessions");
    }
    result.blocks.push_back(pointing::summarize_block(p / 100.0, std::move(list)));
  }
  result.choice = choose_position(result.blocks);
  return result;
}

SyntheticBlockSource::SyntheticBlockSource(user::ArmModel model, std::uint64_t seed, double user_cpi)
    : model_(std::move(model)), seed_(seed), user_cpi_(user_cpi) {
  model_.validate();
}

std::vector<pointing::SessionSummary> SyntheticBlockSource::operator()(int p_percent, double seconds,
                                                                       int round) const {
  const auto cfg = fusion::VirtualConfig::make(p_percent, user_cpi_);
  const auto tasks = user::study_tasks();
  std::vector<pointing::SessionSummary> out;
  double elapsed = 0.0;
  for (std::uint64_t s = 0; elapsed < seconds; ++s) {
    const auto& task = tasks[s % tasks.size()];
    const auto session = user::simulate_session(
        model_, cfg, task, seed_, (static_cast<std::uint64_t>(round) << 32) | s);
    const auto& last = session.traces.back();
    elapsed += last.t_start_s + last.mt_s;
    try {
      out.push_back(pointing::summarize_session(session.trials, task));
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

InTaskOptimizer::InTaskOptimizer(OptimizerOptions options) : options_(std::move(options)) {
  for (int s : options_.seeds) {
    if (s < kDomainMin || s > kDomainMax) throw ValidationError("seed positions must lie in [20, 80]");
  }
  if (options_.refit_every < 1) throw ValidationError("refit_every must be at least 1");
  if (!(options_.xi >= 0.0)) throw ValidationError("xi must be non-negative");
  state_.refit_every = options_.refit_every;
}

int InTaskOptimizer::suggest() const {
  const auto n = state_.observations.size();
  if (n < options_.seeds.size()) return options_.seeds[n];
  const auto grid = default_grid();
  return ei_acquire(state_, grid, options_.xi);
}

void InTaskOptimizer::observe(Observation obs) { state_ = gp_update(std::move(state_), std::move(obs)); }

int InTaskOptimizer::best_p() const {
  if (state_.observations.empty()) return 50;
  const auto grid = default_grid();
  return posterior_argmin(state_, grid);
}

std::vector<Posterior> InTaskOptimizer::posterior_curve() const {
  const auto grid = default_grid();
  const std::vector<double> q(grid.begin(), grid.end());
  return posterior(state_, q);
}

std::string InTaskOptimizer::to_checkpoint() const {
  json obs = json::array();
  for (const auto& o : state_.observations) {
    obs.push_back({{"p", o.p_percent}, {"pdr", o.value}, {"source", o.source}});
  }
  json doc = {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"options", {{"seeds", options_.seeds}, {"xi", options_.xi}, {"refit_every", options_.refit_every}}},
      {"kernel",
       {{"lengthscale", state_.kernel.lengthscale},
        {"signal_var", state_.kernel.signal_var},
        {"noise_var", state_.kernel.noise_var}}},
      {"fitted", state_.fitted},
      {"default_noise_ratio", state_.default_noise_ratio},
      {"observations", obs},
  };
  return doc.dump(2) + "\n";
}

InTaskOptimizer InTaskOptimizer::from_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw ParseError(1, "not an optimizer checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError(1, "unsupported checkpoint version " + std::to_string(version));
    }
    OptimizerOptions options;
    const auto& o = doc.at("options");
    options.seeds = o.at("seeds").get<std::vector<int>>();
    options.xi = o.at("xi").get<double>();
    options.refit_every = o.at("refit_every").get<int>();
    InTaskOptimizer opt(options);
    const auto& k = doc.at("kernel");
    opt.state_.kernel = {k.at("lengthscale").get<double>(), k.at("signal_var").get<double>(),
                         k.at("noise_var").get<double>()};
    opt.state_.fitted = doc.at("fitted").get<bool>();
    opt.state_.default_noise_ratio = doc.at("default_noise_ratio").get<double>();
    for (const auto& e : doc.at("observations")) {
      opt.state_.observations.push_back(
          {e.at("p").get<double>(), e.at("pdr").get<double>(), e.value("source", std::string{})});
    }
    return opt;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("malformed checkpoint: ") + e.what());
  }
}

void InTaskOptimizer::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp);
    os << to_checkpoint();
    if (!os) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

InTaskOptimizer InTaskOptimizer::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_checkpoint(ss.str());
}

InTaskResult optimize_in_task(const PdrSource& source, int budget, OptimizerOptions options) {
  if (budget < 4) throw ValidationError("in-task optimization needs a budget of at least 4");
  InTaskResult result{{}, 0, InTaskOptimizer(std::move(options))};
  for (int i = 0; i < budget; ++i) {
    const int p = result.optimizer.suggest();
    const double pdr = source(p);
    Observation obs{static_cast<double>(p), pdr, "synthetic"};
    result.trajectory.push_back(obs);
    result.optimizer.observe(std::move(obs));
  }
  result.final_p = result.optimizer.best_p();
  return result;
}

SyntheticPdrSource::SyntheticPdrSource(user::ArmModel model, std::uint64_t seed, double seconds,
                                       double user_cpi, std::optional<int> max_calls)
    : model_(std::move(model)), seed_(seed), seconds_(seconds), user_cpi_(user_cpi),
      max_calls_(max_calls) {
  model_.validate();
  if (!(seconds_ > 0.0)) throw ValidationError("block duration must be positive");
}

double SyntheticPdrSource::operator()(int p_percent) {
  if (max_calls_ && calls_ >= *max_calls_) throw SourceExhausted("synthetic PDR source exhausted");
  user::AimGameOptions options;
  options.duration_s = seconds_;
  const auto game = user::simulate_aim_game(
      model_, fusion::VirtualConfig::make(p_percent, user_cpi_), options,
      user::trial_seed(seed_, 0x706472, static_cast<std::uint64_t>(calls_)));
  ++calls_;
  return user::mean_pdr(game);
}

}  // namespace vmouse::opt
