// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <csignal>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "output.hpp"
#include "server.hpp"
#include "service.hpp"
#include "vmouse/calibration.hpp"
#include "vmouse/device_io.hpp"
#include "vmouse/emulator.hpp"
#include "vmouse/error.hpp"
#include "vmouse/trajectory_lab.hpp"

namespace vmouse::app {

namespace fs = std::filesystem;

user::ArmModel parse_synthetic(const std::string& spec) {
  user::ArmModel m;
  const std::map<std::string, double*> fields{{"p_ref", &m.p_ref},
                                             {"noise_scale", &m.noise_scale},
                                             {"wrist_amp", &m.wrist_amp},
                                             {"feedback_delay_s", &m.feedback_delay_s},
                                             {"perception_frac", &m.perception_frac},
                                             {"r_mm", &m.r_mm}};
  std::stringstream ss(spec);
  std::string item;
  bool have_p_ref = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("synthetic user item '" + item + "' lacks '='");
    const auto key = item.substr(0, eq);
    const auto it = fields.find(key);
    if (it == fields.end()) throw ValidationError("unknown synthetic user key '" + key + "'");
    try {
      std::size_t used = 0;
      *it->second = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("synthetic user value in '" + item + "' is not a number");
    }
    if (key == "p_ref") have_p_ref = true;
  }
  if (!have_p_ref) throw ValidationError("synthetic user spec needs p_ref");
  m.validate();
  return m;
}

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Common {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c, bool with_seed) {
  sub->add_option("--out", c.out_dir, "Output directory (manifest.json is written here)");
  if (with_seed) sub->add_option("--seed", c.seed, "Random seed (overrides VMOUSE_SEED)");
}

RunManifest manifest_for(const std::string& command, const std::vector<std::string>& args,
                         const Common& c) {
  RunManifest m;
  m.command = command;
  m.argv = args;
  std::tie(m.seed, m.seed_origin) = resolve_seed(c.seed);
  return m;
}

std::string output(RunManifest& m, const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  write_text(p, text);
  m.outputs.push_back(p.string());
  return p.string();
}

// --- robot-sim -------------------------------------------------------------

struct RobotArgs {
  Common c;
  bool rotate = false;
  double length = 700.0;
  std::vector<int> positions{0, 20, 40, 50, 60, 80, 100};
  std::string shape = "gerono";
  double rate = kinematics::kDefaultSampleRateHz;
  double r_mm = kinematics::kDefaultBaselineMm;
};

int robot_sim(const RobotArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("robot-sim", args, a.c);
  lab::PlanOptions po;
  po.shape = lab::parse_shape(a.shape);
  po.sample_rate_hz = a.rate;
  const auto plan = lab::lemniscate_plan(a.length, a.rotate, po);
  const auto report = lab::run_experiment(plan, a.positions, a.r_mm);
  m.parameters = {{"rotate", a.rotate}, {"length_mm", a.length}, {"positions", a.positions},
                  {"shape", a.shape},   {"rate_hz", a.rate},     {"r_mm", a.r_mm}};

  std::ostringstream csv;
  lab::write_csv(csv, report);
  output(m, a.c.out_dir, "equivalence.csv", csv.str());

  Series direct{"direct", {}, {}, {}, true, true}, fused{"fused", {}, {}, {}, true, true};
  for (const auto& p : report.positions) {
    direct.x.push_back(p.p_percent);
    direct.y.push_back(p.direct_mm);
    fused.x.push_back(p.p_percent);
    fused.y.push_back(p.fused_mm);
  }
  output(m, a.c.out_dir, "lengths.svg",
         render_svg({"Detected path length", "sensor position p (%)", "length (mm)", {direct, fused}}));
  Series path{"planned path", {}, {}, {}, false, true};
  for (const auto& pt : plan.points) {
    path.x.push_back(pt.x);
    path.y.push_back(pt.y);
  }
  output(m, a.c.out_dir, "plan.svg", render_svg({"Robot plan", "x (mm)", "y (mm)", {path}, true}));

  lab::write_table(out, report);
  m.results = {{"mean_discrepancy_pct", report.mean_discrepancy_pct}};
  if (report.fused_ratio_20_80) m.results["fused_ratio_20_80"] = *report.fused_ratio_20_80;
  if (report.direct_ratio_20_80) m.results["direct_ratio_20_80"] = *report.direct_ratio_20_80;
  m.write(a.c.out_dir);
  return kExitOk;
}

// --- user-sim --------------------------------------------------------------

struct UserArgs {
  Common c;
  std::string synthetic = "p_ref=0.5";
  std::optional<int> p;
  double cpi = user::kDefaultUserCpi;
  int sessions = 18;
  std::string task;
  double aim_s = 0.0;
};

int user_sim(const UserArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("user-sim", args, a.c);
  const auto model = parse_synthetic(a.synthetic);
  const int p = a.p.value_or(static_cast<int>(std::lround(model.p_ref * 100.0)));
  const auto cfg = fusion::VirtualConfig::make(p, a.cpi);
  if (a.sessions < 1) throw ValidationError("--sessions must be at least 1");
  m.parameters = {{"synthetic", a.synthetic}, {"p", p}, {"cpi", a.cpi}, {"sessions", a.sessions},
                  {"task", a.task}, {"aim_s", a.aim_s}};

  const auto tasks = a.task.empty() ? user::study_tasks()
                                    : std::vector<pointing::TaskConfig>{pointing::TaskConfig::parse(a.task)};
  std::vector<pointing::SessionSummary> sessions;
  for (int i = 0; i < a.sessions; ++i) {
    const auto& task = tasks[static_cast<std::size_t>(i) % tasks.size()];
    const auto trace = user::simulate_session(model, cfg, task, m.seed, static_cast<std::uint64_t>(i));
    try {
      sessions.push_back(pointing::summarize_session(trace.trials, task));
    } catch (const DegenerateError& e) {
      out << "session " << i << " skipped: " << e.what() << "\n";
    }
  }
  std::ostringstream csv;
  pointing::write_session_csv_header(csv);
  for (const auto& s : sessions) pointing::write_session_csv_row(csv, s);
  output(m, a.c.out_dir, "sessions.csv", csv.str());

  if (!sessions.empty()) {
    const auto block = pointing::summarize_block(p, sessions);
    Series pts{"sessions", {}, {}, {}, true, false};
    for (const auto& s : sessions) {
      pts.x.push_back(s.ID_e);
      pts.y.push_back(s.MT_mean);
    }
    PlotSpec plot{"Movement time vs effective ID", "ID_e (bits)", "MT (s)", {pts}};
    out << std::setprecision(4) << "p=" << p << " sessions=" << sessions.size() << " TP=" << block.TP_mean
        << " +/- " << block.TP_ci95 << " bit/s MAE=" << block.MAE_mean << " px\n";
    m.results = {{"TP_mean", block.TP_mean}, {"TP_ci95", block.TP_ci95}, {"MAE_mean", block.MAE_mean}};
    if (block.fit_valid) {
      Series fit{"fit", {}, {}, {}, false, true};
      double lo = INFINITY, hi = -INFINITY;
      for (double x : pts.x) lo = std::min(lo, x), hi = std::max(hi, x);
      fit.x = {lo, hi};
      fit.y = {block.fit.a + block.fit.b * lo, block.fit.a + block.fit.b * hi};
      plot.series.push_back(fit);
      out << "Fitts: MT = " << block.fit.a << " + " << block.fit.b << " ID_e (R^2 " << block.fit.r2 << ")\n";
      m.results["fitts"] = {{"a", block.fit.a}, {"b", block.fit.b}, {"r2", block.fit.r2}};
    }
    output(m, a.c.out_dir, "fitts.svg", render_svg(plot));
  }

  if (a.aim_s > 0.0) {
    user::AimGameOptions options;
    options.duration_s = a.aim_s;
    const auto game = user::simulate_aim_game(model, cfg, options, m.seed);
    std::vector<fusion::DualSample> samples;
    for (const auto& tr : game.traces) samples.insert(samples.end(), tr.samples.begin(), tr.samples.end());
    const auto reg = user::regress_rear_on_front(samples);
    out << "aim: rate=" << game.achieved_rate << "/s hits=" << game.hits << " expired=" << game.expired
        << " dX slope=" << reg.slope_dx << " dY slope=" << reg.slope_dy << "\n";
    m.results["aim"] = {{"achieved_rate", game.achieved_rate}, {"hits", game.hits},
                        {"expired", game.expired},   {"slope_dx", reg.slope_dx},
                        {"slope_dy", reg.slope_dy},  {"intercept_dx", reg.intercept_dx},
                        {"intercept_dy", reg.intercept_dy}};
    Series rate{"spawn rate", {}, {}, {}, false, true};
    for (const auto& r : game.rate_history) {
      rate.x.push_back(r.t_s);
      rate.y.push_back(r.rate);
    }
    output(m, a.c.out_dir, "aim_rate.svg", render_svg({"Aim game spawn rate", "t (s)", "targets/s", {rate}}));
  }
  m.write(a.c.out_dir);
  return kExitOk;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  Common c;
  std::string log;
  std::string task;
  std::string numerator = "mae";
  bool json_out = false;
};

int analyze(const AnalyzeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("analyze", args, a.c);
  if (a.numerator != "mae" && a.numerator != "rmse") throw ValidationError("--numerator must be mae or rmse");
  const auto num = a.numerator == "mae" ? pointing::PdrNumerator::mae : pointing::PdrNumerator::rmse;
  io::IngestOptions opts;
  opts.task = pointing::TaskConfig::parse(a.task);
  const auto result = io::ingest_log(fs::path(a.log), opts);
  m.inputs.push_back(a.log);
  m.parameters = {{"task", a.task}, {"numerator", a.numerator}};
  for (const auto& w : result.warnings) out << "warning: line " << w.line << ": " << w.message << "\n";

  std::ostringstream csv;
  pointing::write_session_csv_header(csv);
  nlohmann::json summaries = nlohmann::json::array();
  int ok = 0;
  for (std::size_t i = 0; i < result.tapping_sessions.size(); ++i) {
    const auto& trials = result.tapping_sessions[i];
    if (trials.size() != static_cast<std::size_t>(opts.task->n_targets)) {
      out << "tapping session " << i << " has " << trials.size() << " trials; skipped\n";
      continue;
    }
    try {
      const auto s = pointing::summarize_session(trials, *opts.task, num);
      pointing::write_session_csv_row(csv, s);
      summaries.push_back(to_json(s));
      ++ok;
    } catch (const DegenerateError& e) {
      out << "tapping session " << i << " skipped: " << e.what() << "\n";
    }
  }
  if (ok == 0) throw DegenerateError("log contains no analyzable tapping session");
  output(m, a.c.out_dir, "sessions.csv", csv.str());
  m.results = {{"sessions", ok}, {"mismatches", result.mismatches}, {"records", result.n_records}};
  if (a.json_out) {
    out << summaries.dump(2) << "\n";
  } else {
    out << std::setprecision(6);
    for (const auto& s : summaries) {
      out << "TP=" << s["TP"].get<double>() << " bit/s ID_e=" << s["ID_e"].get<double>()
          << " MT=" << s["MT_mean"].get<double>() << " s MAE=" << s["MAE"].get<double>() << " px\n";
    }
  }
  m.write(a.c.out_dir);
  return kExitOk;
}

// --- calibrate -------------------------------------------------------------

struct CalibrateArgs {
  Common c;
  std::string synthetic;
  std::vector<int> positions{20, 40, 50, 60, 80};
  double per_position_s = 240.0;
  int rounds = 3;
  double rest_s = 60.0;
  double cpi = user::kDefaultUserCpi;
};

int calibrate(const CalibrateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("calibrate", args, a.c);
  const auto model = parse_synthetic(a.synthetic);
  opt::CalibrationPlan plan;
  plan.positions = a.positions;
  plan.per_position_s = a.per_position_s;
  plan.rounds = a.rounds;
  plan.rest_s = a.rest_s;
  plan.validate();
  m.parameters = {{"synthetic", a.synthetic}, {"positions", a.positions}, {"per_position_s", a.per_position_s},
                  {"rounds", a.rounds},       {"rest_s", a.rest_s},       {"cpi", a.cpi}};
  const opt::SyntheticBlockSource source(model, m.seed, a.cpi);
  const auto result = opt::run_calibration(plan, source, m.seed);

  std::ostringstream blocks;
  pointing::write_block_csv(blocks, result.blocks);
  output(m, a.c.out_dir, "blocks.csv", blocks.str());
  std::ostringstream sessions;
  sessions << "p,";
  pointing::write_session_csv_header(sessions);
  for (const auto& b : result.blocks) {
    for (const auto& s : b.sessions) {
      sessions << std::lround(b.p * 100.0) << ',';
      pointing::write_session_csv_row(sessions, s);
    }
  }
  output(m, a.c.out_dir, "sessions.csv", sessions.str());

  Series tp{"TP (95% CI)", {}, {}, {}, true, true}, mae{"MAE / 10", {}, {}, {}, true, true};
  for (const auto& b : result.blocks) {
    tp.x.push_back(b.p * 100.0);
    tp.y.push_back(b.TP_mean);
    tp.band.push_back(b.TP_ci95);
    mae.x.push_back(b.p * 100.0);
    mae.y.push_back(b.MAE_mean / 10.0);
  }
  PlotSpec plot{"Calibration", "sensor position p (%)", "bit/s  |  px/10", {tp, mae}};
  plot.marker_x = result.choice.chosen_p;
  output(m, a.c.out_dir, "calibration.svg", render_svg(plot));

  out << std::setprecision(4);
  for (const auto& b : result.blocks) {
    out << "p=" << std::setw(3) << std::lround(b.p * 100.0) << "  TP=" << b.TP_mean << " +/- " << b.TP_ci95
        << "  MAE=" << b.MAE_mean << "  n=" << b.sessions.size() << "\n";
  }
  out << "best subset {" << join(result.choice.subset) << "}, median " << result.choice.median
      << ", chosen p = " << result.choice.chosen_p << "\n";
  m.results = {{"chosen_p", result.choice.chosen_p},
               {"subset", result.choice.subset},
               {"median", result.choice.median},
               {"schedule", result.schedule}};
  m.write(a.c.out_dir);
  return kExitOk;
}

// --- optimize --------------------------------------------------------------

struct OptimizeArgs {
  Common c;
  std::string synthetic;
  int budget = 15;
  double block_s = 60.0;
  double xi = opt::kDefaultXi;
  std::string checkpoint;
  double cpi = user::kDefaultUserCpi;
};

int optimize(const OptimizeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("optimize", args, a.c);
  const auto model = parse_synthetic(a.synthetic);
  if (a.budget < 4) throw ValidationError("--budget must be at least 4");
  const fs::path ckpt = a.checkpoint.empty() ? fs::path(a.c.out_dir) / "optimizer.json" : fs::path(a.checkpoint);
  m.parameters = {{"synthetic", a.synthetic}, {"budget", a.budget}, {"block_s", a.block_s},
                  {"xi", a.xi},               {"checkpoint", ckpt.string()}, {"cpi", a.cpi}};

  opt::OptimizerOptions options;
  options.xi = a.xi;
  opt::InTaskOptimizer optimizer(options);
  fs::create_directories(a.c.out_dir);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  if (fs::exists(ckpt)) {
    optimizer = opt::InTaskOptimizer::load(ckpt);
    m.inputs.push_back(ckpt.string());
    out << "resuming from " << ckpt.string() << " with " << optimizer.state().observations.size()
        << " observations\n";
  }
  opt::SyntheticPdrSource source(model, m.seed, a.block_s, a.cpi);
  source.skip(static_cast<int>(optimizer.state().observations.size()));
  while (static_cast<int>(optimizer.state().observations.size()) < a.budget) {
    const int p = optimizer.suggest();
    const double pdr = source(p);
    optimizer.observe({static_cast<double>(p), pdr, "synthetic"});
    optimizer.save(ckpt);
    out << "step " << optimizer.state().observations.size() << ": p=" << p << " PDR=" << pdr << "\n";
  }
  m.outputs.push_back(ckpt.string());

  std::ostringstream traj;
  traj << "iteration,p,pdr,source\n" << std::setprecision(12);
  Series obs{"observations", {}, {}, {}, true, false};
  int i = 0;
  for (const auto& o : optimizer.state().observations) {
    traj << ++i << ',' << o.p_percent << ',' << o.value << ',' << o.source << '\n';
    obs.x.push_back(o.p_percent);
    obs.y.push_back(o.value);
  }
  output(m, a.c.out_dir, "trajectory.csv", traj.str());
  std::ostringstream post;
  post << "p,mean,sd\n" << std::setprecision(12);
  Series mean{"posterior mean (2 sd)", {}, {}, {}, false, true};
  const auto grid = opt::default_grid();
  const auto curve = optimizer.posterior_curve();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    post << grid[k] << ',' << curve[k].mean << ',' << curve[k].sd << '\n';
    mean.x.push_back(grid[k]);
    mean.y.push_back(curve[k].mean);
    mean.band.push_back(2.0 * curve[k].sd);
  }
  output(m, a.c.out_dir, "posterior.csv", post.str());
  PlotSpec plot{"In-task optimization", "sensor position p (%)", "PDR", {mean, obs}};
  plot.marker_x = optimizer.best_p();
  output(m, a.c.out_dir, "posterior.svg", render_svg(plot));
  out << "final p = " << optimizer.best_p() << "\n";
  m.results = {{"final_p", optimizer.best_p()}, {"n_observations", optimizer.state().observations.size()}};
  m.write(a.c.out_dir);
  return kExitOk;
}

// --- emulate / verify-log --------------------------------------------------

struct EmulateArgs {
  Common c;
  std::string script;
  std::string log;
  std::string synthetic = "p_ref=0.5";
  int p = io::kDefaultP;
  double cpi = io::kDefaultCpi;
  std::size_t queue = 0;
};

int emulate(const EmulateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("emulate", args, a.c);
  const auto model = parse_synthetic(a.synthetic);
  std::ifstream in(a.script);
  if (!in) throw ValidationError("cannot open script " + a.script);
  const auto script = io::parse_script(in);
  const fs::path log = a.log.empty() ? fs::path(a.c.out_dir) / "device.log" : fs::path(a.log);
  if (log.has_parent_path()) fs::create_directories(log.parent_path());
  std::ofstream os(log, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + log.string());
  const auto cfg = fusion::VirtualConfig::make(a.p, a.cpi);
  const auto stats = a.queue > 0
                         ? io::emulator_run_threaded(model, cfg, script, m.seed, a.queue,
                                                     [&](const std::string& l) { os << l << '\n'; })
                         : io::emulator_run(model, cfg, script, m.seed, os);
  os.close();
  if (!os) throw std::runtime_error("failed writing " + log.string());
  m.inputs.push_back(a.script);
  m.outputs.push_back(log.string());
  m.parameters = {{"synthetic", a.synthetic}, {"p", a.p}, {"cpi", a.cpi}, {"queue", a.queue}};
  m.results = {{"records", stats.records}, {"acks", stats.acks}, {"errors", stats.errors},
               {"duration_s", stats.duration_s}};
  out << "wrote " << stats.records << " records (" << stats.acks << " OK, " << stats.errors << " ERR, "
      << stats.duration_s << " s simulated) to " << log.string() << "\n";
  m.write(a.c.out_dir);
  return kExitOk;
}

struct VerifyArgs {
  Common c;
  std::string log;
  std::string task;
};

int verify_log(const VerifyArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("verify-log", args, a.c);
  io::IngestOptions opts;
  if (!a.task.empty()) opts.task = pointing::TaskConfig::parse(a.task);
  const auto r = io::ingest_log(fs::path(a.log), opts);
  m.inputs.push_back(a.log);
  m.parameters = {{"task", a.task}};
  for (const auto& w : r.warnings) out << "warning: line " << w.line << ": " << w.message << "\n";
  for (const auto& e : r.device_errors) out << "device error: " << e << "\n";
  out << "records " << r.n_records << ", sessions " << r.sessions.size() << ", mismatches " << r.mismatches;
  if (opts.task) out << ", tapping sessions " << r.tapping_sessions.size();
  out << "\n";
  m.results = {{"records", r.n_records}, {"sessions", r.sessions.size()}, {"mismatches", r.mismatches},
               {"warnings", r.warnings.size()}, {"device_errors", r.device_errors.size()}};
  m.write(a.c.out_dir);
  return r.mismatches == 0 ? kExitOk : kExitRuntime;
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
  Common c;
  std::string host = "127.0.0.1";
  int port = 8765;
  std::string data_dir = "vmouse-data";
};

int serve(const ServeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  auto m = manifest_for("serve", args, a.c);
  m.parameters = {{"host", a.host}, {"port", a.port}, {"data_dir", a.data_dir}};
  m.write(a.data_dir);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Service service(fs::path(a.data_dir));
  for (const auto& w : service.load_warnings()) out << "warning: " << w << "\n";
  HttpServer server(service);
  const int port = server.start(a.host, a.port);
  out << "serving on http://" << a.host << ":" << port << " (data in " << a.data_dir << ")" << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  out << "stopping" << std::endl;
  server.stop();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vmouse: virtual mouse sensor placement lab", "vmouse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RobotArgs robot;
  auto* robot_cmd = app.add_subcommand("robot-sim", "Figure-eight robot runs: fused vs direct sensor emulation");
  add_common(robot_cmd, robot.c, false);
  robot_cmd->add_flag("--rotate", robot.rotate, "Rotate the device along the path");
  robot_cmd->add_option("--length", robot.length, "Planned path length (mm)");
  robot_cmd->add_option("--positions", robot.positions, "Sensor positions in percent")->delimiter(',');
  robot_cmd->add_option("--shape", robot.shape, "gerono or bernoulli");
  robot_cmd->add_option("--rate", robot.rate, "Sample rate (Hz)");
  robot_cmd->add_option("--r-mm", robot.r_mm, "Distance between the two sensors (mm)");

  UserArgs usr;
  auto* user_cmd = app.add_subcommand("user-sim", "Synthetic participant: tapping sessions and aim game");
  add_common(user_cmd, usr.c, true);
  user_cmd->add_option("--synthetic", usr.synthetic, "Participant, e.g. p_ref=0.4");
  user_cmd->add_option("--p", usr.p, "Virtual sensor position in percent (default: p_ref)");
  user_cmd->add_option("--cpi", usr.cpi, "Output resolution");
  user_cmd->add_option("--sessions", usr.sessions, "Number of tapping sessions");
  user_cmd->add_option("--task", usr.task, "Single task, e.g. D=300,W=20 (default: study set)");
  user_cmd->add_option("--aim", usr.aim_s, "Also play this many seconds of aim game");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Tapping-session metrics from a device log");
  add_common(an_cmd, an.c, false);
  an_cmd->add_option("--log", an.log, "Device log")->required();
  an_cmd->add_option("--task", an.task, "Task of every session, e.g. D=300,W=20")->required();
  an_cmd->add_option("--numerator", an.numerator, "PDR numerator: mae or rmse");
  an_cmd->add_flag("--json", an.json_out, "Print summaries as JSON");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "One-shot calibration over a fixed set of positions");
  add_common(cal_cmd, cal.c, true);
  cal_cmd->add_option("--synthetic", cal.synthetic, "Participant, e.g. p_ref=0.4")->required();
  cal_cmd->add_option("--positions", cal.positions, "Tested positions in percent")->delimiter(',');
  cal_cmd->add_option("--per-position", cal.per_position_s, "Seconds per position visit");
  cal_cmd->add_option("--rounds", cal.rounds, "Visits per position");
  cal_cmd->add_option("--rest", cal.rest_s, "Rest between visits (s)");
  cal_cmd->add_option("--cpi", cal.cpi, "Output resolution");

  OptimizeArgs op;
  auto* op_cmd = app.add_subcommand("optimize", "In-task GP optimization of the sensor position");
  add_common(op_cmd, op.c, true);
  op_cmd->add_option("--synthetic", op.synthetic, "Participant, e.g. p_ref=0.4")->required();
  op_cmd->add_option("--budget", op.budget, "Total number of blocks");
  op_cmd->add_option("--block", op.block_s, "Aim-game seconds per block");
  op_cmd->add_option("--xi", op.xi, "Expected-improvement margin");
  op_cmd->add_option("--checkpoint", op.checkpoint, "Checkpoint file; resumed when present");
  op_cmd->add_option("--cpi", op.cpi, "Output resolution");

  EmulateArgs em;
  auto* em_cmd = app.add_subcommand("emulate", "Run a device script and write the serial log");
  add_common(em_cmd, em.c, true);
  em_cmd->add_option("--script", em.script, "Command and activity schedule")->required();
  em_cmd->add_option("--log", em.log, "Output log (default: <out>/device.log)");
  em_cmd->add_option("--synthetic", em.synthetic, "Participant holding the device");
  em_cmd->add_option("--p", em.p, "Power-on sensor position (percent)");
  em_cmd->add_option("--cpi", em.cpi, "Power-on resolution");
  em_cmd->add_option("--queue", em.queue, "Run producer and writer on two threads with this queue size");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify-log", "Recompute mx/my of a log; exit 1 on any mismatch");
  add_common(ver_cmd, ver.c, false);
  ver_cmd->add_option("--log", ver.log, "Device log")->required();
  ver_cmd->add_option("--task", ver.task, "Also sessionize clicks into tapping trials");

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "HTTP service for the calibration UI");
  add_common(sv_cmd, sv.c, true);
  sv_cmd->add_option("--host", sv.host, "Bind address");
  sv_cmd->add_option("--port", sv.port, "Port");
  sv_cmd->add_option("--data-dir", sv.data_dir, "Persistence directory");

  std::vector<std::string> argv_store{"vmouse"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*robot_cmd) return robot_sim(robot, args, out);
    if (*user_cmd) return user_sim(usr, args, out);
    if (*an_cmd) return analyze(an, args, out);
    if (*cal_cmd) return calibrate(cal, args, out);
    if (*op_cmd) return optimize(op, args, out);
    if (*em_cmd) return emulate(em, args, out);
    if (*ver_cmd) return verify_log(ver, args, out);
    if (*sv_cmd) return serve(sv, args, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace vmouse::app
