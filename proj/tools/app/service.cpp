// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include "service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "vmouse/device_io.hpp"
#include "vmouse/error.hpp"

namespace vmouse::app {

namespace fs = std::filesystem;
using pointing::Vec2;

namespace {

const std::regex kIdPattern("[A-Za-z0-9_-]{1,64}");

void require_id(const std::string& id, const char* what) {
  if (!std::regex_match(id, kIdPattern)) {
    throw ServiceError(400, std::string("invalid ") + what + " id",
                       json::array({{{"field", "id"}, {"error", "must match [A-Za-z0-9_-]{1,64}"}}}));
  }
}

struct FieldErrors {
  json list = json::array();
  void add(const std::string& field, const std::string& error) {
    list.push_back({{"field", field}, {"error", error}});
  }
  void raise_if_any(const std::string& what) const {
    if (!list.empty()) throw ServiceError(400, what, list);
  }
};

std::optional<Vec2> read_point(const json& body, const char* key, FieldErrors& errs) {
  if (!body.contains(key)) return std::nullopt;
  const json& v = body.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    errs.add(key, "expected [x, y]");
    return std::nullopt;
  }
  const Vec2 p{v[0].get<double>(), v[1].get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    errs.add(key, "coordinates must be finite");
    return std::nullopt;
  }
  return p;
}

json point_json(Vec2 p) { return json::array({p.x, p.y}); }

json task_json(const pointing::TaskConfig& t) {
  return {{"D", t.D}, {"W", t.W}, {"N", t.n_targets}};
}

json trial_json(const pointing::Trial& t) {
  json path = json::array();
  for (const auto& tp : t.path) path.push_back(json::array({tp.t_s, tp.pos.x, tp.pos.y}));
  return {{"prev_target", point_json(t.prev_target)},
          {"target", point_json(t.target)},
          {"click", point_json(t.click)},
          {"path", std::move(path)},
          {"mt_s", t.mt_s},
          {"success", t.success}};
}

pointing::TaskConfig parse_task(const json& v, FieldErrors& errs) {
  pointing::TaskConfig task;
  try {
    if (v.is_string()) {
      task = pointing::TaskConfig::parse(v.get<std::string>());
    } else if (v.is_object()) {
      if (!v.contains("D") || !v["D"].is_number()) errs.add("task.D", "required number");
      if (!v.contains("W") || !v["W"].is_number()) errs.add("task.W", "required number");
      if (v.contains("N") && !v["N"].is_number_integer()) errs.add("task.N", "must be an integer");
      if (!errs.list.empty()) return task;
      task.D = v["D"].get<double>();
      task.W = v["W"].get<double>();
      if (v.contains("N")) task.n_targets = v["N"].get<int>();
      task.validate();
    } else {
      errs.add("task", "expected \"D=..,W=..\" or {\"D\":..,\"W\":..}");
    }
  } catch (const ValidationError& e) {
    errs.add("task", e.what());
  }
  return task;
}

}  // namespace

// ---------------------------------------------------------------------------

void Subscription::push(std::string message) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    queue_.push_back(std::move(message));
  }
  cv_.notify_all();
}

std::optional<std::string> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  std::string m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_ && queue_.empty();
}

// ---------------------------------------------------------------------------

json to_json(const pointing::SessionSummary& s) {
  return {{"D", s.D},         {"W", s.W},           {"D_e", s.D_e},
          {"SD_xy", s.SD_xy}, {"W_e", s.W_e},       {"ID_e", s.ID_e},
          {"MT_mean", s.MT_mean}, {"TP", s.TP},     {"MAE", s.MAE},
          {"RMSE", s.RMSE},   {"PDR", s.PDR},       {"n_trials", s.n_trials},
          {"n_removed", s.n_removed}, {"n_errors", s.n_errors}};
}

pointing::Trial trial_from_json(const json& body, const SessionState& session, std::size_t index,
                                std::string& source_out) {
  FieldErrors errs;
  if (!body.is_object()) throw ServiceError(400, "trial body must be a JSON object");
  const auto pairs = pointing::trial_targets(session.task);
  if (index >= pairs.size()) {
    throw ServiceError(409, "session already has all " + std::to_string(pairs.size()) + " trials");
  }

  pointing::Trial t;
  t.prev_target = read_point(body, "prev_target", errs).value_or(pairs[index].first);
  t.target = read_point(body, "target", errs).value_or(pairs[index].second);

  const bool dual = body.contains("samples");
  source_out = dual ? "dual-sensor" : "cursor-only";
  if (body.contains("source")) {
    if (!body["source"].is_string()) {
      errs.add("source", "must be a string");
    } else if (!dual) {
      source_out = body["source"].get<std::string>();
    }
  }

  if (dual) {
    // Raw two-sensor samples: the cursor path is recomputed at the session's
    // (p, k), starting from `start` (default: the previous target).
    const Vec2 start = read_point(body, "start", errs).value_or(t.prev_target);
    const json& samples = body["samples"];
    if (!samples.is_array() || samples.empty()) {
      errs.add("samples", "expected a non-empty array of [t_us,btnL,btnR,dxf,dyf,dxr,dyr]");
    }
    errs.raise_if_any("malformed trial");
    fusion::Pipeline pipeline(session.cfg);
    Vec2 pos = start;
    double t0 = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const json& s = samples[i];
      bool ok = s.is_array() && s.size() == 7;
      for (std::size_t j = 0; ok && j < 7; ++j) ok = s[j].is_number_integer();
      if (!ok || s[0].get<std::int64_t>() < 0) {
        errs.add("samples[" + std::to_string(i) + "]", "expected 7 integers, t_us >= 0");
        continue;
      }
      io::LogRecord r;
      r.t_us = s[0].get<std::uint64_t>();
      r.btn_l = s[1].get<int>() != 0;
      r.btn_r = s[2].get<int>() != 0;
      r.dxf = s[3].get<std::int64_t>();
      r.dyf = s[4].get<std::int64_t>();
      r.dxr = s[5].get<std::int64_t>();
      r.dyr = s[6].get<std::int64_t>();
      const auto d = pipeline.process(io::to_dual(r));
      if (i == 0) {
        t0 = static_cast<double>(r.t_us) * 1e-6;
        t.path.push_back({0.0, pos});
      }
      pos += Vec2{static_cast<double>(d.mx), static_cast<double>(d.my)};
      t.path.push_back({static_cast<double>(r.t_us) * 1e-6 - t0, pos});
    }
    errs.raise_if_any("malformed trial");
    t.click = pos;
  } else {
    const json path = body.value("path", json());
    if (!path.is_array() || path.empty()) {
      errs.add("path", "expected a non-empty array of [t_s, x, y]");
    } else {
      for (std::size_t i = 0; i < path.size(); ++i) {
        const json& p = path[i];
        if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
            !p[2].is_number()) {
          errs.add("path[" + std::to_string(i) + "]", "expected [t_s, x, y]");
          continue;
        }
        t.path.push_back({p[0].get<double>(), {p[1].get<double>(), p[2].get<double>()}});
      }
    }
    const auto click = read_point(body, "click", errs);
    if (!click && !body.contains("click")) errs.add("click", "required [x, y]");
    errs.raise_if_any("malformed trial");
    t.click = *click;
    for (std::size_t i = 1; i < t.path.size(); ++i) {
      if (t.path[i].t_s < t.path[i - 1].t_s) {
        errs.add("path[" + std::to_string(i) + "]", "timestamps must not decrease");
        break;
      }
    }
  }

  if (body.contains("mt_s")) {
    if (!body["mt_s"].is_number() || !(body["mt_s"].get<double>() >= 0.0)) {
      errs.add("mt_s", "must be a non-negative number");
    } else {
      t.mt_s = body["mt_s"].get<double>();
    }
  } else {
    t.mt_s = t.path.back().t_s - t.path.front().t_s;
  }
  if (body.contains("success")) {
    if (!body["success"].is_boolean()) {
      errs.add("success", "must be a boolean");
    } else {
      t.success = body["success"].get<bool>();
    }
  } else {
    t.success = (t.click - t.target).norm() <= session.task.W / 2.0;
  }
  errs.raise_if_any("malformed trial");
  return t;
}

// ---------------------------------------------------------------------------

Service::Service(std::optional<fs::path> data_dir) : data_dir_(std::move(data_dir)) {
  if (data_dir_) {
    fs::create_directories(*data_dir_ / "sessions");
    fs::create_directories(*data_dir_ / "optimizers");
    load();
  }
}

Service::~Service() { close_streams(); }

void Service::load() {
  for (const auto& entry : fs::directory_iterator(*data_dir_ / "optimizers")) {
    if (entry.path().extension() != ".json") continue;
    const std::string id = entry.path().stem().string();
    if (!std::regex_match(id, kIdPattern)) continue;
    try {
      auto o = std::make_shared<Optimizer>();
      o->opt = opt::InTaskOptimizer::load(entry.path());
      optimizers_[id] = std::move(o);
    } catch (const std::exception& e) {
      load_warnings_.push_back(entry.path().string() + ": " + e.what());
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(*data_dir_ / "sessions")) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    auto s = std::make_shared<Session>();
    bool started = false;
    std::size_t pos = 0, line_no = 0;
    try {
      while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
          // A write interrupted by a crash; the request was never acknowledged.
          load_warnings_.push_back(path.string() + ": dropped incomplete final line");
          break;
        }
        const json line = json::parse(text.substr(pos, nl - pos));
        pos = nl + 1;
        const std::string kind = line.at("kind").get<std::string>();
        if (kind == "start") {
          FieldErrors errs;
          s->state.id = line.at("id").get<std::string>();
          s->state.task = parse_task(line.at("task"), errs);
          errs.raise_if_any("bad task");
          s->state.cfg = fusion::VirtualConfig::make(line.at("p").get<int>(), line.at("cpi").get<double>());
          s->state.source = line.at("source").get<std::string>();
          started = true;
        } else if (kind == "trial" && started) {
          std::string source;
          s->state.trials.push_back(trial_from_json(line.at("trial"), s->state, s->state.trials.size(), source));
          s->state.trial_sources.push_back(line.value("source", source));
        } else {
          throw std::runtime_error("unexpected record kind '" + kind + "'");
        }
      }
    } catch (const std::exception& e) {
      load_warnings_.push_back(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
      if (!started) continue;
    }
    if (!started) continue;
    const std::string id = s->state.id;
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_session_ = std::max<std::uint64_t>(next_session_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_[id] = std::move(s);
  }
}

void Service::append_session_line(const std::string& id, const json& line) const {
  if (!data_dir_) return;
  const fs::path path = *data_dir_ / "sessions" / (id + ".jsonl");
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw ServiceError(500, "failed to persist session " + id);
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

std::shared_ptr<Service::Optimizer> Service::find_optimizer(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = optimizers_.find(id);
  if (it == optimizers_.end()) throw ServiceError(404, "unknown optimizer '" + id + "'");
  return it->second;
}

void Service::publish(Session& s, const json& message) {
  const std::string text = message.dump();
  auto& subs = s.subscribers;
  subs.erase(std::remove_if(subs.begin(), subs.end(), [](const auto& sub) { return sub->closed(); }),
             subs.end());
  for (const auto& sub : subs) sub->push(text);
}

json Service::start_session(const json& body) {
  FieldErrors errs;
  if (!body.is_object()) throw ServiceError(400, "session body must be a JSON object");
  SessionState st;
  if (!body.contains("task")) {
    errs.add("task", "required");
  } else {
    st.task = parse_task(body["task"], errs);
  }
  int p = io::kDefaultP;
  double cpi = io::kDefaultCpi;
  if (body.contains("p")) {
    if (!body["p"].is_number_integer()) {
      errs.add("p", "must be an integer percent");
    } else {
      p = body["p"].get<int>();
    }
  }
  if (body.contains("cpi")) {
    if (!body["cpi"].is_number()) {
      errs.add("cpi", "must be a number");
    } else {
      cpi = body["cpi"].get<double>();
    }
  }
  try {
    st.cfg = fusion::VirtualConfig::make(p, cpi);
  } catch (const ValidationError& e) {
    errs.add("p/cpi", e.what());
  }
  st.source = "cursor-only";
  if (body.contains("source")) {
    if (!body["source"].is_string()) {
      errs.add("source", "must be a string");
    } else {
      st.source = body["source"].get<std::string>();
    }
  }
  errs.raise_if_any("malformed session start");

  auto s = std::make_shared<Session>();
  {
    std::unique_lock lock(mu_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_session_++));
    st.id = buf;
    s->state = st;
    append_session_line(st.id, {{"kind", "start"},
                                {"id", st.id},
                                {"task", task_json(st.task)},
                                {"p", st.cfg.p_percent()},
                                {"cpi", st.cfg.user_cpi()},
                                {"source", st.source}});
    sessions_[st.id] = s;
  }
  return {{"v", kMessageVersion},
          {"session_id", st.id},
          {"task", task_json(st.task)},
          {"p", st.cfg.p_percent()},
          {"cpi", st.cfg.user_cpi()},
          {"source", st.source},
          {"targets", [&] {
             json a = json::array();
             for (const auto& c : pointing::task_geometry(st.task)) a.push_back(point_json(c));
             return a;
           }()}};
}

json Service::submit_trial(const std::string& session_id, const json& body) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mu);
  std::string source;
  const std::size_t index = s->state.trials.size();
  pointing::Trial t = trial_from_json(body, s->state, index, source);
  append_session_line(session_id, {{"kind", "trial"}, {"trial", trial_json(t)}, {"source", source}});
  s->state.trials.push_back(t);
  s->state.trial_sources.push_back(source);

  json samples = json::array();
  for (const auto& tp : t.path) samples.push_back(json::array({tp.t_s, tp.pos.x, tp.pos.y}));
  publish(*s, {{"v", kMessageVersion},
               {"type", "cursor"},
               {"session_id", session_id},
               {"trial", index},
               {"p", s->state.cfg.p_percent()},
               {"samples", std::move(samples)}});
  publish(*s, {{"v", kMessageVersion},
               {"type", "trial"},
               {"session_id", session_id},
               {"trial", index},
               {"success", t.success},
               {"mt_s", t.mt_s},
               {"source", source}});
  const auto n_needed = static_cast<std::size_t>(s->state.task.n_targets);
  if (s->state.trials.size() == n_needed) {
    json msg = {{"v", kMessageVersion}, {"type", "complete"}, {"session_id", session_id}};
    try {
      msg["summary"] = summary_json(s->state);
    } catch (const std::exception& e) {
      msg["summary_error"] = e.what();
    }
    publish(*s, msg);
  }
  return {{"v", kMessageVersion},
          {"session_id", session_id},
          {"trial", index},
          {"accepted", true},
          {"source", source},
          {"success", t.success},
          {"remaining", n_needed - s->state.trials.size()}};
}

json Service::summary_json(const SessionState& st) {
  pointing::SessionSummary summary;
  try {
    summary = pointing::summarize_session(st.trials, st.task);
  } catch (const std::exception& e) {
    throw ServiceError(409, std::string("summary unavailable: ") + e.what());
  }
  json out = to_json(summary);
  out["v"] = kMessageVersion;
  out["session_id"] = st.id;
  out["p"] = st.cfg.p_percent();
  out["cpi"] = st.cfg.user_cpi();
  out["source"] = st.source;
  out["n_submitted"] = st.trials.size();
  return out;
}

json Service::session_summary(const std::string& session_id) const {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mu);
  return summary_json(s->state);
}

json Service::optimizer_step(const std::string& optimizer_id, const json& body) {
  require_id(optimizer_id, "optimizer");
  if (!body.is_null() && !body.is_object()) throw ServiceError(400, "step body must be a JSON object");
  FieldErrors errs;
  std::optional<opt::Observation> obs;
  if (body.is_object() && body.contains("observation")) {
    const json& o = body["observation"];
    if (!o.is_object()) {
      errs.add("observation", "expected {\"p\":..,\"pdr\":..}");
    } else {
      opt::Observation ob;
      ob.source = "manual";
      if (!o.contains("p") || !o["p"].is_number()) errs.add("observation.p", "required number");
      if (!o.contains("pdr") || !o["pdr"].is_number()) errs.add("observation.pdr", "required number");
      if (o.contains("source") && !o["source"].is_string()) errs.add("observation.source", "must be a string");
      if (errs.list.empty()) {
        ob.p_percent = o["p"].get<double>();
        ob.value = o["pdr"].get<double>();
        if (o.contains("source")) ob.source = o["source"].get<std::string>();
        obs = ob;
      }
    }
  } else if (body.is_object() && body.contains("session_id")) {
    if (!body["session_id"].is_string()) {
      errs.add("session_id", "must be a string");
    } else {
      auto s = find_session(body["session_id"].get<std::string>());
      std::lock_guard lock(s->mu);
      const json summary = summary_json(s->state);
      obs = opt::Observation{static_cast<double>(s->state.cfg.p_percent()), summary["PDR"].get<double>(),
                             s->state.source};
    }
  }
  errs.raise_if_any("malformed optimizer step");

  std::shared_ptr<Optimizer> o;
  {
    std::unique_lock lock(mu_);
    auto& slot = optimizers_[optimizer_id];
    if (!slot) slot = std::make_shared<Optimizer>();
    o = slot;
  }
  std::lock_guard lock(o->mu);
  if (obs) {
    try {
      o->opt.observe(*obs);
    } catch (const ValidationError& e) {
      throw ServiceError(400, "observation rejected", json::array({{{"field", "observation"}, {"error", e.what()}}}));
    }
    if (data_dir_) o->opt.save(*data_dir_ / "optimizers" / (optimizer_id + ".json"));
  }
  return {{"v", kMessageVersion},
          {"optimizer_id", optimizer_id},
          {"suggested_p", o->opt.suggest()},
          {"best_p", o->opt.best_p()},
          {"n_observations", o->opt.state().observations.size()}};
}

json Service::optimizer_state(const std::string& optimizer_id) const {
  require_id(optimizer_id, "optimizer");
  auto o = find_optimizer(optimizer_id);
  std::lock_guard lock(o->mu);
  const auto& st = o->opt.state();
  json observations = json::array();
  for (const auto& ob : st.observations) {
    observations.push_back({{"p", ob.p_percent}, {"pdr", ob.value}, {"source", ob.source}});
  }
  json curve = json::array();
  const auto grid = opt::default_grid();
  const auto post = o->opt.posterior_curve();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    curve.push_back({{"p", grid[i]}, {"mean", post[i].mean}, {"sd", post[i].sd}});
  }
  return {{"v", kMessageVersion},
          {"optimizer_id", optimizer_id},
          {"observations", std::move(observations)},
          {"kernel",
           {{"lengthscale", st.kernel.lengthscale},
            {"signal_var", st.kernel.signal_var},
            {"noise_var", st.kernel.noise_var},
            {"fitted", st.fitted}}},
          {"posterior", std::move(curve)},
          {"suggested_p", o->opt.suggest()},
          {"best_p", o->opt.best_p()}};
}

std::shared_ptr<Subscription> Service::subscribe(const std::string& session_id) {
  auto s = find_session(session_id);
  auto sub = std::make_shared<Subscription>();
  std::lock_guard lock(s->mu);
  sub->push(json{{"v", kMessageVersion},
                 {"type", "hello"},
                 {"session_id", session_id},
                 {"p", s->state.cfg.p_percent()},
                 {"cpi", s->state.cfg.user_cpi()},
                 {"task", task_json(s->state.task)},
                 {"n_submitted", s->state.trials.size()}}
                .dump());
  s->subscribers.push_back(sub);
  return sub;
}

void Service::unsubscribe(const std::string& session_id, const std::shared_ptr<Subscription>& sub) {
  sub->close();
  std::shared_ptr<Session> s;
  try {
    s = find_session(session_id);
  } catch (const ServiceError&) {
    return;
  }
  std::lock_guard lock(s->mu);
  auto& subs = s->subscribers;
  subs.erase(std::remove(subs.begin(), subs.end(), sub), subs.end());
}

void Service::close_streams() {
  std::shared_lock lock(mu_);
  for (auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mu);
    for (auto& sub : s->subscribers) sub->close();
  }
}

SessionState Service::session(const std::string& session_id) const {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mu);
  return s->state;
}

std::vector<std::string> Service::session_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

opt::InTaskOptimizer Service::optimizer(const std::string& optimizer_id) const {
  auto o = find_optimizer(optimizer_id);
  std::lock_guard lock(o->mu);
  return o->opt;
}

}  // namespace vmouse::app
