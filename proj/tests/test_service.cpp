// Copyright 2026 The vmouse Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "hand_session.hpp"
#include "httplib.h"
#include "server.hpp"
#include "service.hpp"
#include "test_util.hpp"
#include "vmouse/calibration.hpp"
#include "vmouse/synthetic_user.hpp"

namespace vmouse::app {
namespace {

using vmouse::testing::TempDir;

json trial_body(const pointing::Trial& t) {
  json path = json::array();
  for (const auto& p : t.path) path.push_back({p.t_s, p.pos.x, p.pos.y});
  return {{"path", path}, {"click", {t.click.x, t.click.y}}, {"mt_s", t.mt_s}};
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(10, 0);
  }
  void TearDown() override {
    service_.close_streams();
    server_.stop();
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    auto res = client_->Post(path, body.is_null() ? std::string() : body.dump(), "application/json");
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }

  Service service_;
  HttpServer server_{service_};
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpFixture, Health) {
  const auto [status, body] = get("/health");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["v"], kMessageVersion);
}

TEST_F(HttpFixture, SessionSummaryMatchesOfflineAnalysis) {
  const auto [st, start] = post("/session/start", {{"task", "D=300,W=20"}, {"p", 40}, {"cpi", 800}});
  ASSERT_EQ(st, 201);
  EXPECT_EQ(start["v"], 1);
  EXPECT_EQ(start["targets"].size(), 15u);
  const std::string id = start["session_id"];

  const auto trials = vmouse::testing::hand_session();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto [s, r] = post("/session/" + id + "/trial", trial_body(trials[i]));
    ASSERT_EQ(s, 200) << r.dump();
  }
  const auto [s2, summary] = get("/session/" + id + "/summary");
  ASSERT_EQ(s2, 200);
  const auto offline = pointing::summarize_session(trials, vmouse::testing::hand_task());
  EXPECT_NEAR(summary["TP"].get<double>(), offline.TP, 1e-9);
  EXPECT_NEAR(summary["ID_e"].get<double>(), offline.ID_e, 1e-9);
  EXPECT_NEAR(summary["W_e"].get<double>(), offline.W_e, 1e-9);
  EXPECT_NEAR(summary["MAE"].get<double>(), offline.MAE, 1e-9);
  EXPECT_NEAR(summary["PDR"].get<double>(), offline.PDR, 1e-9);
  EXPECT_EQ(summary["n_trials"], offline.n_trials);

  const auto [s3, extra] = post("/session/" + id + "/trial", trial_body(trials[0]));
  EXPECT_EQ(s3, 409);
  EXPECT_TRUE(extra.contains("error"));
}

TEST_F(HttpFixture, ErrorMapping) {
  EXPECT_EQ(get("/session/s999999/summary").first, 404);
  EXPECT_EQ(get("/optimizer/none/state").first, 404);
  EXPECT_EQ(get("/no/such/route").first, 404);
  EXPECT_EQ(post("/session/start", {{"task", "D=10,W=20"}}).first, 400);
  EXPECT_EQ(post("/session/start", {{"p", 150}}).first, 400);

  const auto [st, start] = post("/session/start", {{"task", "D=300,W=20"}});
  ASSERT_EQ(st, 201);
  const std::string id = start["session_id"];
  const auto [s1, bad] = post("/session/" + id + "/trial", {{"path", "nope"}, {"mt_s", -1}});
  EXPECT_EQ(s1, 400);
  ASSERT_TRUE(bad["details"].is_array());
  std::set<std::string> fields;
  for (const auto& d : bad["details"]) fields.insert(d["field"]);
  EXPECT_TRUE(fields.count("path"));
  EXPECT_TRUE(fields.count("click"));

  auto raw = client_->Post("/session/" + id + "/trial", "{not json", "application/json");
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->status, 400);
  EXPECT_EQ(get("/session/" + id + "/summary").first, 409);
  EXPECT_EQ(post("/optimizer/bad$id/step", json()).first, 400);
  EXPECT_EQ(post("/optimizer/x/step", {{"observation", {{"p", 95}, {"pdr", 0.1}}}}).first, 400);
}

TEST_F(HttpFixture, OptimizerStartsOnSeedPoints) {
  const auto [s, r] = post("/optimizer/u1/step", json());
  ASSERT_EQ(s, 200);
  const int p = r["suggested_p"];
  EXPECT_TRUE(p == 30 || p == 50 || p == 70);
  EXPECT_EQ(r["n_observations"], 0);
}

TEST_F(HttpFixture, SyntheticClientConverges) {
  user::ArmModel m;
  m.p_ref = 0.40;
  opt::SyntheticPdrSource pdr(m, 17);
  auto [s, r] = post("/optimizer/synthetic/step", json());
  ASSERT_EQ(s, 200);
  for (int i = 0; i < 12; ++i) {
    const int p = r["suggested_p"];
    std::tie(s, r) =
        post("/optimizer/synthetic/step", {{"observation", {{"p", p}, {"pdr", pdr(p)}, {"source", "synthetic"}}}});
    ASSERT_EQ(s, 200) << r.dump();
  }
  EXPECT_EQ(r["n_observations"], 12);
  EXPECT_LE(std::abs(r["best_p"].get<int>() - 40), 10);

  const auto [s2, state] = get("/optimizer/synthetic/state");
  ASSERT_EQ(s2, 200);
  EXPECT_EQ(state["observations"].size(), 12u);
  EXPECT_EQ(state["posterior"].size(), 61u);
  EXPECT_EQ(state["observations"][0]["source"], "synthetic");
}

TEST_F(HttpFixture, StreamCarriesVersionedMessages) {
  const auto [st, start] = post("/session/start", {{"task", {{"D", 300}, {"W", 20}}}});
  ASSERT_EQ(st, 201);
  const std::string id = start["session_id"];

  std::vector<json> messages;
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    std::string buffer;
    c.Get("/session/" + id + "/stream", [&](const char* data, size_t n) {
      buffer.append(data, n);
      std::size_t pos;
      while ((pos = buffer.find("\n\n")) != std::string::npos) {
        const std::string frame = buffer.substr(0, pos);
        buffer.erase(0, pos + 2);
        if (frame.rfind("data: ", 0) == 0) messages.push_back(json::parse(frame.substr(6)));
      }
      return messages.empty() || messages.back()["type"] != "complete";
    });
  });
  // Wait for the subscription before sending trials.
  for (int i = 0; i < 200 && messages.empty(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  for (const auto& t : vmouse::testing::hand_session()) ASSERT_EQ(post("/session/" + id + "/trial", trial_body(t)).first, 200);
  reader.join();

  ASSERT_GE(messages.size(), 3u);
  EXPECT_EQ(messages.front()["type"], "hello");
  int cursor = 0, trial = 0;
  for (const auto& m : messages) {
    EXPECT_EQ(m["v"], 1);
    cursor += m["type"] == "cursor";
    trial += m["type"] == "trial";
  }
  EXPECT_EQ(cursor, 15);
  EXPECT_EQ(trial, 15);
  EXPECT_EQ(messages.back()["type"], "complete");
  EXPECT_TRUE(messages.back()["summary"].contains("TP"));
}

TEST(Service, DualSensorTrialIsFusedAtSessionConfig) {
  Service svc;
  const auto start = svc.start_session({{"task", "D=300,W=20"}, {"p", 30}, {"cpi", 800}});
  const std::string id = start["session_id"];
  const auto pairs = pointing::trial_targets({300, 20});
  const auto tr = user::simulate_trial(user::ArmModel{}, pairs[0].first, pairs[0].second, 20.0,
                                       fusion::VirtualConfig::make(30, 800), 5);
  json samples = json::array();
  for (const auto& s : tr.samples) {
    samples.push_back({s.t_us, int(s.btn_left), int(s.btn_right), std::llround(s.front.dx),
                       std::llround(s.front.dy), std::llround(s.rear.dx), std::llround(s.rear.dy)});
  }
  svc.submit_trial(id, {{"samples", samples}, {"start", {tr.start.x, tr.start.y}}});
  const auto st = svc.session(id);
  ASSERT_EQ(st.trials.size(), 1u);
  EXPECT_EQ(st.trial_sources[0], "dual-sensor");
  EXPECT_DOUBLE_EQ(st.trials[0].click.x, tr.click.x);
  EXPECT_DOUBLE_EQ(st.trials[0].click.y, tr.click.y);
}

TEST(Service, OptimizerFedFromSession) {
  Service svc;
  const auto start = svc.start_session({{"task", "D=300,W=20"}, {"p", 60}, {"source", "cursor-only"}});
  const std::string id = start["session_id"];
  for (const auto& t : vmouse::testing::hand_session()) svc.submit_trial(id, trial_body(t));
  const auto r = svc.optimizer_step("o", {{"session_id", id}});
  EXPECT_EQ(r["n_observations"], 1);
  const auto state = svc.optimizer_state("o");
  EXPECT_EQ(state["observations"][0]["p"], 60.0);
  const auto summary = svc.session_summary(id);
  EXPECT_NEAR(state["observations"][0]["pdr"].get<double>(), summary["PDR"].get<double>(), 1e-12);
}

TEST(Service, CrashRestartRebuildsIdenticalState) {
  TempDir dir;
  json opt_before, sum_before;
  std::string id;
  {
    Service svc(dir.path());
    id = svc.start_session({{"task", "D=300,W=20"}, {"p", 45}})["session_id"];
    for (const auto& t : vmouse::testing::hand_session()) svc.submit_trial(id, trial_body(t));
    svc.optimizer_step("o", {{"session_id", id}});
    for (int p : {30, 70, 50, 35}) svc.optimizer_step("o", {{"observation", {{"p", p}, {"pdr", 0.001 * p}}}});
    opt_before = svc.optimizer_state("o");
    sum_before = svc.session_summary(id);
    svc.start_session({{"task", "D=900,W=50"}});
  }
  // A write cut short by the crash.
  { std::ofstream(dir.path() / "sessions" / "s000002.jsonl", std::ios::app) << R"({"kind":"trial","trial":{"pr)"; }

  Service again(dir.path());
  EXPECT_EQ(again.optimizer_state("o"), opt_before);
  EXPECT_EQ(again.session_summary(id), sum_before);
  EXPECT_EQ(again.optimizer("o"), opt::InTaskOptimizer::load(dir.path() / "optimizers" / "o.json"));
  EXPECT_EQ(again.load_warnings().size(), 1u);
  EXPECT_EQ(again.session("s000002").trials.size(), 0u);
  // Numbering continues after the restored sessions.
  EXPECT_EQ(again.start_session({{"task", "D=300,W=20"}})["session_id"], "s000003");
}

TEST(Service, StartValidation) {
  Service svc;
  EXPECT_THROW(svc.start_session(json::array()), ServiceError);
  EXPECT_THROW(svc.start_session({{"cpi", 0}}), ServiceError);
  EXPECT_THROW(svc.start_session({{"source", 3}}), ServiceError);
  EXPECT_THROW(svc.start_session(json::object()), ServiceError);
  const auto r = svc.start_session({{"task", "D=300,W=20"}});
  EXPECT_EQ(r["p"], 50);
  EXPECT_EQ(r["cpi"], 800);
  EXPECT_EQ(r["source"], "cursor-only");
}

}  // namespace
}  // namespace vmouse::app
