#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "riskmaps/service.hpp"

using namespace riskmaps;
using namespace std::chrono_literals;

namespace {

ServeOptions quiet(double speed) {
  ServeOptions o;
  o.port = 0;
  o.speed = speed;
  o.log = [](const std::string&) {};
  return o;
}

// Reads NDJSON lines from GET `path` until `keep(msg)` returns false.
template <typename Keep>
std::vector<json> stream(int port, const std::string& path, Keep&& keep) {
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  std::vector<json> msgs;
  std::string buf;
  cli.Get(path, [&](const char* data, std::size_t len) {
    buf.append(data, len);
    for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
      msgs.push_back(json::parse(buf.substr(0, nl)));
      buf.erase(0, nl + 1);
      if (!keep(msgs.back())) return false;
    }
    return true;
  });
  return msgs;
}

std::vector<json> states_of(const std::vector<json>& msgs) {
  std::vector<json> out;
  for (const auto& m : msgs) {
    if (m["type"] == "state") out.push_back(m);
  }
  return out;
}

template <typename Pred>
bool wait_for(Pred&& pred, std::chrono::milliseconds limit = 5s) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

}  // namespace

TEST(BoundedQueue, DropsOldestWhenFull) {
  BoundedQueue<int> q(16);
  for (int i = 0; i < 20; ++i) q.push(i);
  EXPECT_EQ(q.size(), 16u);
  EXPECT_EQ(q.dropped(), 4u);
  for (int i = 4; i < 20; ++i) EXPECT_EQ(q.pop(0ms), i);
  EXPECT_FALSE(q.pop(1ms).has_value());
  EXPECT_THROW(BoundedQueue<int>(0), Error);
}

TEST(BoundedQueue, CloseWakesWaiters) {
  BoundedQueue<int> q(4);
  std::thread t([&] {
    std::this_thread::sleep_for(20ms);
    q.close();
  });
  const auto start = std::chrono::steady_clock::now();
  EXPECT_FALSE(q.pop(5s).has_value());
  EXPECT_LT(std::chrono::steady_clock::now() - start, 2s);
  t.join();
}

TEST(Inbound, ParsesCommands) {
  auto m = parse_inbound(R"({"version":1,"type":"command","accel":-1.5,"lane_request":"left"})");
  EXPECT_EQ(m.kind, InboundMessage::Kind::Command);
  EXPECT_DOUBLE_EQ(m.command.accel, -1.5);
  EXPECT_EQ(m.command.lane_request, Direction::Left);
  m = parse_inbound(R"({"version":1,"type":"command","lane_request":"straight"})");
  EXPECT_FALSE(m.command.lane_request.has_value());
  EXPECT_EQ(parse_inbound(R"({"version":1,"type":"pause"})").kind, InboundMessage::Kind::Pause);
  EXPECT_EQ(parse_inbound(R"({"version":1,"type":"resume"})").kind, InboundMessage::Kind::Resume);
  EXPECT_EQ(parse_inbound(R"({"version":1,"type":"reset"})").kind, InboundMessage::Kind::Reset);
}

TEST(Inbound, RejectsMalformed) {
  for (const char* bad : {"not json", "[1,2]", R"({"type":"pause"})", R"({"version":2,"type":"pause"})",
                          R"({"version":1})", R"({"version":1,"type":"jump"})",
                          R"({"version":1,"type":"command","accel":"fast"})",
                          R"({"version":1,"type":"command","lane_request":"up"})",
                          R"({"version":1,"type":"command","lane_request":3})"}) {
    EXPECT_THROW(parse_inbound(bad), ProtocolError) << bad;
  }
}

TEST(Outbound, StateMessageSchema) {
  World w(make_gap_scenario());
  const auto j = encode_state(w.step(), "s1");
  EXPECT_EQ(j["version"], kStreamVersion);
  EXPECT_EQ(j["type"], "state");
  EXPECT_EQ(j["cycle"], 0);
  EXPECT_EQ(j["vehicles"].size(), 3u);
  EXPECT_EQ(j["direction"], "left");
  EXPECT_EQ(j["speed_advice"], "accelerate");
  EXPECT_DOUBLE_EQ(j["velocity_scale"]["v0"].get<double>(), 7.0);
  EXPECT_GT(j["velocity_scale"]["v_tar"].get<double>(), 7.0);
  EXPECT_DOUBLE_EQ(j["risk_field"]["thresholds"]["low"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["risk_field"]["thresholds"]["high"].get<double>(), 1.0);
  EXPECT_EQ(j["risk_field"]["unit"], "%/s");
  EXPECT_EQ(j["risk_field"]["rows"].size(), 42u);
  EXPECT_EQ(j["risk_field"]["rows"][0]["rates"].size(), 60u);
  for (const char* k : {"t", "session", "selection", "raw_selection", "costs", "distances", "planned",
                        "command_clamped"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

TEST(Outbound, ColorClasses) {
  EXPECT_EQ(classify_rate(0.0), RiskColor::Blue);
  EXPECT_EQ(classify_rate(0.49), RiskColor::Blue);
  EXPECT_EQ(classify_rate(0.5), RiskColor::Red);
  EXPECT_EQ(classify_rate(1.0), RiskColor::Red);
  EXPECT_EQ(classify_rate(1.01), RiskColor::Hot);
}

TEST(Session, AdvancesOnlyWhileAttachedAndRunning) {
  Session s("s", make_gap_scenario());
  EXPECT_FALSE(s.tick());
  s.attach();
  EXPECT_TRUE(s.tick());
  s.apply(parse_inbound(R"({"version":1,"type":"pause"})"));
  EXPECT_FALSE(s.tick());
  s.apply(parse_inbound(R"({"version":1,"type":"resume"})"));
  EXPECT_TRUE(s.tick());
  s.detach();
  EXPECT_FALSE(s.tick());
  EXPECT_EQ(s.cycle(), 2u);
  s.attach();
  s.apply(parse_inbound(R"({"version":1,"type":"reset"})"));
  EXPECT_EQ(s.cycle(), 0u);
  EXPECT_EQ(json::parse(*s.outbox().pop(0ms))["type"], "reset");
}

TEST(Session, StalledClientDropsOldestButWorldKeepsGoing) {
  Session s("s", make_gap_scenario());
  s.attach();
  for (int i = 0; i < 100; ++i) ASSERT_TRUE(s.tick());
  EXPECT_EQ(s.cycle(), 100u);
  EXPECT_EQ(s.outbox().size(), kStreamQueueDepth);
  EXPECT_EQ(s.outbox().dropped(), 100u - kStreamQueueDepth);
  EXPECT_EQ(json::parse(*s.outbox().pop(0ms))["cycle"], 100 - static_cast<int>(kStreamQueueDepth));
}

TEST(Session, ScriptedSessionMatchesBatch) {
  const auto sc = make_no_gap_scenario();
  const auto batch = run_scenario(sc);
  Session s("s", sc);
  s.attach();
  std::size_t k = 0;
  while (s.tick()) {
    const auto msg = json::parse(*s.outbox().pop(0ms));
    ASSERT_LT(k, batch.size());
    EXPECT_EQ(msg, encode_state(batch[k], "s")) << "cycle " << k;
    ++k;
  }
  EXPECT_EQ(k, batch.size());
  EXPECT_EQ(json::parse(*s.outbox().pop(0ms))["type"], "end");
}

TEST(Session, LaneRequestSurvivesLaterAccelCommand) {
  Scenario sc = make_gap_scenario();
  make_human_driven(sc);
  Session s("s", sc);
  s.attach();
  s.tick();
  s.apply(parse_inbound(R"({"version":1,"type":"command","lane_request":"left"})"));
  s.apply(parse_inbound(R"({"version":1,"type":"command","accel":0.5})"));
  s.tick();
  s.tick();
  json last;
  while (auto m = s.outbox().pop(0ms)) last = json::parse(*m);
  bool changing = false;
  for (const auto& v : last["vehicles"]) {
    if (v["ego"].get<bool>()) changing = v["changing_lane"].get<bool>();
  }
  EXPECT_TRUE(changing);
}

TEST(Server, StreamsStateAtPlannerCadence) {
  StreamServer server(make_gap_scenario(), quiet(5.0));
  const int port = server.start();
  const auto batch = run_scenario(make_gap_scenario());
  const auto msgs = stream(port, "/stream", [](const json& m) { return !(m["type"] == "state" && m["cycle"] == 9); });
  ASSERT_FALSE(msgs.empty());
  EXPECT_EQ(msgs.front()["type"], "hello");
  const auto states = states_of(msgs);
  ASSERT_FALSE(states.empty());
  int prev = -1;
  for (const auto& st : states) {
    const int c = st["cycle"].get<int>();
    EXPECT_GT(c, prev);
    prev = c;
    EXPECT_EQ(st, encode_state(batch[static_cast<std::size_t>(c)], st["session"].get<std::string>()));
  }
  server.stop();
}

TEST(Server, ConcurrentSessionsAreIndependent) {
  StreamServer server(make_gap_scenario(), quiet(10.0));
  const int port = server.start();
  std::vector<json> a, b;
  auto until = [](int cycle) { return [cycle](const json& m) { return !(m["type"] == "state" && m["cycle"] == cycle); }; };
  std::thread ta([&] { a = states_of(stream(port, "/stream", until(5))); });
  std::thread tb([&] { b = states_of(stream(port, "/stream?builtin=no_gap", until(5))); });
  ta.join();
  tb.join();
  ASSERT_FALSE(a.empty());
  ASSERT_FALSE(b.empty());
  EXPECT_NE(a.front()["session"], b.front()["session"]);
  EXPECT_EQ(a.front()["direction"], "left");
  EXPECT_EQ(b.front()["direction"], "straight");
  EXPECT_EQ(server.session_count(), 2u);
  server.stop();
}

TEST(Server, CommandsDisconnectAndReattach) {
  StreamServer server(make_gap_scenario(), quiet(10.0));
  const int port = server.start();
  std::string id;
  stream(port, "/stream?human=1", [&](const json& m) {
    id = m["session"].get<std::string>();
    return !(m["type"] == "state" && m["cycle"] == 3);
  });
  auto s = server.session(id);
  ASSERT_TRUE(s);
  ASSERT_TRUE(wait_for([&] { return !s->attached(); }));
  const auto paused_at = s->cycle();
  std::this_thread::sleep_for(100ms);
  EXPECT_EQ(s->cycle(), paused_at);

  httplib::Client cli("127.0.0.1", port);
  auto bad = cli.Post("/session/" + id, "{\"version\":1,\"type\":\"warp\"}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto ok = cli.Post("/session/" + id, R"({"version":1,"type":"command","lane_request":"left"})", "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(cli.Post("/session/nobody", "{}", "application/json")->status, 404);

  // Reattach and drive to the end; the requested lane change happens.
  const auto msgs = stream(port, "/stream?session=" + id, [](const json& m) { return m["type"] != "end"; });
  const auto states = states_of(msgs);
  ASSERT_FALSE(states.empty());
  EXPECT_GE(states.front()["cycle"].get<std::size_t>(), paused_at);
  const auto& last = states.back();
  for (const auto& v : last["vehicles"]) {
    if (v["ego"].get<bool>()) {
      EXPECT_EQ(v["lane"], "L");
    }
  }
  EXPECT_EQ(last["direction"], "straight");
  EXPECT_EQ(cli.Get("/stream?session=nobody")->status, 404);
  EXPECT_EQ(cli.Get("/stream?builtin=nope")->status, 400);
  EXPECT_EQ(cli.Get("/health")->status, 200);
  server.stop();
}

TEST(Batch, WritesTraceRiskFieldAndSummary) {
  const auto dir = std::filesystem::temp_directory_path() / "riskmaps_batch_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg;
  cfg.builtin = "gap";
  cfg.out_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(run_batch(cfg, log), kExitOk) << log.str();
  EXPECT_TRUE(std::filesystem::exists(dir / "trace.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "risk_field.txt"));
  const auto summary = read_json_file((dir / "summary.json").string());
  EXPECT_EQ(summary["advice"][0]["t"], 0.0);
  EXPECT_EQ(summary["advice"][0]["direction"], "left");
  EXPECT_EQ(summary["direction_sequence"], json::array({"left", "straight"}));
  EXPECT_GT(summary["compute_ms"]["p95"].get<double>(), 0.0);
  EXPECT_TRUE(summary["min_distance_m"].contains("front"));
  std::filesystem::remove_all(dir);
}

TEST(Batch, ConfigErrorsHaveTheirOwnExitStatus) {
  const auto dir = std::filesystem::temp_directory_path() / "riskmaps_batch_bad";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"name": "x", "vehicles": []})";
  RunConfig cfg;
  cfg.scenario_path = (dir / "bad.json").string();
  cfg.out_dir = (dir / "out").string();
  std::ostringstream log;
  EXPECT_EQ(run_batch(cfg, log), kExitConfigError);
  EXPECT_NE(log.str().find("config error"), std::string::npos);

  RunConfig neither;
  EXPECT_EQ(run_batch(neither, log), kExitConfigError);
  RunConfig bad_override;
  bad_override.builtin = "gap";
  bad_override.overrides = {"risk.escape_time=0"};
  EXPECT_EQ(run_batch(bad_override, log), kExitConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Batch, HelpersAndExport) {
  EXPECT_DOUBLE_EQ(percentile({5, 1, 3, 2, 4}, 0.95), 5.0);
  EXPECT_DOUBLE_EQ(percentile({5, 1, 3, 2, 4}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({}, 0.95), 0.0);
  EXPECT_EQ(parse_listen("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(parse_listen("8081").second, 8081);
  EXPECT_THROW(parse_listen("host:port"), ConfigError);

  Scenario sc = make_gap_scenario();
  sc.duration = 0.5;
  const auto trace = run_scenario(sc);
  std::ostringstream os;
  export_risk_field(os, trace, 3);
  EXPECT_EQ(os.str().rfind("# cycle 3 ", 0), 0u);
  EXPECT_THROW(export_risk_field(os, trace, 5), Error);

  std::ostringstream ppm;
  write_risk_field_ppm(ppm, trace.front().field, {}, 2);
  EXPECT_EQ(ppm.str().rfind("P6\n120 84\n255\n", 0), 0u);
  EXPECT_EQ(ppm.str().size(), std::string("P6\n120 84\n255\n").size() + 120u * 84u * 3u);
}
