#ifndef RISKMAPS_SERVICE_HPP
#define RISKMAPS_SERVICE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <httplib.h>

#include "riskmaps/config_io.hpp"
#include "riskmaps/error.hpp"
#include "riskmaps/scenario.hpp"
#include "riskmaps/sim.hpp"

namespace riskmaps {

inline constexpr int kStreamVersion = 1;

/// Risk-graph color classes in %/s: below `low` is blue, from `low` up to
/// `high` red, above `high` hot.
struct ColorScale {
  double low = 0.5;
  double high = 1.0;
};

enum class RiskColor { Blue, Red, Hot };

inline RiskColor classify_rate(double rate_pct, const ColorScale& scale = {}) {
  if (rate_pct < scale.low) return RiskColor::Blue;
  if (rate_pct <= scale.high) return RiskColor::Red;
  return RiskColor::Hot;
}

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Stream messages

inline json encode_risk_field(const RiskField& f, const ColorScale& scale) {
  json rows = json::array();
  for (const auto& r : f.rows) {
    rows.push_back({{"lane", r.target_lane},
                    {"side", std::string(to_string(r.side))},
                    {"profile", r.profile},
                    {"v_end", r.end_velocity},
                    {"rates", r.rates_pct}});
  }
  return {{"step", f.step},
          {"unit", "%/s"},
          {"thresholds", {{"low", scale.low}, {"high", scale.high}}},
          {"chosen_row", f.chosen_row},
          {"committed_row", f.committed_row},
          {"rows", std::move(rows)}};
}

/// Outbound cycle state. The layout is documented in the README.
inline json encode_state(const TraceRecord& r, const std::string& session, const ColorScale& scale = {},
                         double v_max = 20.0) {
  json vehicles = json::array();
  for (const auto& v : r.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"ego", v.ego},
                        {"x", v.position.x},
                        {"y", v.position.y},
                        {"v", v.v},
                        {"a", v.a},
                        {"heading", v.heading},
                        {"lane", v.lane},
                        {"changing_lane", v.changing_lane}});
  }
  json distances = json::object();
  for (const auto& [id, d] : r.distances) distances[id] = d;
  json planned = json::array();
  for (const auto& p : r.planned) planned.push_back({p.x, p.y});
  return {{"version", kStreamVersion},
          {"type", "state"},
          {"session", session},
          {"cycle", r.cycle},
          {"t", r.time},
          {"vehicles", std::move(vehicles)},
          {"velocity_scale", {{"v0", r.v0}, {"v_tar", r.committed.v_target}, {"v_max", v_max}}},
          {"direction", std::string(to_string(r.direction))},
          {"speed_advice", std::string(to_string(r.warning.speed))},
          {"selection", {{"lane", r.committed.target_lane}, {"profile", r.committed.profile}}},
          {"raw_selection", {{"lane", r.raw.target_lane}, {"profile", r.raw.profile}}},
          {"costs", {{"R", r.risk}, {"U", r.utility}, {"O", r.comfort}, {"C", r.cost}}},
          {"distances", std::move(distances)},
          {"planned", std::move(planned)},
          {"risk_field", encode_risk_field(r.field, scale)},
          {"command_clamped", r.command_clamped}};
}

inline json encode_event(const std::string& type, const std::string& session, const std::string& detail = {}) {
  json j{{"version", kStreamVersion}, {"type", type}, {"session", session}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

struct InboundMessage {
  enum class Kind { Command, Pause, Resume, Reset };
  Kind kind = Kind::Command;
  EgoCommand command;
};

/// Parses an inbound message such as
/// {"version":1,"type":"command","accel":0.5,"lane_request":"left"}.
inline InboundMessage parse_inbound(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("inbound message is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("inbound message must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kStreamVersion) {
    throw ProtocolError("inbound message: unsupported or missing version");
  }
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("inbound message: missing type");
  const auto type = j["type"].get<std::string>();
  InboundMessage m;
  if (type == "pause") {
    m.kind = InboundMessage::Kind::Pause;
  } else if (type == "resume") {
    m.kind = InboundMessage::Kind::Resume;
  } else if (type == "reset") {
    m.kind = InboundMessage::Kind::Reset;
  } else if (type == "command") {
    m.kind = InboundMessage::Kind::Command;
    if (j.contains("accel")) {
      if (!j["accel"].is_number() || !std::isfinite(j["accel"].get<double>())) {
        throw ProtocolError("command: accel must be a finite number (m/s^2)");
      }
      m.command.accel = j["accel"].get<double>();
    }
    if (j.contains("lane_request") && !j["lane_request"].is_null()) {
      if (!j["lane_request"].is_string()) throw ProtocolError("command: lane_request must be a string");
      const auto s = j["lane_request"].get<std::string>();
      if (s == "left") {
        m.command.lane_request = Direction::Left;
      } else if (s == "right") {
        m.command.lane_request = Direction::Right;
      } else if (s != "straight") {
        throw ProtocolError("command: unknown lane_request '" + s + "'");
      }
    }
  } else {
    throw ProtocolError("inbound message: unknown type '" + type + "'");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Bounded buffer

/// Multi-producer queue with a fixed depth. A push into a full queue drops
/// the oldest element so producers never wait on a slow consumer.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("BoundedQueue: capacity must be positive");
  }

  /// Returns true when an element had to be dropped.
  bool push(T value) {
    bool dropped = false;
    {
      std::lock_guard lk(m_);
      if (items_.size() == capacity_) {
        items_.pop_front();
        ++dropped_;
        dropped = true;
      }
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
    return dropped;
  }

  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lk(m_);
    if (!cv_.wait_for(lk, timeout, [&] { return !items_.empty() || closed_; })) return std::nullopt;
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void clear() {
    std::lock_guard lk(m_);
    items_.clear();
  }

  void close() {
    {
      std::lock_guard lk(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lk(m_);
    return items_.size();
  }
  [[nodiscard]] std::size_t dropped() const {
    std::lock_guard lk(m_);
    return dropped_;
  }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

// ---------------------------------------------------------------------------
// Sessions

inline constexpr std::size_t kStreamQueueDepth = 16;

/// One scenario timeline bound to at most one client connection. The world
/// advances only while a client is attached and the session is not paused.
class Session {
 public:
  Session(std::string id, Scenario scenario, ColorScale scale = {})
      : id_(std::move(id)), world_(std::move(scenario)), scale_(scale), outbox_(kStreamQueueDepth) {}

  [[nodiscard]] const std::string& id() const { return id_; }
  BoundedQueue<std::string>& outbox() { return outbox_; }

  /// Steps the world once if it may run and queues the encoded state.
  /// Returns false when nothing was stepped.
  bool tick() {
    std::lock_guard lk(m_);
    if (!attached_ || paused_ || world_.finished()) return false;
    const auto rec = world_.step(pending_);
    pending_.reset();
    outbox_.push(encode_state(rec, id_, scale_, world_.scenario().params.probe.v_max).dump());
    if (world_.finished()) outbox_.push(encode_event("end", id_).dump());
    return true;
  }

  void apply(const InboundMessage& m) {
    std::lock_guard lk(m_);
    switch (m.kind) {
      case InboundMessage::Kind::Pause: paused_ = true; break;
      case InboundMessage::Kind::Resume: paused_ = false; break;
      case InboundMessage::Kind::Reset:
        world_.reset();
        pending_.reset();
        outbox_.clear();
        outbox_.push(encode_event("reset", id_).dump());
        break;
      case InboundMessage::Kind::Command: {
        EgoCommand c = m.command;
        // A lane request still waiting for the next step survives a newer
        // acceleration-only command.
        if (!c.lane_request && pending_ && pending_->lane_request) c.lane_request = pending_->lane_request;
        pending_ = c;
        break;
      }
    }
  }

  /// Starts a connection. States queued for an earlier, now gone reader are
  /// discarded so the new reader starts at the current cycle.
  void attach() {
    std::lock_guard lk(m_);
    outbox_.clear();
    attached_ = true;
  }
  void detach() {
    std::lock_guard lk(m_);
    attached_ = false;
  }

  [[nodiscard]] bool attached() const {
    std::lock_guard lk(m_);
    return attached_;
  }
  [[nodiscard]] bool paused() const {
    std::lock_guard lk(m_);
    return paused_;
  }
  [[nodiscard]] bool finished() const {
    std::lock_guard lk(m_);
    return world_.finished();
  }
  [[nodiscard]] std::size_t cycle() const {
    std::lock_guard lk(m_);
    return world_.cycle();
  }
  [[nodiscard]] double period() const { return world_.scenario().period(); }

 private:
  std::string id_;
  mutable std::mutex m_;
  World world_;
  ColorScale scale_;
  BoundedQueue<std::string> outbox_;
  std::optional<EgoCommand> pending_;
  bool attached_ = false;
  bool paused_ = false;
};

/// Hands the ego to live commands and drops its script.
inline void make_human_driven(Scenario& sc) {
  for (auto& v : sc.vehicles) {
    if (v.ego) {
      v.mode = VehicleMode::Human;
      v.schedule.clear();
    }
  }
}

// ---------------------------------------------------------------------------
// HTTP endpoint

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  ///< 0 picks a free port
  double speed = 1.0;  ///< world seconds per wall second
  ColorScale scale;
  std::function<void(const std::string&)> log = [](const std::string& s) { std::cerr << s << '\n'; };
};

/// Streams sessions over HTTP.
///   GET  /stream[?session=ID]   NDJSON, one message per line
///   POST /session/ID            inbound message body
///   GET  /health
/// Each GET /stream without a session id starts a new session from the
/// configured scenario. `builtin=gap|no_gap` picks a bundled scenario and
/// `human=1` hands the ego to the client.
class StreamServer {
 public:
  StreamServer(Scenario scenario, ServeOptions options) : scenario_(std::move(scenario)), opt_(std::move(options)) {
    if (!(opt_.speed > 0.0)) throw ConfigError("serve: speed must be positive");
    validate(scenario_);
    routes();
  }

  ~StreamServer() { stop(); }

  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  /// Binds and serves on a background thread. Returns the bound port.
  int start() {
    const int port = opt_.port == 0 ? svr_.bind_to_any_port(opt_.host)
                                    : (svr_.bind_to_port(opt_.host, opt_.port) ? opt_.port : -1);
    if (port < 0) throw Error("serve: cannot bind " + opt_.host + ":" + std::to_string(opt_.port));
    port_ = port;
    running_ = true;
    listener_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called from elsewhere.
  void run() {
    start();
    if (listener_.joinable()) listener_.join();
  }

  void stop() {
    if (!running_.exchange(false)) return;
    svr_.stop();
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::lock_guard lk(m_);
      for (auto& [_, e] : sessions_) entries.push_back(e);
    }
    for (auto& e : entries) {
      e->stop = true;
      e->session->outbox().close();
      if (e->worker.joinable()) e->worker.join();
    }
    if (listener_.joinable()) listener_.join();
  }

  [[nodiscard]] int port() const { return port_; }

  std::shared_ptr<Session> session(const std::string& id) const {
    std::lock_guard lk(m_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second->session;
  }

  [[nodiscard]] std::size_t session_count() const {
    std::lock_guard lk(m_);
    return sessions_.size();
  }

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    std::thread worker;
    std::atomic<bool> stop{false};
  };

  Scenario scenario_for(const httplib::Request& req) const {
    Scenario sc = scenario_;
    if (req.has_param("builtin")) {
      const auto b = req.get_param_value("builtin");
      if (b == "gap") {
        sc = make_gap_scenario();
      } else if (b == "no_gap") {
        sc = make_no_gap_scenario();
      } else {
        throw ConfigError("unknown builtin scenario '" + b + "'");
      }
    }
    if (req.has_param("human") && req.get_param_value("human") == "1") make_human_driven(sc);
    return sc;
  }

  std::shared_ptr<Entry> create_session(Scenario sc) {
    auto e = std::make_shared<Entry>();
    std::string id;
    {
      std::lock_guard lk(m_);
      id = "s" + std::to_string(++next_id_);
    }
    e->session = std::make_shared<Session>(id, std::move(sc), opt_.scale);
    const auto period = std::chrono::duration<double>(e->session->period() / opt_.speed);
    Entry* raw = e.get();
    e->worker = std::thread([raw, period] {
      using clock = std::chrono::steady_clock;
      auto next = clock::now();
      while (!raw->stop) {
        next += std::chrono::duration_cast<clock::duration>(period);
        std::this_thread::sleep_until(next);
        // An idle session does not accumulate a backlog of due cycles.
        if (!raw->session->tick()) next = clock::now();
      }
    });
    std::lock_guard lk(m_);
    sessions_[id] = e;
    return e;
  }

  void routes() {
    svr_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"version", kStreamVersion}, {"status", "ok"}}.dump(), "application/json");
    });

    svr_.Get("/stream", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<Session> s;
      try {
        if (req.has_param("session")) {
          s = session(req.get_param_value("session"));
          if (!s) {
            res.status = 404;
            res.set_content(encode_event("error", "", "unknown session").dump(), "application/json");
            return;
          }
          if (s->attached()) {
            res.status = 409;
            res.set_content(encode_event("error", s->id(), "session already has a client").dump(),
                            "application/json");
            return;
          }
        } else {
          s = create_session(scenario_for(req))->session;
        }
      } catch (const Error& e) {
        res.status = 400;
        res.set_content(encode_event("error", "", e.what()).dump(), "application/json");
        return;
      }
      s->attach();
      opt_.log("session " + s->id() + ": client attached");
      auto hello = std::make_shared<bool>(true);
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [s, hello](std::size_t, httplib::DataSink& sink) {
            std::string line;
            if (*hello) {
              *hello = false;
              line = encode_event("hello", s->id()).dump();
            } else if (auto msg = s->outbox().pop(std::chrono::milliseconds(1000))) {
              line = std::move(*msg);
            } else {
              // Keeps writing while idle so a vanished client is noticed.
              line = encode_event("heartbeat", s->id()).dump();
            }
            line += '\n';
            return sink.write(line.data(), line.size());
          },
          [this, s](bool) {
            s->detach();
            opt_.log("session " + s->id() + ": client detached, world paused");
          });
    });

    svr_.Post(R"(/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req.matches[1]);
      if (!s) {
        res.status = 404;
        res.set_content(encode_event("error", "", "unknown session").dump(), "application/json");
        return;
      }
      try {
        s->apply(parse_inbound(req.body));
        res.set_content(encode_event("ack", s->id()).dump(), "application/json");
      } catch (const ProtocolError& e) {
        opt_.log("session " + s->id() + ": ignored malformed message: " + e.what());
        res.status = 400;
        res.set_content(encode_event("error", s->id(), e.what()).dump(), "application/json");
      }
    });
  }

  Scenario scenario_;
  ServeOptions opt_;
  httplib::Server svr_;
  std::thread listener_;
  std::atomic<bool> running_{false};
  int port_ = -1;
  mutable std::mutex m_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t next_id_ = 0;
};

// ---------------------------------------------------------------------------
// Batch mode

enum class RunMode { Batch, Serve };

struct RunConfig {
  std::optional<std::string> scenario_path;
  std::optional<std::string> builtin;  ///< "gap" or "no_gap"
  std::optional<std::uint64_t> seed;
  std::optional<bool> noise;
  std::vector<std::string> overrides;  ///< "group.key=value"
  std::string out_dir = "out";
  RunMode mode = RunMode::Batch;
  std::string listen = "127.0.0.1:8080";
};

inline Scenario builtin_scenario(const std::string& name) {
  if (name == "gap") return make_gap_scenario();
  if (name == "no_gap") return make_no_gap_scenario();
  throw ConfigError("unknown builtin scenario '" + name + "' (expected gap or no_gap)");
}

/// Loads the configured scenario and applies seed, noise and overrides.
inline Scenario resolve_scenario(const RunConfig& cfg) {
  if (cfg.scenario_path.has_value() == cfg.builtin.has_value()) {
    throw ConfigError("exactly one of a scenario file or a builtin scenario is required");
  }
  Scenario sc = cfg.scenario_path ? load_scenario(*cfg.scenario_path) : builtin_scenario(*cfg.builtin);
  if (cfg.seed) sc.seed = *cfg.seed;
  if (cfg.noise) sc.noise.enabled = *cfg.noise;
  for (const auto& o : cfg.overrides) apply_override(sc.params, o);
  validate(sc);
  return sc;
}

/// Parses "host:port"; a bare port binds 127.0.0.1.
inline std::pair<std::string, int> parse_listen(const std::string& s) {
  const auto colon = s.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : s.substr(0, colon);
  const std::string port = colon == std::string::npos ? s : s.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535 || host.empty()) throw ConfigError("");
    return {host, p};
  } catch (const std::exception&) {
    throw ConfigError("listen address '" + s + "' is not host:port");
  }
}

/// Nearest-rank percentile of `values` (q in (0, 1]).
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

inline json summarize(const Scenario& sc, const std::vector<TraceRecord>& trace) {
  json advice = json::array();
  std::string last;
  for (const auto& r : trace) {
    const std::string key = std::string(to_string(r.direction)) + "/" + std::string(to_string(r.warning.speed));
    if (key == last) continue;
    last = key;
    advice.push_back({{"t", r.time},
                      {"cycle", r.cycle},
                      {"direction", std::string(to_string(r.direction))},
                      {"speed", std::string(to_string(r.warning.speed))},
                      {"lane", r.committed.target_lane},
                      {"v0", r.v0},
                      {"v_tar", r.committed.v_target}});
  }
  json directions = json::array();
  for (auto d : direction_sequence(trace)) directions.push_back(std::string(to_string(d)));

  json min_dist = json::object();
  for (const auto& r : trace) {
    for (const auto& [id, d] : r.distances) {
      if (!min_dist.contains(id) || d < min_dist[id]["value"].get<double>()) {
        min_dist[id] = {{"value", d}, {"t", r.time}};
      }
    }
  }
  std::vector<double> ms;
  for (const auto& r : trace) ms.push_back(r.compute_ms);
  double mean = 0.0;
  for (double x : ms) mean += x;
  if (!ms.empty()) mean /= static_cast<double>(ms.size());

  std::size_t switches = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!trace[i].committed.same_as(trace[i - 1].committed)) ++switches;
  }
  return {{"version", kStreamVersion},
          {"scenario", sc.name},
          {"seed", sc.seed},
          {"noise", sc.noise.enabled},
          {"cycles", trace.size()},
          {"advice", std::move(advice)},
          {"direction_sequence", std::move(directions)},
          {"committed_switches", switches},
          {"min_distance_m", std::move(min_dist)},
          {"compute_ms",
           {{"mean", mean},
            {"p95", percentile(ms, 0.95)},
            {"max", ms.empty() ? 0.0 : *std::max_element(ms.begin(), ms.end())}}},
          {"files", {{"trace", "trace.csv"}, {"risk_field", "risk_field.txt"}}}};
}

inline void write_text_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  body(os);
  if (!os) throw Error("write failed: " + p.string());
}

/// Exit statuses shared by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfigError = 2;

/// Runs the scenario to completion and writes trace.csv, risk_field.txt and
/// summary.json into the output directory.
inline int run_batch(const RunConfig& cfg, std::ostream& log = std::cerr) {
  try {
    const Scenario sc = resolve_scenario(cfg);
    const auto trace = run_scenario(sc);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, trace); });
    write_text_file(dir / "risk_field.txt", [&](std::ostream& os) { write_risk_fields(os, trace); });
    const auto summary = summarize(sc, trace);
    write_text_file(dir / "summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
    log << sc.name << ": " << trace.size() << " cycles, compute p95 "
        << summary["compute_ms"]["p95"].get<double>() << " ms, output in " << dir.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

/// Serves the configured scenario on `cfg.listen` until `stop` becomes true.
/// `base` supplies speed, colors and logging; its host and port are replaced.
inline int run_serve(const RunConfig& cfg, ServeOptions base, const std::atomic<bool>& stop, bool human = false) {
  try {
    Scenario sc = resolve_scenario(cfg);
    if (human) make_human_driven(sc);
    std::tie(base.host, base.port) = parse_listen(cfg.listen);
    const auto log = base.log;
    const auto host = base.host;
    StreamServer server(std::move(sc), std::move(base));
    const int port = server.start();
    log("serving on http://" + host + ":" + std::to_string(port) + "/stream");
    while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    return kExitOk;
  } catch (const ConfigError& e) {
    base.log(std::string("config error: ") + e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    base.log(std::string("error: ") + e.what());
    return kExitError;
  }
}

// ---------------------------------------------------------------------------
// Risk-field export

inline const TraceRecord& record_at(const std::vector<TraceRecord>& trace, std::size_t cycle) {
  for (const auto& r : trace) {
    if (r.cycle == cycle) return r;
  }
  throw Error("cycle " + std::to_string(cycle) + " is not in the trace");
}

/// Writes the risk-field grid of one recorded cycle.
inline void export_risk_field(std::ostream& os, const std::vector<TraceRecord>& trace, std::size_t cycle) {
  write_risk_field(os, record_at(trace, cycle));
}

/// Binary PPM heatmap of one cycle's risk field: one row block per sample,
/// blue/red/hot by the color scale, the committed sample outlined in green.
inline void write_risk_field_ppm(std::ostream& os, const RiskField& f, const ColorScale& scale = {},
                                 int cell = 6) {
  const std::size_t rows = f.rows.size();
  const std::size_t cols = rows == 0 ? 0 : f.rows.front().rates_pct.size();
  const std::size_t w = cols * static_cast<std::size_t>(cell);
  const std::size_t h = rows * static_cast<std::size_t>(cell);
  os << "P6\n" << w << ' ' << h << "\n255\n";
  for (std::size_t py = 0; py < h; ++py) {
    const std::size_t r = py / static_cast<std::size_t>(cell);
    const bool edge_y = py % static_cast<std::size_t>(cell) == 0 ||
                        py % static_cast<std::size_t>(cell) == static_cast<std::size_t>(cell - 1);
    for (std::size_t px = 0; px < w; ++px) {
      const std::size_t c = px / static_cast<std::size_t>(cell);
      const double rate = c < f.rows[r].rates_pct.size() ? f.rows[r].rates_pct[c] : 0.0;
      unsigned char rgb[3];
      switch (classify_rate(rate, scale)) {
        case RiskColor::Blue: rgb[0] = 40, rgb[1] = 80, rgb[2] = 200; break;
        case RiskColor::Red: rgb[0] = 220, rgb[1] = 60, rgb[2] = 40; break;
        case RiskColor::Hot: rgb[0] = 140, rgb[1] = 0, rgb[2] = 0; break;
      }
      if (r == f.committed_row && edge_y) rgb[0] = 40, rgb[1] = 200, rgb[2] = 60;
      os.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

}  // namespace riskmaps

#endif  // RISKMAPS_SERVICE_HPP
