#ifndef RISKMAPS_SIM_HPP
#define RISKMAPS_SIM_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "riskmaps/config_io.hpp"
#include "riskmaps/planner.hpp"
#include "riskmaps/rldm.hpp"
#include "riskmaps/scenario.hpp"

namespace riskmaps {

/// Live input for a human-driven ego. The acceleration is held until the next
/// command; a lane request is consumed once.
struct EgoCommand {
  double accel = 0.0;
  std::optional<Direction> lane_request;
};

struct VehicleSnapshot {
  std::string id;
  bool ego = false;
  WorldPoint position;
  double v = 0.0;
  double a = 0.0;
  double heading = 0.0;
  std::string lane;
  bool changing_lane = false;
};

/// Critical event rates over (path option, velocity profile) and the
/// visualization horizon, in %/s.
struct RiskField {
  struct Row {
    std::string target_lane;
    Direction side = Direction::Straight;
    int profile = 0;
    double end_velocity = 0.0;
    std::vector<double> rates_pct;
  };
  double step = 0.1;
  std::vector<Row> rows;
  std::size_t chosen_row = 0;
  std::size_t committed_row = 0;
};

struct TraceRecord {
  std::size_t cycle = 0;
  double time = 0.0;
  std::vector<VehicleSnapshot> vehicles;
  double v0 = 0.0;  ///< observed ego speed fed to the planner
  Selection raw;
  Selection committed;
  Direction direction = Direction::Straight;
  Warning warning;
  double risk = 0.0;
  double utility = 0.0;
  double comfort = 0.0;
  double cost = 0.0;
  std::vector<std::pair<std::string, double>> distances;  ///< ego to each other vehicle, m
  std::vector<WorldPoint> planned;                        ///< committed ego trajectory
  RiskField field;
  bool command_clamped = false;
  double compute_ms = 0.0;  ///< planner wall time; not part of the exported trace
};

inline constexpr double kVisualizationHorizon = 6.0;

inline RiskField make_risk_field(const CycleResult& r, double step, double horizon = kVisualizationHorizon) {
  RiskField f;
  f.step = step;
  const auto cols = static_cast<std::size_t>(std::llround(horizon / step));
  const auto* committed = find_cell(r.situation, r.raw.table, r.committed);
  for (std::size_t i = 0; i < r.raw.table.cells.size(); ++i) {
    const auto& c = r.raw.table.cells[i];
    const auto& opt = r.situation.options[c.option];
    RiskField::Row row{opt.target_lane, opt.side, c.profile.index, c.profile.end_velocity, {}};
    for (std::size_t k = 0; k < cols && k < c.cost.rate_trace.size(); ++k) {
      row.rates_pct.push_back(100.0 * c.cost.rate_trace[k]);
    }
    if (i == r.raw.chosen) f.chosen_row = f.rows.size();
    if (&c == committed) f.committed_row = f.rows.size();
    f.rows.push_back(std::move(row));
  }
  return f;
}

/// Deterministic scenario engine stepping all vehicles at the scenario rate
/// and running one planning cycle per step.
class World {
 public:
  explicit World(Scenario scenario) : scenario_(std::move(scenario)), planner_(scenario_.params) {
    validate(scenario_);
    reset();
  }

  void reset() {
    graph_ = build_graph(scenario_.map);
    graph_.add_node(Node{"gnss", NodeLabel::Sensor, {{attr::kSensorType, std::string("GNSS")}}});
    graph_.add_node(Node{"camera", NodeLabel::Sensor, {{attr::kSensorType, std::string("camera")}}});
    ego_id_ = scenario_.ego().id;
    graph_.add_node(Node{ego_id_, NodeLabel::Vehicle, {}});
    graph_.add_relation(ego_id_, RelationLabel::HasPart, "gnss");
    graph_.add_relation(ego_id_, RelationLabel::HasPart, "camera");
    planner_ = Planner(scenario_.params);
    planner_.reset(scenario_.ego().lane);
    rng_.seed(scenario_.seed);
    cycle_ = 0;
    command_ = {};
    vehicles_.clear();
    for (const auto& spec : scenario_.vehicles) {
      Vehicle v;
      v.spec = spec;
      v.drive = make_path(detail::lane_chain(graph_, spec.lane, std::numeric_limits<double>::infinity()).points);
      v.s = std::clamp(spec.s, 0.0, v.drive.length());
      v.v = spec.v;
      vehicles_.push_back(std::move(v));
    }
  }

  [[nodiscard]] bool finished() const { return cycle_ >= scenario_.cycles(); }
  [[nodiscard]] double time() const { return static_cast<double>(cycle_) * scenario_.period(); }
  [[nodiscard]] std::size_t cycle() const { return cycle_; }
  [[nodiscard]] const Scenario& scenario() const { return scenario_; }
  [[nodiscard]] const MapGraph& graph() const { return graph_; }
  [[nodiscard]] const std::string& ego_id() const { return ego_id_; }
  [[nodiscard]] const CycleResult& last_cycle() const { return last_; }

  /// Observes, plans and records the current state, then advances the world
  /// by one period. `command` replaces the held ego command.
  TraceRecord step(const std::optional<EgoCommand>& command = std::nullopt) {
    const double t = time();
    const double dt = scenario_.period();
    TraceRecord rec;
    rec.cycle = cycle_;
    rec.time = t;

    if (command) {
      command_ = *command;
      const auto& probe = scenario_.params.probe;
      const double clamped = std::clamp(command_.accel, probe.a_min, probe.a_max);
      rec.command_clamped = clamped != command_.accel;
      command_.accel = clamped;
    }
    apply_lane_changes(t);

    for (const auto& v : vehicles_) rec.vehicles.push_back(snapshot(v));

    std::vector<EntityState> observed;
    for (const auto& v : vehicles_) {
      EntityState s{v.spec.id, position_at(v.drive, v.s), v.v, heading_at(v.drive, v.s), t};
      if (scenario_.noise.enabled) {
        std::normal_distribution<double> pos(0.0, scenario_.noise.position_sd);
        std::normal_distribution<double> vel(0.0, scenario_.noise.velocity_sd);
        s.position.x += pos(rng_);
        s.position.y += pos(rng_);
        s.v = std::max(0.0, s.v + vel(rng_));
      }
      ingest_measurement(graph_, v.spec.ego ? "gnss" : "camera", s, dt);
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<EntityState> others;
    for (const auto& [id, st] : graph_.states()) {
      if (id != ego_id_) others.push_back(st);
    }
    last_ = planner_.cycle(graph_, *graph_.state(ego_id_), others);
    rec.compute_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    rec.v0 = last_.situation.ego.v;
    rec.raw = last_.raw.selection;
    rec.committed = last_.committed;
    rec.direction = last_.direction;
    rec.warning = last_.warning;
    const auto& chosen = last_.chosen_cell().cost;
    rec.risk = chosen.risk;
    rec.utility = chosen.utility;
    rec.comfort = chosen.comfort;
    rec.cost = chosen.cost;
    for (const auto& v : vehicles_) {
      if (!v.spec.ego) rec.distances.emplace_back(v.spec.id, distance_between(graph_, ego_id_, v.spec.id));
    }
    if (const auto* cell = find_cell(last_.situation, last_.raw.table, last_.committed)) {
      const auto n = static_cast<std::size_t>(std::llround(kVisualizationHorizon / scenario_.params.probe.step));
      for (std::size_t i = 0; i <= n && i < cell->trajectory.points.size(); ++i) {
        rec.planned.push_back(cell->trajectory.points[i].position);
      }
    }
    rec.field = make_risk_field(last_, scenario_.params.probe.step);

    advance(t, dt);
    ++cycle_;
    return rec;
  }

 private:
  struct Vehicle {
    VehicleSpec spec;
    Path drive;
    double s = 0.0;
    double v = 0.0;
    double a = 0.0;
    std::size_t next_event = 0;
    std::optional<double> change_end;  ///< drive arclength where the lane change completes
  };

  [[nodiscard]] VehicleSnapshot snapshot(const Vehicle& v) const {
    VehicleSnapshot s;
    s.id = v.spec.id;
    s.ego = v.spec.ego;
    s.position = position_at(v.drive, v.s);
    s.v = v.v;
    s.a = v.a;
    s.heading = heading_at(v.drive, v.s);
    s.lane = graph_.nearest_lane(s.position).value_or("");
    s.changing_lane = v.change_end.has_value();
    return s;
  }

  void start_lane_change(Vehicle& v, Direction side) {
    if (v.change_end || side == Direction::Straight) return;
    const auto pos = position_at(v.drive, v.s);
    const auto lane = graph_.nearest_lane(pos);
    if (!lane) return;
    const auto target = graph_.neighbor(*lane, side);
    if (!target) return;
    const Path target_path =
        make_path(detail::lane_chain(graph_, *target, std::numeric_limits<double>::infinity()).points);
    const auto proj = project_to_path(pos, target_path);
    const auto& p = scenario_.params;
    BlendSpec spec;
    spec.start_time = 0.0;
    spec.steepness = p.blend_steepness;
    spec.lateral_gap = proj.abs_offset();
    if (spec.lateral_gap > 1e-6) spec.scale = p.blend_duration * p.blend_duration / spec.lateral_gap;
    auto blended = blend_paths(v.drive, target_path, std::max(v.v, 1.0), spec, v.s, proj.arclength);
    v.drive = std::move(blended.path);
    v.s = blended.origin;
    v.change_end = blended.origin + blended.window.end;
  }

  void apply_lane_changes(double t) {
    for (auto& v : vehicles_) {
      if (v.change_end && v.s >= *v.change_end) v.change_end.reset();
      if (v.spec.mode == VehicleMode::Scripted) {
        while (v.next_event < v.spec.schedule.size() && v.spec.schedule[v.next_event].time <= t + 1e-9) {
          const auto& e = v.spec.schedule[v.next_event++];
          if (e.lane_change) start_lane_change(v, *e.lane_change);
        }
      } else if (v.spec.mode == VehicleMode::Human && command_.lane_request) {
        start_lane_change(v, *command_.lane_request);
        command_.lane_request.reset();
      }
    }
  }

  // Piecewise-linear scripted speed through (0, v_init) and the keypoints.
  [[nodiscard]] static double scripted_speed(const VehicleSpec& spec, double t) {
    double t0 = 0.0;
    double v0 = spec.v;
    for (const auto& e : spec.schedule) {
      if (!e.v) continue;
      if (t <= e.time) {
        if (e.time - t0 <= 1e-12) return *e.v;
        return v0 + (*e.v - v0) * (t - t0) / (e.time - t0);
      }
      t0 = e.time;
      v0 = *e.v;
    }
    return v0;
  }

  void advance(double t, double dt) {
    const double v_max = scenario_.params.probe.v_max;
    for (auto& v : vehicles_) {
      double next = v.v;
      switch (v.spec.mode) {
        case VehicleMode::Scripted: next = scripted_speed(v.spec, t + dt); break;
        case VehicleMode::Human: next = std::clamp(v.v + command_.accel * dt, 0.0, v_max); break;
        case VehicleMode::ConstantVelocity: break;
      }
      v.s += 0.5 * (v.v + next) * dt;
      v.a = (next - v.v) / dt;
      v.v = next;
      if (v.s >= v.drive.length()) {
        v.s = v.drive.length();
        v.v = 0.0;
        v.a = 0.0;
      }
    }
  }

  Scenario scenario_;
  MapGraph graph_;
  Planner planner_;
  std::mt19937_64 rng_;
  std::string ego_id_;
  std::vector<Vehicle> vehicles_;
  std::size_t cycle_ = 0;
  EgoCommand command_;
  CycleResult last_;
};

inline std::vector<TraceRecord> run_scenario(const Scenario& sc) {
  World world(sc);
  std::vector<TraceRecord> trace;
  trace.reserve(sc.cycles());
  while (!world.finished()) trace.push_back(world.step());
  return trace;
}

/// Direction advice with consecutive repeats removed.
inline std::vector<Direction> direction_sequence(const std::vector<TraceRecord>& trace) {
  std::vector<Direction> seq;
  for (const auto& r : trace) {
    if (seq.empty() || seq.back() != r.direction) seq.push_back(r.direction);
  }
  return seq;
}

namespace detail {

inline std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  // Print negative zero as zero so exports do not depend on rounding sign.
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace detail

/// Tabular trace, one row per cycle. Columns:
/// cycle, t [s], ego_x, ego_y [m], ego_v [m/s], ego_lane, v0 [m/s] (observed),
/// raw_lane, raw_h, raw_v_tar [m/s], lane_tar, h_tar, v_tar [m/s], direction,
/// speed_advice, R, U, O, C, then d_<id> [m] per other vehicle and
/// <id>_x, <id>_y, <id>_v for every non-ego vehicle.
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  using detail::fmt;
  if (trace.empty()) return;
  os << "cycle,t,ego_x,ego_y,ego_v,ego_lane,v0,raw_lane,raw_h,raw_v_tar,lane_tar,h_tar,v_tar,direction,"
        "speed_advice,R,U,O,C";
  for (const auto& [id, _] : trace.front().distances) os << ",d_" << id;
  for (const auto& v : trace.front().vehicles) {
    if (!v.ego) os << ',' << v.id << "_x," << v.id << "_y," << v.id << "_v";
  }
  os << '\n';
  for (const auto& r : trace) {
    const VehicleSnapshot* ego = nullptr;
    for (const auto& v : r.vehicles) {
      if (v.ego) ego = &v;
    }
    os << r.cycle << ',' << fmt(r.time, 2) << ',' << fmt(ego->position.x) << ',' << fmt(ego->position.y) << ','
       << fmt(ego->v) << ',' << ego->lane << ',' << fmt(r.v0) << ',' << r.raw.target_lane << ',' << r.raw.profile
       << ',' << fmt(r.raw.v_target, 2) << ',' << r.committed.target_lane << ',' << r.committed.profile << ','
       << fmt(r.committed.v_target, 2) << ',' << to_string(r.direction) << ',' << to_string(r.warning.speed)
       << ',' << fmt(r.risk, 6) << ',' << fmt(r.utility, 6) << ',' << fmt(r.comfort, 6) << ','
       << fmt(r.cost, 6);
    for (const auto& [_, d] : r.distances) os << ',' << fmt(d);
    for (const auto& v : r.vehicles) {
      if (!v.ego) os << ',' << fmt(v.position.x) << ',' << fmt(v.position.y) << ',' << fmt(v.v);
    }
    os << '\n';
  }
}

/// Risk-field block for one cycle: a header line, then one row per
/// (path, profile) with the rates in %/s over the visualization horizon.
inline void write_risk_field(std::ostream& os, const TraceRecord& r) {
  using detail::fmt;
  const auto& f = r.field;
  os << "# cycle " << r.cycle << " t=" << fmt(r.time, 2) << " step=" << fmt(f.step, 3)
     << " columns=" << (f.rows.empty() ? 0 : f.rows.front().rates_pct.size()) << " unit=%/s chosen_row="
     << f.chosen_row << " committed_row=" << f.committed_row << '\n';
  for (const auto& row : f.rows) {
    os << row.target_lane << ' ' << to_string(row.side) << ' ' << row.profile << ' ' << fmt(row.end_velocity, 2);
    for (double x : row.rates_pct) os << ' ' << fmt(x, 4);
    os << '\n';
  }
}

inline void write_risk_fields(std::ostream& os, const std::vector<TraceRecord>& trace) {
  for (const auto& r : trace) write_risk_field(os, r);
}

}  // namespace riskmaps

#endif  // RISKMAPS_SIM_HPP
