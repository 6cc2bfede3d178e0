#ifndef RISKMAPS_SCENARIO_HPP
#define RISKMAPS_SCENARIO_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskmaps/config_io.hpp"
#include "riskmaps/error.hpp"
#include "riskmaps/planner.hpp"

namespace riskmaps {

enum class VehicleMode { Scripted, Human, ConstantVelocity };

inline std::string_view to_string(VehicleMode m) {
  switch (m) {
    case VehicleMode::Scripted: return "scripted";
    case VehicleMode::Human: return "human";
    case VehicleMode::ConstantVelocity: return "constant_velocity";
  }
  return "?";
}

/// A scripted event: a velocity keypoint (speed is interpolated linearly
/// between keypoints) and/or the start of a lane change.
struct ScheduleEntry {
  double time = 0.0;
  std::optional<double> v;
  std::optional<Direction> lane_change;
};

struct VehicleSpec {
  std::string id;
  bool ego = false;
  VehicleMode mode = VehicleMode::ConstantVelocity;
  std::string lane;
  double s = 0.0;  ///< initial arclength along the lane, m
  double v = 0.0;  ///< initial speed, m/s
  std::vector<ScheduleEntry> schedule;
};

/// Synthetic sensor noise applied to observed (not true) states.
struct NoiseModel {
  bool enabled = false;
  double position_sd = 0.5;
  double velocity_sd = 0.3;
};

struct Scenario {
  std::string name;
  MapSpec map;
  std::optional<std::string> map_file;
  std::vector<VehicleSpec> vehicles;
  PlannerParams params;
  double duration = 12.0;
  double rate_hz = 10.0;
  std::uint64_t seed = 0;
  NoiseModel noise;

  [[nodiscard]] std::size_t cycles() const {
    return static_cast<std::size_t>(std::llround(duration * rate_hz));
  }
  [[nodiscard]] double period() const { return 1.0 / rate_hz; }
  [[nodiscard]] const VehicleSpec& ego() const {
    for (const auto& v : vehicles) {
      if (v.ego) return v;
    }
    throw ConfigError("scenario has no ego vehicle");
  }
};

inline void validate(const Scenario& sc) {
  if (!(sc.duration > 0.0)) throw ConfigError("duration: must be positive");
  if (!(sc.rate_hz > 0.0)) throw ConfigError("rate_hz: must be positive");
  if (sc.noise.position_sd < 0.0 || sc.noise.velocity_sd < 0.0) throw ConfigError("noise: negative std dev");
  std::set<std::string> lanes;
  for (const auto& l : sc.map.lanes) lanes.insert(l.id);
  std::set<std::string> ids;
  int egos = 0;
  for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
    const auto& v = sc.vehicles[i];
    const std::string w = "vehicles[" + std::to_string(i) + "]";
    if (v.id.empty()) throw ConfigError(w + ".id: missing");
    if (!ids.insert(v.id).second) throw ConfigError(w + ".id: duplicate vehicle id '" + v.id + "'");
    if (!lanes.contains(v.lane)) throw ConfigError(w + ".lane: unknown lane '" + v.lane + "'");
    if (v.v < 0.0) throw ConfigError(w + ".v: negative speed");
    if (v.ego) ++egos;
    if (v.mode == VehicleMode::Human && !v.ego) throw ConfigError(w + ".mode: only the ego can be human-driven");
    for (std::size_t k = 1; k < v.schedule.size(); ++k) {
      if (v.schedule[k].time < v.schedule[k - 1].time) throw ConfigError(w + ".schedule: entries not time-sorted");
    }
    for (const auto& e : v.schedule) {
      if (e.v && *e.v < 0.0) throw ConfigError(w + ".schedule: negative speed");
    }
  }
  if (egos != 1) throw ConfigError("vehicles: exactly one ego required, found " + std::to_string(egos));
}

inline VehicleMode parse_mode(const std::string& s, const std::string& where) {
  for (auto m : {VehicleMode::Scripted, VehicleMode::Human, VehicleMode::ConstantVelocity}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError(where + ": unknown mode '" + s + "'");
}

inline Direction parse_direction(const std::string& s, const std::string& where) {
  if (s == "left") return Direction::Left;
  if (s == "right") return Direction::Right;
  if (s == "straight") return Direction::Straight;
  throw ConfigError(where + ": unknown direction '" + s + "'");
}

/// Parses a scenario document. `base_dir` resolves a relative map_file.
inline Scenario parse_scenario(const json& j, const std::filesystem::path& base_dir = {}) {
  detail::require_object(j, "scenario");
  Scenario sc;
  detail::read_field(j, "name", sc.name, "scenario");
  detail::read_field(j, "duration", sc.duration, "scenario");
  detail::read_field(j, "rate_hz", sc.rate_hz, "scenario");
  detail::read_field(j, "seed", sc.seed, "scenario");
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    detail::read_field(n, "enabled", sc.noise.enabled, "noise");
    detail::read_field(n, "position_sd", sc.noise.position_sd, "noise");
    detail::read_field(n, "velocity_sd", sc.noise.velocity_sd, "noise");
  }
  if (j.contains("map")) {
    sc.map = parse_map(j.at("map"));
  } else if (j.contains("map_file")) {
    sc.map_file = j.at("map_file").get<std::string>();
    std::filesystem::path p(*sc.map_file);
    if (p.is_relative()) p = base_dir / p;
    sc.map = parse_map(read_json_file(p.string()), p.string());
  } else {
    throw ConfigError("scenario: needs 'map' or 'map_file'");
  }
  if (j.contains("parameters")) apply_json(sc.params, j.at("parameters"));
  if (!j.contains("vehicles") || !j.at("vehicles").is_array()) throw ConfigError("vehicles: expected an array");
  std::size_t i = 0;
  for (const auto& vj : j.at("vehicles")) {
    const std::string w = "vehicles[" + std::to_string(i++) + "]";
    detail::require_object(vj, w);
    VehicleSpec v;
    detail::read_field(vj, "id", v.id, w);
    detail::read_field(vj, "ego", v.ego, w);
    std::string mode = "constant_velocity";
    detail::read_field(vj, "mode", mode, w);
    v.mode = parse_mode(mode, w + ".mode");
    detail::read_field(vj, "lane", v.lane, w);
    detail::read_field(vj, "s", v.s, w);
    detail::read_field(vj, "v", v.v, w);
    if (vj.contains("schedule")) {
      for (const auto& ej : vj.at("schedule")) {
        ScheduleEntry e;
        detail::read_field(ej, "t", e.time, w + ".schedule");
        if (ej.contains("v")) e.v = ej.at("v").get<double>();
        if (ej.contains("lane_change")) {
          e.lane_change = parse_direction(ej.at("lane_change").get<std::string>(), w + ".schedule.lane_change");
        }
        v.schedule.push_back(e);
      }
    }
    sc.vehicles.push_back(std::move(v));
  }
  validate(sc);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  const auto j = read_json_file(path);
  try {
    return parse_scenario(j, std::filesystem::path(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline json to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["duration"] = sc.duration;
  j["rate_hz"] = sc.rate_hz;
  j["seed"] = sc.seed;
  j["noise"] = {{"enabled", sc.noise.enabled},
                {"position_sd", sc.noise.position_sd},
                {"velocity_sd", sc.noise.velocity_sd}};
  if (sc.map_file) {
    j["map_file"] = *sc.map_file;
  } else {
    j["map"] = to_json(sc.map);
  }
  j["parameters"] = to_json(sc.params);
  j["vehicles"] = json::array();
  for (const auto& v : sc.vehicles) {
    json vj{{"id", v.id}, {"ego", v.ego}, {"mode", std::string(to_string(v.mode))},
            {"lane", v.lane}, {"s", v.s}, {"v", v.v}};
    if (!v.schedule.empty()) {
      vj["schedule"] = json::array();
      for (const auto& e : v.schedule) {
        json ej{{"t", e.time}};
        if (e.v) ej["v"] = *e.v;
        if (e.lane_change) ej["lane_change"] = std::string(to_string(*e.lane_change));
        vj["schedule"].push_back(std::move(ej));
      }
    }
    j["vehicles"].push_back(std::move(vj));
  }
  return j;
}

/// Straight two-lane road along +x: lane "R" ends at `end_x` behind a closed
/// barrier, lane "L" 3.5 m to its left continues and serves the route.
inline MapSpec two_lane_merge_map(double end_x, double road_length = 800.0) {
  MapSpec m;
  LaneSpec right;
  right.id = "R";
  right.centerline = {{0.0, 0.0}, {end_x, 0.0}};
  right.left = "L";
  right.attributes = {{"closed_end", true}, {"route_required", false}, {"road_type", "highway"},
                      {"surface", "asphalt"}, {"marking", "dashed"}, {"curvature", 0.0}};
  LaneSpec left;
  left.id = "L";
  left.centerline = {{0.0, 3.5}, {road_length, 3.5}};
  left.right = "R";
  left.attributes = {{"closed_end", false}, {"route_required", true}, {"road_type", "highway"},
                     {"surface", "asphalt"}, {"marking", "dashed"}, {"curvature", 0.0}};
  m.lanes = {right, left};
  m.roads = {RoadSpec{"road", {HalfRoadSpec{"road_fwd", {"R", "L"}}}}};
  return m;
}

/// Forced lane change with a sufficient gap on the through lane.
inline Scenario make_gap_scenario() {
  Scenario sc;
  sc.name = "gap";
  sc.duration = 12.0;
  sc.map = two_lane_merge_map(160.0);
  sc.vehicles = {
      {"ego", true, VehicleMode::Scripted, "R", 40.0, 7.0,
       {{1.0, std::nullopt, Direction::Left}, {4.0, 10.0, std::nullopt}}},
      {"back", false, VehicleMode::ConstantVelocity, "L", 10.0, 7.5, {}},
      {"front", false, VehicleMode::ConstantVelocity, "L", 62.0, 9.5, {}},
  };
  return sc;
}

/// Forced lane change where the through-lane gap next to the ego is too
/// small; both through-lane vehicles overtake before the ego merges.
inline Scenario make_no_gap_scenario() {
  Scenario sc;
  sc.name = "no_gap";
  sc.duration = 16.0;
  sc.map = two_lane_merge_map(100.0);
  sc.vehicles = {
      {"ego", true, VehicleMode::Scripted, "R", 40.0, 5.0,
       {{1.0, 4.5, std::nullopt}, {6.0, 5.0, std::nullopt}, {7.0, std::nullopt, Direction::Left}}},
      {"back", false, VehicleMode::ConstantVelocity, "L", 36.0, 8.0, {}},
      {"front", false, VehicleMode::ConstantVelocity, "L", 48.0, 8.0, {}},
  };
  return sc;
}

}  // namespace riskmaps

#endif  // RISKMAPS_SCENARIO_HPP
