#ifndef RISKMAPS_CONFIG_IO_HPP
#define RISKMAPS_CONFIG_IO_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskmaps/error.hpp"
#include "riskmaps/geo.hpp"
#include "riskmaps/planner.hpp"
#include "riskmaps/rldm.hpp"

// JSON forms of the planner parameter tree, the map file and graph snapshots.

namespace riskmaps {

using json = nlohmann::ordered_json;

namespace detail {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

}  // namespace detail

inline json to_json(const PlannerParams& p) {
  return json{
      {"probe",
       {{"samples", p.probe.samples},
        {"v_max", p.probe.v_max},
        {"a_max", p.probe.a_max},
        {"a_min", p.probe.a_min},
        {"horizon", p.probe.horizon},
        {"step", p.probe.step}}},
      {"risk",
       {{"collision_rate_max", p.risk.collision_rate_max},
        {"curve_rate_max", p.risk.curve_rate_max},
        {"escape_time", p.risk.escape_time},
        {"a_crit", p.risk.a_crit},
        {"sigma_a", p.risk.sigma_a},
        {"car_half_length", p.risk.car_half_length},
        {"severity_scale", p.risk.severity_scale},
        {"curve_severity", p.risk.curve_severity}}},
      {"benefit",
       {{"b_t", p.benefit.b_t},
        {"b_d", p.benefit.b_d},
        {"b_c", p.benefit.b_c},
        {"b_j", p.benefit.b_j},
        {"v_desired", p.benefit.v_desired},
        {"route_offset", p.benefit.route_offset}}},
      {"ego_uncertainty", {{"sigma_m", p.ego_uncertainty.sigma_m}, {"sigma_b", p.ego_uncertainty.sigma_b}}},
      {"other_uncertainty", {{"sigma_m", p.other_uncertainty.sigma_m}, {"sigma_b", p.other_uncertainty.sigma_b}}},
      {"planner",
       {{"blend_start", p.blend_start},
        {"blend_duration", p.blend_duration},
        {"blend_steepness", p.blend_steepness},
        {"path_behind", p.path_behind},
        {"barrier_half_length", p.barrier_half_length},
        {"barrier_clearance", p.barrier_clearance},
        {"lane_switch_offset", p.lane_switch_offset},
        {"dead_band", p.dead_band},
        {"hysteresis_time", p.hysteresis_time}}},
  };
}

/// Applies the keys present in `j` on top of `p`. Unknown keys are rejected.
inline void apply_json(PlannerParams& p, const json& j, const std::string& where = "parameters") {
  using detail::read_field;
  detail::require_object(j, where);
  const json known = to_json(p);
  for (const auto& [group, body] : j.items()) {
    if (!known.contains(group)) throw ConfigError(where + ": unknown parameter group '" + group + "'");
    detail::require_object(body, where + "." + group);
    for (const auto& [key, _] : body.items()) {
      if (!known[group].contains(key)) throw ConfigError(where + "." + group + ": unknown parameter '" + key + "'");
    }
  }
  auto g = [&](const char* name) -> json { return j.contains(name) ? j.at(name) : json::object(); };
  const std::string w = where + ".";
  {
    auto s = g("probe");
    read_field(s, "samples", p.probe.samples, w + "probe");
    read_field(s, "v_max", p.probe.v_max, w + "probe");
    read_field(s, "a_max", p.probe.a_max, w + "probe");
    read_field(s, "a_min", p.probe.a_min, w + "probe");
    read_field(s, "horizon", p.probe.horizon, w + "probe");
    read_field(s, "step", p.probe.step, w + "probe");
  }
  {
    auto s = g("risk");
    read_field(s, "collision_rate_max", p.risk.collision_rate_max, w + "risk");
    read_field(s, "curve_rate_max", p.risk.curve_rate_max, w + "risk");
    read_field(s, "escape_time", p.risk.escape_time, w + "risk");
    read_field(s, "a_crit", p.risk.a_crit, w + "risk");
    read_field(s, "sigma_a", p.risk.sigma_a, w + "risk");
    read_field(s, "car_half_length", p.risk.car_half_length, w + "risk");
    read_field(s, "severity_scale", p.risk.severity_scale, w + "risk");
    read_field(s, "curve_severity", p.risk.curve_severity, w + "risk");
  }
  {
    auto s = g("benefit");
    read_field(s, "b_t", p.benefit.b_t, w + "benefit");
    read_field(s, "b_d", p.benefit.b_d, w + "benefit");
    read_field(s, "b_c", p.benefit.b_c, w + "benefit");
    read_field(s, "b_j", p.benefit.b_j, w + "benefit");
    read_field(s, "v_desired", p.benefit.v_desired, w + "benefit");
    read_field(s, "route_offset", p.benefit.route_offset, w + "benefit");
  }
  read_field(g("ego_uncertainty"), "sigma_m", p.ego_uncertainty.sigma_m, w + "ego_uncertainty");
  read_field(g("ego_uncertainty"), "sigma_b", p.ego_uncertainty.sigma_b, w + "ego_uncertainty");
  read_field(g("other_uncertainty"), "sigma_m", p.other_uncertainty.sigma_m, w + "other_uncertainty");
  read_field(g("other_uncertainty"), "sigma_b", p.other_uncertainty.sigma_b, w + "other_uncertainty");
  {
    auto s = g("planner");
    read_field(s, "blend_start", p.blend_start, w + "planner");
    read_field(s, "blend_duration", p.blend_duration, w + "planner");
    read_field(s, "blend_steepness", p.blend_steepness, w + "planner");
    read_field(s, "path_behind", p.path_behind, w + "planner");
    read_field(s, "barrier_half_length", p.barrier_half_length, w + "planner");
    read_field(s, "barrier_clearance", p.barrier_clearance, w + "planner");
    read_field(s, "lane_switch_offset", p.lane_switch_offset, w + "planner");
    read_field(s, "dead_band", p.dead_band, w + "planner");
    read_field(s, "hysteresis_time", p.hysteresis_time, w + "planner");
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Applies a `group.key=value` override, as given on the command line.
inline void apply_override(PlannerParams& p, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "': expected group.key=value");
  }
  json value;
  try {
    value = json::parse(assignment.substr(eq + 1));
  } catch (const json::exception&) {
    throw ConfigError("override '" + assignment + "': value is not a number or literal");
  }
  json j;
  j[assignment.substr(0, dot)][assignment.substr(dot + 1, eq - dot - 1)] = value;
  apply_json(p, j, "override");
}

/// Lane description as found in a map file.
struct LaneSpec {
  std::string id;
  std::vector<WorldPoint> centerline;
  std::vector<std::string> successors;
  std::optional<std::string> left;
  std::optional<std::string> right;
  json attributes = json::object();
};

struct HalfRoadSpec {
  std::string id;
  std::vector<std::string> lanes;
};

struct RoadSpec {
  std::string id;
  std::vector<HalfRoadSpec> half_roads;
};

struct MapSpec {
  ProjectionConfig projection;
  std::vector<LaneSpec> lanes;
  std::vector<RoadSpec> roads;
};

/// Map file: lanes with a centerline in world meters ("centerline": [[x, y]])
/// or geodetic degrees ("centerline_geo": [[lat, lon]]), successor ids, left
/// and right neighbor ids and free-form attributes; optional road and
/// half-road grouping.
inline MapSpec parse_map(const json& j, const std::string& where = "map") {
  detail::require_object(j, where);
  MapSpec m;
  if (j.contains("projection")) {
    const auto& pj = j.at("projection");
    double ref_lat_deg = 0.0;
    detail::read_field(pj, "earth_radius", m.projection.earth_radius, where + ".projection");
    detail::read_field(pj, "ref_lat_deg", ref_lat_deg, where + ".projection");
    m.projection.ref_lat = deg_to_rad(ref_lat_deg);
  }
  if (!j.contains("lanes") || !j.at("lanes").is_array() || j.at("lanes").empty()) {
    throw ConfigError(where + ".lanes: expected a non-empty array");
  }
  std::size_t idx = 0;
  for (const auto& lj : j.at("lanes")) {
    const std::string lw = where + ".lanes[" + std::to_string(idx++) + "]";
    detail::require_object(lj, lw);
    LaneSpec lane;
    detail::read_field(lj, "id", lane.id, lw);
    if (lane.id.empty()) throw ConfigError(lw + ".id: missing");
    try {
      if (lj.contains("centerline")) {
        for (const auto& p : lj.at("centerline")) lane.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      } else if (lj.contains("centerline_geo")) {
        for (const auto& p : lj.at("centerline_geo")) {
          GeoPoint g{deg_to_rad(p.at(0).get<double>()), deg_to_rad(p.at(1).get<double>())};
          lane.centerline.push_back(geodetic_to_world(g, m.projection));
        }
      }
    } catch (const json::exception&) {
      throw ConfigError(lw + ".centerline: expected [[a, b], ...] numbers");
    } catch (const Error& e) {
      throw ConfigError(lw + ".centerline_geo: " + e.what());
    }
    if (lane.centerline.size() < 2) throw ConfigError(lw + ".centerline: need at least two points");
    detail::read_field(lj, "successors", lane.successors, lw);
    if (lj.contains("left") && !lj.at("left").is_null()) lane.left = lj.at("left").get<std::string>();
    if (lj.contains("right") && !lj.at("right").is_null()) lane.right = lj.at("right").get<std::string>();
    if (lj.contains("attributes")) {
      detail::require_object(lj.at("attributes"), lw + ".attributes");
      lane.attributes = lj.at("attributes");
    }
    m.lanes.push_back(std::move(lane));
  }
  if (j.contains("roads")) {
    for (const auto& rj : j.at("roads")) {
      RoadSpec r;
      detail::read_field(rj, "id", r.id, where + ".roads");
      if (rj.contains("half_roads")) {
        for (const auto& hj : rj.at("half_roads")) {
          HalfRoadSpec h;
          detail::read_field(hj, "id", h.id, where + ".roads.half_roads");
          detail::read_field(hj, "lanes", h.lanes, where + ".roads.half_roads");
          r.half_roads.push_back(std::move(h));
        }
      }
      m.roads.push_back(std::move(r));
    }
  }
  return m;
}

inline json to_json(const MapSpec& m) {
  json j;
  j["projection"] = {{"earth_radius", m.projection.earth_radius},
                     {"ref_lat_deg", m.projection.ref_lat * 180.0 / std::numbers::pi}};
  j["lanes"] = json::array();
  for (const auto& l : m.lanes) {
    json lj;
    lj["id"] = l.id;
    lj["centerline"] = json::array();
    for (const auto& p : l.centerline) lj["centerline"].push_back({p.x, p.y});
    lj["successors"] = l.successors;
    lj["left"] = l.left ? json(*l.left) : json(nullptr);
    lj["right"] = l.right ? json(*l.right) : json(nullptr);
    lj["attributes"] = l.attributes;
    j["lanes"].push_back(std::move(lj));
  }
  j["roads"] = json::array();
  for (const auto& r : m.roads) {
    json rj{{"id", r.id}, {"half_roads", json::array()}};
    for (const auto& h : r.half_roads) rj["half_roads"].push_back({{"id", h.id}, {"lanes", h.lanes}});
    j["roads"].push_back(std::move(rj));
  }
  return j;
}

namespace detail {

inline AttributeValue to_attribute(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace detail

/// Populates a graph with the static layer described by the map.
inline MapGraph build_graph(const MapSpec& m) {
  MapGraph g;
  try {
    for (const auto& l : m.lanes) {
      Node n{l.id, NodeLabel::LaneSegment, {}};
      n.attributes[attr::kCenterline] = l.centerline;
      for (const auto& [k, v] : l.attributes.items()) n.attributes[k] = detail::to_attribute(v);
      g.add_node(std::move(n));
    }
    for (const auto& l : m.lanes) {
      for (const auto& s : l.successors) g.add_relation(l.id, RelationLabel::Successor, s);
      if (l.left) g.add_relation(l.id, RelationLabel::Neighbor, *l.left, "left");
      if (l.right) g.add_relation(l.id, RelationLabel::Neighbor, *l.right, "right");
    }
    for (const auto& r : m.roads) {
      g.add_node(Node{r.id, NodeLabel::Road, {}});
      for (const auto& h : r.half_roads) {
        g.add_node(Node{h.id, NodeLabel::HalfRoad, {}});
        g.add_relation(r.id, RelationLabel::HasPart, h.id);
        for (const auto& lane : h.lanes) g.add_relation(h.id, RelationLabel::HasPart, lane);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
  return g;
}

/// Snapshot export: every node and relation as a record.
inline json export_snapshot(const MapGraph& g) {
  json j;
  j["nodes"] = json::array();
  for (const auto& [id, n] : g.nodes()) {
    json attrs = json::object();
    for (const auto& [k, v] : n.attributes) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::vector<WorldPoint>>) {
              json pts = json::array();
              for (const auto& p : x) pts.push_back({p.x, p.y});
              attrs[k] = std::move(pts);
            } else {
              attrs[k] = x;
            }
          },
          v);
    }
    if (const auto* s = g.state(id)) {
      attrs["state"] = {{"x", s->position.x}, {"y", s->position.y}, {"v", s->v},
                        {"heading", s->heading}, {"timestamp", s->timestamp}};
    }
    j["nodes"].push_back({{"id", id}, {"label", std::string(to_string(n.label))}, {"attributes", std::move(attrs)}});
  }
  j["relations"] = json::array();
  for (const auto& r : g.relations()) {
    json rj{{"from", r.from}, {"label", std::string(to_string(r.label))}, {"to", r.to}};
    if (!r.qualifier.empty()) rj["qualifier"] = r.qualifier;
    j["relations"].push_back(std::move(rj));
  }
  return j;
}

/// Rebuilds the static part of a graph (nodes and relations) from a snapshot.
/// Entity states are not restored.
inline MapGraph import_snapshot(const json& j) {
  MapGraph g;
  try {
    for (const auto& nj : j.at("nodes")) {
      Node n{nj.at("id").get<std::string>(), parse_node_label(nj.at("label").get<std::string>()), {}};
      for (const auto& [k, v] : nj.at("attributes").items()) {
        if (k == "state") continue;
        if (k == attr::kCenterline) {
          std::vector<WorldPoint> pts;
          for (const auto& p : v) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
          n.attributes[k] = std::move(pts);
        } else {
          n.attributes[k] = detail::to_attribute(v);
        }
      }
      g.add_node(std::move(n));
    }
    for (const auto& rj : j.at("relations")) {
      g.add_relation(rj.at("from").get<std::string>(), parse_relation_label(rj.at("label").get<std::string>()),
                     rj.at("to").get<std::string>(), rj.value("qualifier", std::string{}));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  }
  return g;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace riskmaps

#endif  // RISKMAPS_CONFIG_IO_HPP
