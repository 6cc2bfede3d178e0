#ifndef RISKMAPS_RLDM_HPP
#define RISKMAPS_RLDM_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "riskmaps/error.hpp"
#include "riskmaps/geo.hpp"
#include "riskmaps/path.hpp"

// Relational local dynamic map: a labeled node/relation store holding the
// static lane geometry and the dynamic entities sensed around the ego.

namespace riskmaps {

enum class NodeLabel { Road, HalfRoad, LaneSegment, Sensor, Vehicle, Marking, Transient, QuasiStatic };
enum class RelationLabel { HasPart, HasMeasurement, Contains, Successor, Neighbor };
enum class Direction { Left, Straight, Right };

inline std::string_view to_string(NodeLabel l) {
  switch (l) {
    case NodeLabel::Road: return "Road";
    case NodeLabel::HalfRoad: return "HalfRoad";
    case NodeLabel::LaneSegment: return "LaneSegment";
    case NodeLabel::Sensor: return "Sensor";
    case NodeLabel::Vehicle: return "Vehicle";
    case NodeLabel::Marking: return "Marking";
    case NodeLabel::Transient: return "Transient";
    case NodeLabel::QuasiStatic: return "QuasiStatic";
  }
  return "?";
}

inline std::string_view to_string(RelationLabel l) {
  switch (l) {
    case RelationLabel::HasPart: return "hasPart";
    case RelationLabel::HasMeasurement: return "hasMeasurement";
    case RelationLabel::Contains: return "contains";
    case RelationLabel::Successor: return "successor";
    case RelationLabel::Neighbor: return "neighbor";
  }
  return "?";
}

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Left: return "left";
    case Direction::Straight: return "straight";
    case Direction::Right: return "right";
  }
  return "?";
}

inline NodeLabel parse_node_label(std::string_view s) {
  for (auto l : {NodeLabel::Road, NodeLabel::HalfRoad, NodeLabel::LaneSegment, NodeLabel::Sensor,
                 NodeLabel::Vehicle, NodeLabel::Marking, NodeLabel::Transient, NodeLabel::QuasiStatic}) {
    if (to_string(l) == s) return l;
  }
  throw ConfigError("unknown node label '" + std::string(s) + "'");
}

inline RelationLabel parse_relation_label(std::string_view s) {
  for (auto l : {RelationLabel::HasPart, RelationLabel::HasMeasurement, RelationLabel::Contains,
                 RelationLabel::Successor, RelationLabel::Neighbor}) {
    if (to_string(l) == s) return l;
  }
  throw ConfigError("unknown relation label '" + std::string(s) + "'");
}

using AttributeValue = std::variant<std::string, double, bool, std::vector<WorldPoint>>;

namespace attr {
inline constexpr const char* kCenterline = "centerline";
inline constexpr const char* kSensorType = "type";
inline constexpr const char* kClosedEnd = "closed_end";
inline constexpr const char* kRouteRequired = "route_required";
}  // namespace attr

struct Node {
  std::string id;
  NodeLabel label = NodeLabel::Marking;
  std::map<std::string, AttributeValue> attributes;

  template <typename T>
  [[nodiscard]] std::optional<T> get(const std::string& key) const {
    auto it = attributes.find(key);
    if (it == attributes.end()) return std::nullopt;
    if (const auto* v = std::get_if<T>(&it->second)) return *v;
    return std::nullopt;
  }
};

/// Directed labeled edge. `qualifier` carries the side ("left"/"right") of
/// neighbor relations and is empty otherwise.
struct Relation {
  std::string from;
  RelationLabel label = RelationLabel::HasPart;
  std::string to;
  std::string qualifier;

  friend auto operator<=>(const Relation&, const Relation&) = default;
};

/// Measured state of a dynamic entity.
struct EntityState {
  std::string id;
  WorldPoint position;
  double v = 0.0;        ///< m/s along the path
  double heading = 0.0;  ///< rad, counter-clockwise from east
  double timestamp = 0.0;
};

class MapGraph {
 public:
  const std::string& add_node(Node node) {
    if (node.id.empty()) throw Error("add_node: empty id");
    if (nodes_.contains(node.id)) throw Error("add_node: duplicate id '" + node.id + "'");
    if (node.label == NodeLabel::LaneSegment) {
      auto line = node.get<std::vector<WorldPoint>>(attr::kCenterline);
      if (!line) throw Error("add_node: lane '" + node.id + "' has no centerline");
      lane_paths_.emplace(node.id, make_path(*line, {node.id}));
    }
    if (node.label == NodeLabel::Sensor && !node.get<std::string>(attr::kSensorType)) {
      throw Error("add_node: sensor '" + node.id + "' has no type attribute");
    }
    auto [it, _] = nodes_.emplace(node.id, std::move(node));
    return it->first;
  }

  /// Adds a relation after checking the schema. Re-adding an existing
  /// relation is a no-op.
  void add_relation(const std::string& from, RelationLabel label, const std::string& to,
                    std::string qualifier = {}) {
    const Node& a = node(from);
    const Node& b = node(to);
    auto require = [&](bool ok, const char* what) {
      if (!ok) {
        throw Error("add_relation: " + std::string(what) + " (" + from + " -" +
                    std::string(to_string(label)) + "-> " + to + ")");
      }
    };
    Relation rel{from, label, to, std::move(qualifier)};
    if (relations_.contains(rel)) return;
    switch (label) {
      case RelationLabel::Contains:
        require(a.label == NodeLabel::LaneSegment && b.label == NodeLabel::Vehicle,
                "contains must link LaneSegment to Vehicle");
        break;
      case RelationLabel::HasMeasurement:
        require(a.label == NodeLabel::Sensor, "hasMeasurement must start at a Sensor");
        break;
      case RelationLabel::Successor:
        require(a.label == NodeLabel::LaneSegment && b.label == NodeLabel::LaneSegment,
                "successor must link lanes");
        break;
      case RelationLabel::Neighbor:
        require(a.label == NodeLabel::LaneSegment && b.label == NodeLabel::LaneSegment,
                "neighbor must link lanes");
        require(rel.qualifier == "left" || rel.qualifier == "right", "neighbor needs side left|right");
        break;
      case RelationLabel::HasPart:
        if (a.label == NodeLabel::Road && b.label == NodeLabel::HalfRoad) {
          require(targets(from, RelationLabel::HasPart, NodeLabel::HalfRoad).size() < 2,
                  "a road has at most two half-roads");
        }
        break;
    }
    relations_.insert(std::move(rel));
  }

  void remove_relation(const std::string& from, RelationLabel label, const std::string& to) {
    std::erase_if(relations_, [&](const Relation& r) {
      return r.from == from && r.label == label && r.to == to;
    });
  }

  [[nodiscard]] bool has_node(const std::string& id) const { return nodes_.contains(id); }

  [[nodiscard]] const Node& node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown node '" + id + "'");
    return it->second;
  }

  [[nodiscard]] const std::map<std::string, Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::set<Relation>& relations() const { return relations_; }

  [[nodiscard]] bool has_relation(const std::string& from, RelationLabel label,
                                  const std::string& to) const {
    return std::ranges::any_of(relations_, [&](const Relation& r) {
      return r.from == from && r.label == label && r.to == to;
    });
  }

  /// Targets of `from`'s outgoing relations with the given label, sorted by id.
  [[nodiscard]] std::vector<std::string> targets(const std::string& from, RelationLabel label,
                                                 std::optional<NodeLabel> target_label = {}) const {
    std::vector<std::string> out;
    for (const auto& r : relations_) {
      if (r.from == from && r.label == label &&
          (!target_label || node(r.to).label == *target_label)) {
        out.push_back(r.to);
      }
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> sources(const std::string& to, RelationLabel label) const {
    std::vector<std::string> out;
    for (const auto& r : relations_) {
      if (r.to == to && r.label == label) out.push_back(r.from);
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> lanes() const {
    std::vector<std::string> out;
    for (const auto& [id, n] : nodes_) {
      if (n.label == NodeLabel::LaneSegment) out.push_back(id);
    }
    return out;
  }

  [[nodiscard]] const Path& lane_path(const std::string& lane) const {
    auto it = lane_paths_.find(lane);
    if (it == lane_paths_.end()) throw Error("no centerline for lane '" + lane + "'");
    return it->second;
  }

  [[nodiscard]] std::optional<std::string> neighbor(const std::string& lane, Direction side) const {
    const char* q = side == Direction::Left ? "left" : "right";
    for (const auto& r : relations_) {
      if (r.from == lane && r.label == RelationLabel::Neighbor && r.qualifier == q) return r.to;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::optional<std::string> successor(const std::string& lane) const {
    auto next = targets(lane, RelationLabel::Successor);
    if (next.empty()) return std::nullopt;
    return next.front();
  }

  [[nodiscard]] const EntityState* state(const std::string& entity) const {
    auto it = states_.find(entity);
    return it == states_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const std::map<std::string, EntityState>& states() const { return states_; }

  /// Lane holding a `contains` edge to the entity, if any.
  [[nodiscard]] std::optional<std::string> lane_of(const std::string& entity) const {
    auto src = sources(entity, RelationLabel::Contains);
    if (src.empty()) return std::nullopt;
    return src.front();
  }

  /// Lane whose centerline is closest to `p`; ties go to the smaller id.
  [[nodiscard]] std::optional<std::string> nearest_lane(const WorldPoint& p) const {
    std::optional<std::string> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, path] : lane_paths_) {
      const double d = project_to_path(p, path).abs_offset();
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    return best;
  }

  [[nodiscard]] std::size_t update_count() const { return update_count_; }

 private:
  friend bool ingest_measurement(MapGraph&, const std::string&, const EntityState&, double);

  std::map<std::string, Node> nodes_;
  std::set<Relation> relations_;
  std::map<std::string, Path> lane_paths_;
  std::map<std::string, EntityState> states_;
  std::map<std::string, double> last_push_;
  std::size_t update_count_ = 0;
};

/// Pushes a sensed entity state into the graph. Measurements arriving within
/// `push_period` of the entity's last push are coalesced: the graph keeps the
/// pushed state and the measurement is dropped. Returns true when the graph
/// was updated.
inline bool ingest_measurement(MapGraph& graph, const std::string& sensor_id, const EntityState& state,
                               double push_period) {
  const Node& sensor = graph.node(sensor_id);
  if (sensor.label != NodeLabel::Sensor) throw Error("ingest_measurement: '" + sensor_id + "' is not a sensor");
  if (state.id.empty()) throw Error("ingest_measurement: entity without id");
  if (!(state.v >= 0.0) || !std::isfinite(state.position.x) || !std::isfinite(state.position.y)) {
    throw Error("ingest_measurement: invalid state for '" + state.id + "'");
  }
  if (auto prev = graph.states_.find(state.id); prev != graph.states_.end()) {
    if (state.timestamp < prev->second.timestamp) {
      throw Error("ingest_measurement: timestamp went backwards for '" + state.id + "'");
    }
    if (state.timestamp - graph.last_push_[state.id] < push_period - 1e-9) return false;
  }

  if (!graph.has_node(state.id)) graph.add_node(Node{state.id, NodeLabel::Vehicle, {}});
  graph.add_relation(sensor_id, RelationLabel::HasMeasurement, state.id);
  graph.states_[state.id] = state;
  graph.last_push_[state.id] = state.timestamp;

  const auto lane = graph.nearest_lane(state.position);
  for (const auto& old : graph.sources(state.id, RelationLabel::Contains)) {
    if (!lane || old != *lane) graph.remove_relation(old, RelationLabel::Contains, state.id);
  }
  if (lane) graph.add_relation(*lane, RelationLabel::Contains, state.id);
  ++graph.update_count_;
  return true;
}

inline double distance_between(const MapGraph& graph, const std::string& a, const std::string& b) {
  const auto* sa = graph.state(a);
  const auto* sb = graph.state(b);
  if (sa == nullptr || sb == nullptr) throw Error("distance_between: entity without position");
  return distance(sa->position, sb->position);
}

/// A driving path retrieved from the lane topology.
struct LanePath {
  Path path;
  std::string lane_id;   ///< lane the path starts on (the target lane for neighbor paths)
  Direction side = Direction::Straight;
  bool closed_end = false;      ///< the lane chain terminates inside the path
  bool route_required = false;  ///< target lane carries the route_required attribute
};

namespace detail {

struct Chain {
  std::vector<WorldPoint> points;
  std::vector<std::string> lanes;
  bool closed_end = false;
};

inline Chain lane_chain(const MapGraph& graph, const std::string& lane, double max_length) {
  Chain chain;
  std::set<std::string> visited;
  std::string current = lane;
  double length = 0.0;
  while (true) {
    visited.insert(current);
    chain.lanes.push_back(current);
    const Path& p = graph.lane_path(current);
    for (const auto& pt : p.points) {
      if (!chain.points.empty()) length += distance(chain.points.back(), pt);
      chain.points.push_back(pt);
    }
    if (length >= max_length) return chain;
    auto next = graph.successor(current);
    if (!next || visited.contains(*next)) {
      chain.closed_end = graph.node(current).get<bool>(attr::kClosedEnd).value_or(false);
      return chain;
    }
    current = *next;
  }
}

inline LanePath chain_path(const MapGraph& graph, const std::string& lane, double from, double horizon,
                           Direction side) {
  auto chain = lane_chain(graph, lane, from + horizon);
  Path full = make_path(chain.points, chain.lanes);
  from = std::clamp(from, 0.0, std::max(0.0, full.length() - 1.0));
  LanePath out;
  const bool truncated = from + horizon < full.length() - 1e-9;
  out.path = (from <= 0.0 && !truncated) ? std::move(full) : slice_path(full, from, from + horizon);
  out.lane_id = lane;
  out.side = side;
  out.closed_end = chain.closed_end && !truncated;
  out.route_required = graph.node(lane).get<bool>(attr::kRouteRequired).value_or(false);
  return out;
}

}  // namespace detail

/// Stay path along the successor chain of `lane`, starting `from` meters into
/// the lane and truncated at `horizon`, followed by one path per neighbor lane
/// starting abreast of the stay path's first point.
inline std::vector<LanePath> retrieve_paths(const MapGraph& graph, const std::string& lane, double horizon,
                                            double from = 0.0) {
  if (graph.node(lane).label != NodeLabel::LaneSegment) throw Error("retrieve_paths: not a lane");
  if (!(horizon > 0.0)) throw Error("retrieve_paths: horizon must be positive");
  std::vector<LanePath> out;
  out.push_back(detail::chain_path(graph, lane, std::max(from, 0.0), horizon, Direction::Straight));
  const WorldPoint start = out.front().path.points.front();
  for (auto side : {Direction::Left, Direction::Right}) {
    auto nb = graph.neighbor(lane, side);
    if (!nb) continue;
    // Locate the abreast point on the neighbor's own chain.
    auto chain = detail::lane_chain(graph, *nb, std::numeric_limits<double>::infinity());
    const double s0 = project_to_path(start, make_path(chain.points)).arclength;
    out.push_back(detail::chain_path(graph, *nb, s0, horizon, side));
  }
  return out;
}

/// An entity that passed the geofence, annotated with its nearest path.
struct FilteredEntity {
  EntityState state;
  std::size_t path_index = 0;
  ProjectionResult projection;
};

inline constexpr double kGeofenceDistance = 5.0;

/// Keeps the entities within `kGeofenceDistance` (inclusive) of any path.
inline std::vector<FilteredEntity> filter_obstacles(const std::vector<EntityState>& states,
                                                    const std::vector<LanePath>& paths,
                                                    double max_offset = kGeofenceDistance) {
  std::vector<FilteredEntity> kept;
  for (const auto& s : states) {
    std::optional<FilteredEntity> best;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto proj = project_to_path(s.position, paths[i].path);
      if (!best || proj.abs_offset() < best->projection.abs_offset()) best = FilteredEntity{s, i, proj};
    }
    if (best && best->projection.abs_offset() <= max_offset) kept.push_back(*best);
  }
  return kept;
}

}  // namespace riskmaps

#endif  // RISKMAPS_RLDM_HPP
