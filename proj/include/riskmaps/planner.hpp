#ifndef RISKMAPS_PLANNER_HPP
#define RISKMAPS_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "riskmaps/error.hpp"
#include "riskmaps/motion.hpp"
#include "riskmaps/rldm.hpp"
#include "riskmaps/survival.hpp"

namespace riskmaps {

struct PlannerParams {
  ProbeConfig probe;
  RiskParams risk;
  BenefitParams benefit;
  UncertaintyParams ego_uncertainty;
  UncertaintyParams other_uncertainty;
  double blend_start = 1.0;      ///< s until a lane change begins
  double blend_duration = 3.0;   ///< s, realized through l_c at the current speed
  double blend_steepness = 6.0;
  double path_behind = 40.0;     ///< m of lane kept behind the ego for geofencing
  double barrier_half_length = 0.5;
  double barrier_clearance = 1.75;  ///< a lane-end barrier counts for options passing it closer than this, m
  double lane_switch_offset = 0.5;  ///< m from a new lane's centerline before the ego counts as on it
  double dead_band = 0.5;        ///< m/s
  double hysteresis_time = 2.0;  ///< s

  void validate() const {
    probe.validate();
    risk.validate();
    benefit.validate();
    if (!(blend_start >= 0 && blend_duration > 0 && blend_steepness > 0 && path_behind >= 0 &&
          barrier_half_length >= 0 && barrier_clearance >= 0 && lane_switch_offset > 0 && dead_band >= 0 && hysteresis_time >= 0)) {
      throw Error("PlannerParams: invalid planner parameter");
    }
  }
};

/// One lateral option for the ego: stay, or a blended change to a neighbor.
struct PathOption {
  std::string target_lane;
  Direction side = Direction::Straight;
  Path path;
  double origin = 0.0;  ///< ego arclength on `path`
  bool route_required = false;
  std::optional<BlendWindow> blend;
};

struct TrackedEntity {
  EntityState state;
  std::size_t lane_path = 0;  ///< index into Situation::lane_paths
  double arclength = 0.0;
  double half_length = 2.0;
  bool barrier = false;       ///< synthetic obstacle at a closed lane end
};

/// Immutable planning snapshot.
struct Situation {
  EntityState ego;
  std::string ego_lane;
  std::vector<LanePath> lane_paths;
  std::vector<PathOption> options;
  std::vector<TrackedEntity> others;
  double timestamp = 0.0;
};

/// Lane the ego is treated as driving on. Without a previous lane this is the
/// nearest lane. Otherwise the previous lane is kept until the ego comes
/// within `switch_offset` of another lane's centerline, so position noise near
/// a lane boundary does not flip the assignment back and forth.
inline std::optional<std::string> assign_ego_lane(const MapGraph& graph, const WorldPoint& position,
                                                  const std::optional<std::string>& previous, double switch_offset) {
  auto nearest = graph.nearest_lane(position);
  if (!nearest || !previous || *nearest == *previous || !graph.has_node(*previous)) return nearest;
  if (project_to_path(position, graph.lane_path(*nearest)).abs_offset() <= switch_offset) return nearest;
  if (project_to_path(position, graph.lane_path(*previous)).abs_offset() > kGeofenceDistance) return nearest;
  return previous;
}

inline Situation build_situation(const MapGraph& graph, const EntityState& ego, const std::vector<EntityState>& others,
                                 const PlannerParams& params,
                                 const std::optional<std::string>& previous_lane = std::nullopt) {
  params.validate();
  Situation sit;
  sit.ego = ego;
  sit.ego.v = std::clamp(ego.v, 0.0, params.probe.v_max);
  sit.timestamp = ego.timestamp;

  const auto lane = assign_ego_lane(graph, ego.position, previous_lane, params.lane_switch_offset);
  if (!lane) throw Error("build_situation: no lane under the ego");
  const auto on_lane = project_to_path(ego.position, graph.lane_path(*lane));
  if (on_lane.abs_offset() > kGeofenceDistance) throw Error("build_situation: ego is off the map");
  sit.ego_lane = *lane;

  const double reach = params.path_behind + params.probe.v_max * params.probe.horizon + 20.0;
  sit.lane_paths = retrieve_paths(graph, *lane, reach, on_lane.arclength - params.path_behind);

  const auto& stay = sit.lane_paths.front();
  const double stay_origin = project_to_path(ego.position, stay.path).arclength;
  const WorldPoint anchor = position_at(stay.path, stay_origin);
  sit.options.push_back({stay.lane_id, Direction::Straight, stay.path, stay_origin, stay.route_required, {}});

  for (std::size_t i = 1; i < sit.lane_paths.size(); ++i) {
    const auto& nb = sit.lane_paths[i];
    const auto proj = project_to_path(anchor, nb.path);
    BlendSpec spec;
    spec.start_time = params.blend_start;
    spec.steepness = params.blend_steepness;
    spec.lateral_gap = proj.abs_offset();
    if (spec.lateral_gap > 1e-6) {
      spec.scale = params.blend_duration * params.blend_duration / spec.lateral_gap;
    }
    auto blended = blend_paths(stay.path, nb.path, sit.ego.v, spec, stay_origin, proj.arclength);
    sit.options.push_back({nb.lane_id, nb.side, std::move(blended.path), blended.origin, nb.route_required,
                           blended.window});
  }

  for (const auto& f : filter_obstacles(others, sit.lane_paths)) {
    sit.others.push_back({f.state, f.path_index, f.projection.arclength, params.risk.car_half_length, false});
  }
  for (std::size_t i = 0; i < sit.lane_paths.size(); ++i) {
    const auto& lp = sit.lane_paths[i];
    if (!lp.closed_end) continue;
    EntityState b;
    b.id = "barrier:" + lp.path.lane_ids.back();
    b.position = lp.path.points.back();
    b.heading = heading_at(lp.path, lp.path.length());
    b.timestamp = ego.timestamp;
    sit.others.push_back({b, i, lp.path.length(), params.barrier_half_length, true});
  }
  return sit;
}

struct CostCell {
  std::size_t option = 0;
  VelocityProfile profile;
  TrajectorySample trajectory;
  CostBreakdown cost;
  bool valid = true;
};

struct CostTable {
  std::vector<CostCell> cells;
  std::size_t samples_per_path = 0;

  [[nodiscard]] const CostCell* find(std::size_t option, int h) const {
    for (const auto& c : cells) {
      if (c.option == option && c.profile.index == h) return &c;
    }
    return nullptr;
  }
};

inline std::vector<PredictedEntity> predict_others(const Situation& sit, const PlannerParams& params) {
  std::vector<PredictedEntity> out;
  out.reserve(sit.others.size());
  for (const auto& o : sit.others) {
    PredictedEntity p;
    p.trajectory = predict_other(o.state.v, sit.lane_paths[o.lane_path].path, o.arclength, params.probe);
    p.uncertainty = o.barrier ? UncertaintyParams{params.other_uncertainty.sigma_m, 0.0} : params.other_uncertainty;
    p.half_length = o.half_length;
    out.push_back(std::move(p));
  }
  return out;
}

/// Rolls out and costs every (path option, velocity profile) pair.
inline CostTable probe(const Situation& sit, const PlannerParams& params) {
  params.validate();
  const auto others = predict_others(sit, params);
  const auto profiles = sample_profiles(sit.ego.v, params.probe);
  // Lane-end barriers only constrain options that are still near the closed
  // lane where it ends; a completed lane change passes them at a lane's width.
  auto relevant = [&](const PathOption& opt) {
    std::vector<PredictedEntity> out;
    for (std::size_t j = 0; j < sit.others.size(); ++j) {
      if (sit.others[j].barrier &&
          project_to_path(sit.others[j].state.position, opt.path).abs_offset() > params.barrier_clearance) {
        continue;
      }
      out.push_back(others[j]);
    }
    return out;
  };
  CostTable table;
  table.samples_per_path = profiles.size();
  table.cells.reserve(sit.options.size() * profiles.size());
  for (std::size_t k = 0; k < sit.options.size(); ++k) {
    const auto& opt = sit.options[k];
    const auto opt_others = relevant(opt);
    for (const auto& prof : profiles) {
      CostCell cell;
      cell.option = k;
      cell.profile = prof;
      try {
        cell.trajectory = roll_out(prof, opt.path, sit.ego.v, params.probe, opt.origin);
        cell.cost = evaluate_sample(cell.trajectory, opt_others, params.ego_uncertainty, params.risk, params.benefit,
                                    params.probe.step, opt.route_required);
        cell.valid = std::isfinite(cell.cost.cost);
      } catch (const Error&) {
        cell.valid = false;
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

/// Identity of a selection across planning cycles.
struct Selection {
  std::string target_lane;
  int profile = 0;
  double v_target = 0.0;

  [[nodiscard]] bool same_as(const Selection& o) const {
    return target_lane == o.target_lane && profile == o.profile;
  }
};

struct PlannerOutput {
  Selection selection;
  Direction direction = Direction::Straight;
  std::size_t chosen = 0;  ///< index into table.cells
  CostTable table;
};

/// Strict ordering used for selection: cost, then the stay path, then the
/// smallest speed change, then enumeration keys.
inline bool better_cell(const CostCell& a, const CostCell& b, const Situation& sit) {
  auto key = [&](const CostCell& c) {
    return std::make_tuple(c.cost.cost, sit.options[c.option].side == Direction::Straight ? 0 : 1,
                           std::abs(c.profile.end_velocity - sit.ego.v), sit.options[c.option].target_lane,
                           c.profile.index);
  };
  return key(a) < key(b);
}

inline PlannerOutput select(const Situation& sit, CostTable table) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    if (!table.cells[i].valid) continue;
    if (!best || better_cell(table.cells[i], table.cells[*best], sit)) best = i;
  }
  if (!best) throw Error("select: no valid sample");
  const auto& cell = table.cells[*best];
  const auto& opt = sit.options[cell.option];
  PlannerOutput out;
  out.selection = {opt.target_lane, cell.profile.index, cell.profile.end_velocity};
  out.direction = opt.side;
  out.chosen = *best;
  out.table = std::move(table);
  return out;
}

/// Looks up a selection's cell in a table built for `sit`.
inline const CostCell* find_cell(const Situation& sit, const CostTable& table, const Selection& s) {
  for (std::size_t k = 0; k < sit.options.size(); ++k) {
    if (sit.options[k].target_lane == s.target_lane) return table.find(k, s.profile);
  }
  return nullptr;
}

inline Direction direction_of(const Situation& sit, const Selection& s) {
  for (const auto& opt : sit.options) {
    if (opt.target_lane == s.target_lane) return opt.side;
  }
  return Direction::Straight;
}

struct HysteresisState {
  std::optional<Selection> committed;
  std::optional<Selection> candidate;
  std::optional<double> candidate_since;
  std::size_t switches = 0;
};

/// Commits a new selection only after the committed one has been beaten
/// continuously for `hold` seconds: throughout that window the per-cycle
/// argmin differed from the committed selection and had a lower total cost
/// than the committed selection's current cell. The argmin of the final cycle
/// is committed. A committed selection that is no longer available is
/// replaced at once.
inline Selection step_hysteresis(HysteresisState& st, const Situation& sit, const PlannerOutput& out, double now,
                                 double hold) {
  const Selection& fresh = out.selection;
  auto commit = [&](const Selection& s) {
    st.committed = s;
    st.candidate.reset();
    st.candidate_since.reset();
  };
  if (!st.committed) {
    commit(fresh);
    return *st.committed;
  }
  if (fresh.same_as(*st.committed)) {
    st.candidate.reset();
    st.candidate_since.reset();
    return *st.committed;
  }
  const CostCell* current = find_cell(sit, out.table, *st.committed);
  if (current == nullptr || !current->valid) {
    commit(fresh);
    ++st.switches;
    return *st.committed;
  }
  if (!(out.table.cells[out.chosen].cost.cost < current->cost.cost)) {
    st.candidate.reset();
    st.candidate_since.reset();
    return *st.committed;
  }
  st.candidate = fresh;
  if (!st.candidate_since) st.candidate_since = now;
  if (now - *st.candidate_since >= hold - 1e-9) {
    commit(fresh);
    ++st.switches;
  } else {
    // Keep the committed cell's figures current for the caller.
    st.committed->v_target = current->profile.end_velocity;
  }
  return *st.committed;
}

enum class SpeedAdvice { Accelerate, Brake, Keep };

inline std::string_view to_string(SpeedAdvice a) {
  switch (a) {
    case SpeedAdvice::Accelerate: return "accelerate";
    case SpeedAdvice::Brake: return "brake";
    case SpeedAdvice::Keep: return "keep";
  }
  return "?";
}

struct Warning {
  SpeedAdvice speed = SpeedAdvice::Keep;
  Direction direction = Direction::Straight;
  double magnitude = 0.0;  ///< |v0 - v_tar|
};

inline Warning derive_warning(double v0, double v_target, Direction direction, double dead_band) {
  Warning w;
  w.direction = direction;
  w.magnitude = std::abs(v0 - v_target);
  if (v_target - v0 > dead_band) {
    w.speed = SpeedAdvice::Accelerate;
  } else if (v0 - v_target > dead_band) {
    w.speed = SpeedAdvice::Brake;
  }
  return w;
}

/// Result of one planning cycle.
struct CycleResult {
  Situation situation;
  PlannerOutput raw;
  Selection committed;
  Direction direction = Direction::Straight;
  Warning warning;

  [[nodiscard]] const CostCell& chosen_cell() const { return raw.table.cells[raw.chosen]; }
};

/// Probing planner with hysteresis-filtered advice.
class Planner {
 public:
  explicit Planner(PlannerParams params = {}) : params_(std::move(params)) { params_.validate(); }

  CycleResult cycle(const MapGraph& graph, const EntityState& ego, const std::vector<EntityState>& others) {
    CycleResult r;
    r.situation = build_situation(graph, ego, others, params_, ego_lane_);
    ego_lane_ = r.situation.ego_lane;
    r.raw = select(r.situation, probe(r.situation, params_));
    r.committed = step_hysteresis(hysteresis_, r.situation, r.raw, ego.timestamp, params_.hysteresis_time);
    r.direction = direction_of(r.situation, r.committed);
    r.warning = derive_warning(r.situation.ego.v, r.committed.v_target, r.direction, params_.dead_band);
    return r;
  }

  /// Clears all cycle-to-cycle state. `ego_lane` seeds the lane assignment
  /// when the ego's starting lane is known.
  void reset(std::optional<std::string> ego_lane = std::nullopt) {
    hysteresis_ = {};
    ego_lane_ = std::move(ego_lane);
  }
  [[nodiscard]] const PlannerParams& params() const { return params_; }
  [[nodiscard]] const HysteresisState& hysteresis() const { return hysteresis_; }

 private:
  PlannerParams params_;
  HysteresisState hysteresis_;
  std::optional<std::string> ego_lane_;
};

}  // namespace riskmaps

#endif  // RISKMAPS_PLANNER_HPP
