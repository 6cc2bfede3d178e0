// Fixtures shared by the unit tests and the acceptance binary.

#ifndef RISKMAPS_TESTS_SUPPORT_HPP
#define RISKMAPS_TESTS_SUPPORT_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "riskmaps/planner.hpp"
#include "riskmaps/scenario.hpp"

namespace riskmaps::fixtures {

/// Hand-made situation with one option per (lane, side) pair and no geometry.
inline Situation synthetic_situation(const std::vector<std::pair<std::string, Direction>>& options, double v0) {
  Situation sit;
  sit.ego.v = v0;
  for (const auto& [lane, side] : options) {
    PathOption o;
    o.target_lane = lane;
    o.side = side;
    sit.options.push_back(std::move(o));
  }
  return sit;
}

struct SyntheticCell {
  std::size_t option;
  int profile;
  double end_velocity;
  double cost;
};

inline CostTable synthetic_table(const std::vector<SyntheticCell>& cells) {
  CostTable t;
  for (const auto& c : cells) {
    CostCell cell;
    cell.option = c.option;
    cell.profile.index = c.profile;
    cell.profile.end_velocity = c.end_velocity;
    cell.cost.cost = c.cost;
    t.cells.push_back(std::move(cell));
  }
  return t;
}

/// Runs the hysteresis filter over a cost schedule for a stay option "A" and
/// a change option "B" at 10 Hz. `costs(k)` gives (C_A, C_B) for cycle k.
/// Returns the committed lane per cycle and the switch count.
template <typename Costs>
std::pair<std::vector<std::string>, std::size_t> run_hysteresis(std::size_t cycles, Costs&& costs,
                                                                double hold = 2.0) {
  const auto sit = synthetic_situation({{"A", Direction::Straight}, {"B", Direction::Left}}, 5.0);
  HysteresisState st;
  std::vector<std::string> committed;
  for (std::size_t k = 0; k < cycles; ++k) {
    const auto [ca, cb] = costs(k);
    const auto out = select(sit, synthetic_table({{0, 5, 5.0, ca}, {1, 5, 5.0, cb}}));
    committed.push_back(step_hysteresis(st, sit, out, 0.1 * static_cast<double>(k), hold).target_lane);
  }
  return {committed, st.switches};
}

/// Straight road with `n` parallel lanes 3.5 m apart, ids "0", "1", ...
/// from right to left, each `length` m long.
inline MapSpec parallel_lanes(int n, double length) {
  MapSpec m;
  for (int i = 0; i < n; ++i) {
    LaneSpec l;
    l.id = std::to_string(i);
    l.centerline = {{0.0, 3.5 * i}, {length, 3.5 * i}};
    if (i + 1 < n) l.left = std::to_string(i + 1);
    if (i > 0) l.right = std::to_string(i - 1);
    m.lanes.push_back(std::move(l));
  }
  return m;
}

}  // namespace riskmaps::fixtures

#endif  // RISKMAPS_TESTS_SUPPORT_HPP
