#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "riskmaps/config_io.hpp"
#include "riskmaps/scenario.hpp"

using namespace riskmaps;

namespace {

json minimal_scenario() {
  return json::parse(R"({
    "name": "tiny",
    "duration": 2.0,
    "map": {"lanes": [{"id": "A", "centerline": [[0, 0], [200, 0]]}]},
    "vehicles": [
      {"id": "ego", "ego": true, "mode": "scripted", "lane": "A", "s": 10, "v": 5},
      {"id": "car", "lane": "A", "s": 40, "v": 3}
    ]
  })");
}

}  // namespace

TEST(Parameters, RoundTripAndOverride) {
  PlannerParams p;
  p.risk.severity_scale = 3.25;
  PlannerParams q;
  apply_json(q, to_json(p));
  EXPECT_EQ(to_json(q), to_json(p));

  apply_override(q, "planner.hysteresis_time=1.5");
  EXPECT_DOUBLE_EQ(q.hysteresis_time, 1.5);
  apply_override(q, "probe.samples=11");
  EXPECT_EQ(q.probe.samples, 11);
}

TEST(Parameters, BadInputIsAConfigError) {
  PlannerParams p;
  EXPECT_THROW(apply_override(p, "hysteresis_time=1"), ConfigError);
  EXPECT_THROW(apply_override(p, "planner.nonexistent=1"), ConfigError);
  EXPECT_THROW(apply_override(p, "nogroup.x=1"), ConfigError);
  EXPECT_THROW(apply_override(p, "planner.dead_band=abc"), ConfigError);
  EXPECT_THROW(apply_override(p, "planner.dead_band=\"x\""), ConfigError);
  EXPECT_THROW(apply_override(p, "probe.a_max=-1"), ConfigError);
}

TEST(Map, GeodeticCenterlinesAreProjected) {
  const auto m = parse_map(json::parse(R"({
    "projection": {"ref_lat_deg": 0},
    "lanes": [{"id": "A", "centerline_geo": [[0, 0], [0, 0.001]]}]
  })"));
  ASSERT_EQ(m.lanes.size(), 1u);
  EXPECT_NEAR(m.lanes[0].centerline[1].x, 6371000.0 * deg_to_rad(0.001), 1e-9);
}

TEST(Map, Errors) {
  EXPECT_THROW(parse_map(json::parse(R"({"lanes": []})")), ConfigError);
  EXPECT_THROW(parse_map(json::parse(R"({"lanes": [{"id": "A", "centerline": [[0, 0]]}]})")), ConfigError);
  EXPECT_THROW(parse_map(json::parse(R"({"lanes": [{"id": "A", "centerline": [["x", 0], [1, 1]]}]})")), ConfigError);
  const auto dangling = parse_map(json::parse(R"({"lanes": [{"id": "A", "centerline": [[0, 0], [1, 0]], "successors": ["Z"]}]})"));
  EXPECT_THROW(build_graph(dangling), ConfigError);
}

TEST(Map, BuildGraphAndSnapshotRoundTrip) {
  const auto g = build_graph(two_lane_merge_map(100.0));
  EXPECT_EQ(g.neighbor("R", Direction::Left), "L");
  EXPECT_EQ(g.neighbor("L", Direction::Right), "R");
  EXPECT_TRUE(g.node("R").get<bool>(attr::kClosedEnd).value());
  EXPECT_TRUE(g.has_relation("road", RelationLabel::HasPart, "road_fwd"));

  const auto snap = export_snapshot(g);
  const auto back = import_snapshot(snap);
  EXPECT_EQ(back.relations(), g.relations());
  EXPECT_EQ(back.nodes().size(), g.nodes().size());
  EXPECT_EQ(export_snapshot(back), snap);
  EXPECT_THROW(import_snapshot(json::parse(R"({"nodes": 3})")), ConfigError);
}

TEST(Scenario, ParseAndRoundTrip) {
  const auto sc = parse_scenario(minimal_scenario());
  EXPECT_EQ(sc.vehicles.size(), 2u);
  EXPECT_EQ(sc.cycles(), 20u);
  EXPECT_EQ(sc.ego().id, "ego");
  const auto again = parse_scenario(to_json(sc));
  EXPECT_EQ(to_json(again), to_json(sc));
}

TEST(Scenario, BundledGeneratorsSurviveSerialization) {
  for (const auto& sc : {make_gap_scenario(), make_no_gap_scenario()}) {
    const auto again = parse_scenario(to_json(sc));
    EXPECT_EQ(to_json(again), to_json(sc));
    EXPECT_EQ(again.vehicles.size(), 3u);
    EXPECT_EQ(again.map.lanes.size(), 2u);
  }
}

TEST(Scenario, ValidationErrors) {
  auto j = minimal_scenario();
  j["vehicles"][0]["ego"] = false;
  EXPECT_THROW(parse_scenario(j), ConfigError);

  j = minimal_scenario();
  j["vehicles"][1]["id"] = "ego";
  EXPECT_THROW(parse_scenario(j), ConfigError);

  j = minimal_scenario();
  j["vehicles"][1]["lane"] = "nowhere";
  EXPECT_THROW(parse_scenario(j), ConfigError);

  j = minimal_scenario();
  j["vehicles"][1]["mode"] = "human";
  EXPECT_THROW(parse_scenario(j), ConfigError);

  j = minimal_scenario();
  j["parameters"] = {{"risk", {{"escape_time", -1}}}};
  EXPECT_THROW(parse_scenario(j), ConfigError);

  j = minimal_scenario();
  j.erase("map");
  EXPECT_THROW(parse_scenario(j), ConfigError);
}

TEST(Scenario, MapFileIsResolvedNextToTheScenario) {
  const auto dir = std::filesystem::temp_directory_path() / "riskmaps_test_mapfile";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "road.json") << minimal_scenario()["map"].dump();
    auto j = minimal_scenario();
    j.erase("map");
    j["map_file"] = "road.json";
    std::ofstream(dir / "scenario.json") << j.dump();
  }
  const auto sc = load_scenario((dir / "scenario.json").string());
  EXPECT_EQ(sc.map.lanes.front().id, "A");
  EXPECT_THROW(load_scenario((dir / "missing.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}
