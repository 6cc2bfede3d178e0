#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "riskmaps/rldm.hpp"

using namespace riskmaps;

namespace {

Node lane(const std::string& id, std::vector<WorldPoint> line, bool closed = false) {
  Node n{id, NodeLabel::LaneSegment, {}};
  n.attributes[attr::kCenterline] = std::move(line);
  if (closed) n.attributes[attr::kClosedEnd] = true;
  return n;
}

Node sensor(const std::string& id) { return Node{id, NodeLabel::Sensor, {{attr::kSensorType, std::string("camera")}}}; }

// Lanes R (ends at x=100, closed) and L (x up to 400) 3.5 m apart, plus a camera.
MapGraph two_lanes() {
  MapGraph g;
  g.add_node(lane("R", {{0, 0}, {100, 0}}, true));
  g.add_node(lane("L", {{0, 3.5}, {400, 3.5}}));
  g.add_relation("R", RelationLabel::Neighbor, "L", "left");
  g.add_relation("L", RelationLabel::Neighbor, "R", "right");
  g.add_node(sensor("cam"));
  return g;
}

EntityState at(const std::string& id, double x, double y, double t, double v = 5.0) {
  return EntityState{id, {x, y}, v, 0.0, t};
}

}  // namespace

TEST(Schema, ContainsRequiresLaneToVehicle) {
  MapGraph g = two_lanes();
  g.add_node(Node{"V1", NodeLabel::Vehicle, {}});
  EXPECT_NO_THROW(g.add_relation("R", RelationLabel::Contains, "V1"));
  EXPECT_THROW(g.add_relation("V1", RelationLabel::Contains, "R"), Error);
}

TEST(Schema, MeasurementFromSensor) {
  MapGraph g = two_lanes();
  g.add_node(Node{"V2", NodeLabel::Vehicle, {}});
  EXPECT_NO_THROW(g.add_relation("cam", RelationLabel::HasMeasurement, "V2"));
  EXPECT_THROW(g.add_relation("V2", RelationLabel::HasMeasurement, "cam"), Error);
}

TEST(Schema, NodeAndRelationConstraints) {
  MapGraph g = two_lanes();
  EXPECT_THROW(g.add_node(lane("R", {{0, 0}, {1, 0}})), Error);
  EXPECT_THROW(g.add_node(Node{"nolane", NodeLabel::LaneSegment, {}}), Error);
  EXPECT_THROW(g.add_node(Node{"s", NodeLabel::Sensor, {}}), Error);
  EXPECT_THROW(g.add_relation("R", RelationLabel::Neighbor, "L", "up"), Error);
  EXPECT_THROW(g.add_relation("R", RelationLabel::Successor, "cam"), Error);
  EXPECT_THROW(g.add_relation("R", RelationLabel::Successor, "nowhere"), Error);

  g.add_node(Node{"road", NodeLabel::Road, {}});
  for (const char* h : {"h1", "h2", "h3"}) g.add_node(Node{h, NodeLabel::HalfRoad, {}});
  g.add_relation("road", RelationLabel::HasPart, "h1");
  g.add_relation("road", RelationLabel::HasPart, "h2");
  EXPECT_THROW(g.add_relation("road", RelationLabel::HasPart, "h3"), Error);
}

TEST(Schema, DuplicateRelationIsIdempotent) {
  MapGraph g = two_lanes();
  const auto before = g.relations().size();
  g.add_relation("R", RelationLabel::Neighbor, "L", "left");
  EXPECT_EQ(g.relations().size(), before);
}

TEST(RetrievePaths, TwoLaneRoadGivesStayAndNeighbor) {
  const MapGraph g = two_lanes();
  const auto paths = retrieve_paths(g, "R", 200.0);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].side, Direction::Straight);
  EXPECT_TRUE(paths[0].closed_end);
  EXPECT_NEAR(paths[0].path.length(), 100.0, 1e-9);
  EXPECT_EQ(paths[1].lane_id, "L");
  EXPECT_EQ(paths[1].side, Direction::Left);
  EXPECT_NEAR(paths[1].path.length(), 200.0, 1e-9);
  EXPECT_FALSE(paths[1].closed_end);
}

TEST(RetrievePaths, IsolatedLane) {
  MapGraph g;
  g.add_node(lane("A", {{0, 0}, {30, 0}}));
  EXPECT_EQ(retrieve_paths(g, "A", 50.0).size(), 1u);
}

TEST(RetrievePaths, SuccessorChainTruncatedAtHorizon) {
  MapGraph g;
  g.add_node(lane("a", {{0, 0}, {50, 0}}));
  g.add_node(lane("b", {{50, 0}, {100, 0}}));
  g.add_node(lane("c", {{100, 0}, {150, 0}}));
  g.add_relation("a", RelationLabel::Successor, "b");
  g.add_relation("b", RelationLabel::Successor, "c");
  const auto paths = retrieve_paths(g, "a", 120.0);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_NEAR(paths[0].path.length(), 120.0, 1.0);
  EXPECT_FALSE(paths[0].closed_end);
  EXPECT_EQ(paths[0].path.lane_ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(RetrievePaths, StartOffsetAlignsNeighbor) {
  const MapGraph g = two_lanes();
  const auto paths = retrieve_paths(g, "R", 50.0, 30.0);
  EXPECT_NEAR(paths[0].path.points.front().x, 30.0, 1e-9);
  EXPECT_NEAR(paths[1].path.points.front().x, 30.0, 1e-9);
}

TEST(FilterObstacles, GeofenceBoundary) {
  const MapGraph g = two_lanes();
  const auto paths = retrieve_paths(g, "R", 200.0);
  const std::vector<EntityState> states{
      at("near_left", 50, 5.5, 0),   // 2 m from L
      at("far", 50, 11.5, 0),        // 8 m from L
      at("edge", 150, 8.5, 0),       // exactly 5 m from L
  };
  const auto kept = filter_obstacles(states, paths);
  std::set<std::string> ids;
  for (const auto& k : kept) ids.insert(k.state.id);
  EXPECT_EQ(ids, (std::set<std::string>{"near_left", "edge"}));
  for (const auto& k : kept) EXPECT_EQ(k.path_index, 1u);
}

TEST(Ingest, FirstSightingCreatesNodeAndEdges) {
  MapGraph g = two_lanes();
  ASSERT_TRUE(ingest_measurement(g, "cam", at("V3", 20, 0.2, 0.0), 0.1));
  EXPECT_EQ(g.node("V3").label, NodeLabel::Vehicle);
  EXPECT_TRUE(g.has_relation("cam", RelationLabel::HasMeasurement, "V3"));
  EXPECT_TRUE(g.has_relation("R", RelationLabel::Contains, "V3"));
  EXPECT_EQ(g.lane_of("V3"), "R");
}

TEST(Ingest, ResightingOnNewLaneMovesContains) {
  MapGraph g = two_lanes();
  ingest_measurement(g, "cam", at("V3", 20, 0.2, 0.0), 0.1);
  ingest_measurement(g, "cam", at("V3", 25, 3.1, 0.2), 0.1);
  EXPECT_FALSE(g.has_relation("R", RelationLabel::Contains, "V3"));
  EXPECT_TRUE(g.has_relation("L", RelationLabel::Contains, "V3"));
  EXPECT_EQ(g.sources("V3", RelationLabel::Contains).size(), 1u);
}

TEST(Ingest, HundredHertzInputIsCoalescedToPushPeriod) {
  MapGraph g = two_lanes();
  int updates = 0;
  for (int i = 0; i < 100; ++i) {
    if (ingest_measurement(g, "cam", at("imu", 0.05 * i, 0, 0.01 * i), 0.1)) ++updates;
  }
  EXPECT_LE(updates, 10);
  EXPECT_GE(updates, 9);
}

TEST(Ingest, Errors) {
  MapGraph g = two_lanes();
  EXPECT_THROW(ingest_measurement(g, "R", at("V", 0, 0, 0), 0.1), Error);
  ingest_measurement(g, "cam", at("V", 0, 0, 1.0), 0.1);
  EXPECT_THROW(ingest_measurement(g, "cam", at("V", 0, 0, 0.5), 0.1), Error);
  EXPECT_THROW(ingest_measurement(g, "cam", at("W", 0, 0, 0, -1.0), 0.1), Error);
}

TEST(DistanceBetween, Euclidean) {
  MapGraph g = two_lanes();
  ingest_measurement(g, "cam", at("a", 0, 0, 0), 0.1);
  ingest_measurement(g, "cam", at("b", 3, 4, 0), 0.1);
  ingest_measurement(g, "cam", at("c", 0, 0, 0), 0.1);
  EXPECT_DOUBLE_EQ(distance_between(g, "a", "b"), 5.0);
  EXPECT_DOUBLE_EQ(distance_between(g, "a", "c"), 0.0);
  EXPECT_THROW(distance_between(g, "a", "nobody"), Error);
}
