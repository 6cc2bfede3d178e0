#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "riskmaps/path.hpp"

using namespace riskmaps;

namespace {

// Arc of radius r around the origin, from angle 0 to `sweep`.
std::vector<WorldPoint> arc(double r, double sweep, int n) {
  std::vector<WorldPoint> pts;
  for (int i = 0; i <= n; ++i) {
    const double a = sweep * i / n;
    pts.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return pts;
}

}  // namespace

TEST(MakePath, ResamplesToAtMostOneMeter) {
  const auto p = make_path({{0, 0}, {10.5, 0}, {10.5, 7.25}});
  EXPECT_NEAR(p.length(), 17.75, 1e-12);
  for (std::size_t i = 1; i < p.size(); ++i) {
    EXPECT_LE(p.arclength[i] - p.arclength[i - 1], Path::kMaxSpacing + 1e-12);
  }
  EXPECT_EQ(p.points.back(), (WorldPoint{10.5, 7.25}));
}

TEST(MakePath, DropsDuplicatesAndRejectsDegenerate) {
  EXPECT_THROW(make_path({{1, 1}, {1, 1}}), Error);
  EXPECT_THROW(make_path({{0, 0}, {NAN, 1}}), Error);
  const auto p = make_path({{0, 0}, {0, 0}, {3, 0}});
  EXPECT_NEAR(p.length(), 3.0, 1e-12);
}

TEST(MakePath, CurvatureOfCircle) {
  const auto p = make_path(arc(50.0, std::numbers::pi / 2, 400));
  for (std::size_t i = 2; i + 2 < p.size(); ++i) EXPECT_NEAR(p.curvature[i], 0.02, 2e-4);
  const auto cw = make_path({{0, 0}, {10, 0}, {20, -1}, {30, -3}});
  EXPECT_LT(*std::min_element(cw.curvature.begin(), cw.curvature.end()), 0.0);
  EXPECT_LE(*std::max_element(cw.curvature.begin(), cw.curvature.end()), 1e-12);
}

TEST(ProjectToPath, OnPathAndLeftOffset) {
  const auto p = make_path({{0, 0}, {20, 0}});
  const auto on = project_to_path({7.3, 0.0}, p);
  EXPECT_NEAR(on.offset, 0.0, 1e-12);
  EXPECT_NEAR(on.arclength, 7.3, 1e-12);
  const auto left = project_to_path({5.0, 3.0}, p);
  EXPECT_NEAR(left.abs_offset(), 3.0, 1e-12);
  EXPECT_GT(left.offset, 0.0);
  EXPECT_LT(project_to_path({5.0, -2.0}, p).offset, 0.0);
}

TEST(ProjectToPath, BeyondEndClampsToLastVertex) {
  const auto p = make_path({{0, 0}, {10, 0}, {10, 10}});
  const WorldPoint q{10.0, 14.0};
  const auto r = project_to_path(q, p);
  EXPECT_NEAR(r.arclength, p.length(), 1e-12);
  // Brute force over the vertices.
  double best = INFINITY;
  for (const auto& v : p.points) best = std::min(best, distance(v, q));
  EXPECT_NEAR(r.abs_offset(), best, 1e-12);
}

TEST(PositionAt, InterpolatesAndClamps) {
  const auto p = make_path({{0, 0}, {10, 0}, {10, 10}});
  const auto mid = position_at(p, 15.0);
  EXPECT_NEAR(mid.x, 10.0, 1e-12);
  EXPECT_NEAR(mid.y, 5.0, 1e-12);
  EXPECT_EQ(position_at(p, -3.0), p.points.front());
  EXPECT_EQ(position_at(p, 99.0), p.points.back());
  EXPECT_NEAR(heading_at(p, 15.0), std::numbers::pi / 2, 1e-12);
}

TEST(SlicePath, KeepsGeometryBetweenBounds) {
  const auto p = make_path({{0, 0}, {100, 0}});
  const auto s = slice_path(p, 20.5, 60.0);
  EXPECT_NEAR(s.length(), 39.5, 1e-9);
  EXPECT_NEAR(s.points.front().x, 20.5, 1e-12);
  EXPECT_NEAR(s.points.back().x, 60.0, 1e-12);
}
