#ifndef RISKMAPS_PATH_HPP
#define RISKMAPS_PATH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "riskmaps/error.hpp"
#include "riskmaps/geo.hpp"

namespace riskmaps {

/// Arclength-parameterized polyline. Points are evenly spaced at most
/// `kMaxSpacing` apart; curvature is the finite difference of the tangent
/// angle over arclength.
struct Path {
  static constexpr double kMaxSpacing = 1.0;

  std::vector<WorldPoint> points;
  std::vector<double> arclength;
  std::vector<double> curvature;
  std::vector<std::string> lane_ids;

  [[nodiscard]] double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
  [[nodiscard]] std::size_t size() const { return points.size(); }
};

struct ProjectionResult {
  double arclength = 0.0;
  double offset = 0.0;  ///< signed lateral offset, positive to the left
  std::size_t segment = 0;

  [[nodiscard]] double abs_offset() const { return std::abs(offset); }
};

namespace detail {

inline double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Index i such that arclength[i] <= s < arclength[i+1]; clamped to valid segments.
inline std::size_t segment_at(const Path& path, double s) {
  if (path.size() < 2) return 0;
  auto it = std::upper_bound(path.arclength.begin(), path.arclength.end(), s);
  auto idx = static_cast<std::size_t>(std::distance(path.arclength.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, path.size() - 2);
}

inline std::vector<double> cumulative_length(const std::vector<WorldPoint>& pts) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + distance(pts[i - 1], pts[i]);
  return s;
}

inline WorldPoint lerp(WorldPoint a, WorldPoint b, double t) { return a + t * (b - a); }

}  // namespace detail

/// Builds a path from raw vertices: drops repeated vertices, resamples to
/// uniform spacing no larger than `max_spacing` and computes curvature.
inline Path make_path(const std::vector<WorldPoint>& raw, std::vector<std::string> lane_ids = {},
                      double max_spacing = Path::kMaxSpacing) {
  std::vector<WorldPoint> pts;
  pts.reserve(raw.size());
  for (const auto& p : raw) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error("make_path: non-finite vertex");
    if (pts.empty() || distance(pts.back(), p) > 1e-9) pts.push_back(p);
  }
  if (pts.size() < 2) throw Error("make_path: need at least two distinct vertices");

  const auto raw_s = detail::cumulative_length(pts);
  const double total = raw_s.back();
  const auto n_seg = static_cast<std::size_t>(std::ceil(total / max_spacing - 1e-9));
  const double step = total / static_cast<double>(n_seg);

  Path path;
  path.lane_ids = std::move(lane_ids);
  path.points.reserve(n_seg + 1);
  path.arclength.reserve(n_seg + 1);
  std::size_t seg = 0;
  for (std::size_t i = 0; i <= n_seg; ++i) {
    const double s = (i == n_seg) ? total : step * static_cast<double>(i);
    while (seg + 2 < pts.size() && raw_s[seg + 1] <= s) ++seg;
    const double len = raw_s[seg + 1] - raw_s[seg];
    const double t = std::clamp((s - raw_s[seg]) / len, 0.0, 1.0);
    path.points.push_back(detail::lerp(pts[seg], pts[seg + 1], t));
    path.arclength.push_back(s);
  }

  const std::size_t n = path.points.size();
  std::vector<double> heading(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto d = path.points[i + 1] - path.points[i];
    heading[i] = std::atan2(d.y, d.x);
  }
  path.curvature.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ds = 0.5 * (path.arclength[i + 1] - path.arclength[i - 1]);
    path.curvature[i] = detail::wrap_angle(heading[i] - heading[i - 1]) / ds;
  }
  if (n > 2) {
    path.curvature.front() = path.curvature[1];
    path.curvature.back() = path.curvature[n - 2];
  }
  return path;
}

/// Position at arclength `s`, clamped to the path ends.
inline WorldPoint position_at(const Path& path, double s) {
  if (path.empty()) throw Error("position_at: empty path");
  if (path.size() == 1 || s <= 0.0) return path.points.front();
  if (s >= path.length()) return path.points.back();
  const auto i = detail::segment_at(path, s);
  const double len = path.arclength[i + 1] - path.arclength[i];
  return detail::lerp(path.points[i], path.points[i + 1], (s - path.arclength[i]) / len);
}

/// Tangent direction (radians, counter-clockwise from east) at arclength `s`.
inline double heading_at(const Path& path, double s) {
  if (path.size() < 2) return 0.0;
  const auto i = detail::segment_at(path, std::clamp(s, 0.0, path.length()));
  const auto d = path.points[i + 1] - path.points[i];
  return std::atan2(d.y, d.x);
}

inline double curvature_at(const Path& path, double s) {
  if (path.size() < 2) return 0.0;
  if (s <= 0.0) return path.curvature.front();
  if (s >= path.length()) return path.curvature.back();
  const auto i = detail::segment_at(path, s);
  const double t = (s - path.arclength[i]) / (path.arclength[i + 1] - path.arclength[i]);
  return (1.0 - t) * path.curvature[i] + t * path.curvature[i + 1];
}

/// Nearest point on the polyline. Ties go to the smaller arclength.
inline ProjectionResult project_to_path(const WorldPoint& p, const Path& path) {
  if (path.empty()) throw Error("project_to_path: empty path");
  if (path.size() == 1) return {0.0, distance(p, path.points.front()), 0};

  ProjectionResult best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto a = path.points[i];
    const auto ab = path.points[i + 1] - a;
    const double len2 = dot(ab, ab);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    const auto foot = a + t * ab;
    const double d = distance(p, foot);
    if (d < best_dist) {
      best_dist = d;
      const double side = cross(ab, p - a);
      best.arclength = path.arclength[i] + t * (path.arclength[i + 1] - path.arclength[i]);
      best.offset = side < 0.0 ? -d : d;
      best.segment = i;
    }
  }
  return best;
}

/// Sub-path between two arclengths (clamped), resampled.
inline Path slice_path(const Path& path, double from, double to) {
  from = std::clamp(from, 0.0, path.length());
  to = std::clamp(to, from, path.length());
  std::vector<WorldPoint> pts{position_at(path, from)};
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path.arclength[i] > from && path.arclength[i] < to) pts.push_back(path.points[i]);
  }
  pts.push_back(position_at(path, to));
  return make_path(pts, path.lane_ids);
}

}  // namespace riskmaps

#endif  // RISKMAPS_PATH_HPP
