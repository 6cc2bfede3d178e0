#ifndef RISKMAPS_GEO_HPP
#define RISKMAPS_GEO_HPP

#include <cmath>
#include <numbers>

#include "riskmaps/error.hpp"

namespace riskmaps {

/// Geodetic position, radians.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

/// World frame position in meters; x east, y north.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

/// Ego-relative position in meters; x forward, y left.
struct BodyPoint {
  double x_rel = 0.0;
  double y_rel = 0.0;
};

struct ProjectionConfig {
  double earth_radius = 6371000.0;
  double ref_lat = 0.0;
};

inline WorldPoint operator+(WorldPoint a, WorldPoint b) { return {a.x + b.x, a.y + b.y}; }
inline WorldPoint operator-(WorldPoint a, WorldPoint b) { return {a.x - b.x, a.y - b.y}; }
inline WorldPoint operator*(double k, WorldPoint a) { return {k * a.x, k * a.y}; }

inline double norm(WorldPoint p) { return std::hypot(p.x, p.y); }
inline double distance(WorldPoint a, WorldPoint b) { return norm(a - b); }
inline double dot(WorldPoint a, WorldPoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(WorldPoint a, WorldPoint b) { return a.x * b.y - a.y * b.x; }

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Equirectangular projection around the reference latitude.
inline WorldPoint geodetic_to_world(const GeoPoint& p, const ProjectionConfig& cfg) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
    throw Error("geodetic_to_world: non-finite coordinate");
  }
  if (!(cfg.earth_radius > 0.0) || !std::isfinite(cfg.ref_lat)) {
    throw Error("geodetic_to_world: invalid projection config");
  }
  if (std::abs(p.lat) > std::numbers::pi / 2 || std::abs(p.lon) > std::numbers::pi) {
    throw Error("geodetic_to_world: coordinate out of range");
  }
  return {cfg.earth_radius * std::cos(cfg.ref_lat) * p.lon, cfg.earth_radius * p.lat};
}

/// Rotates a body-frame offset by the heading (counter-clockwise from east)
/// and translates it to the origin.
inline WorldPoint body_to_world(const BodyPoint& p, double heading, const WorldPoint& origin) {
  if (!std::isfinite(heading) || !std::isfinite(p.x_rel) || !std::isfinite(p.y_rel)) {
    throw Error("body_to_world: non-finite input");
  }
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {origin.x + c * p.x_rel - s * p.y_rel, origin.y + s * p.x_rel + c * p.y_rel};
}

/// Inverse of body_to_world.
inline BodyPoint world_to_body(const WorldPoint& p, double heading, const WorldPoint& origin) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double dx = p.x - origin.x;
  const double dy = p.y - origin.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

}  // namespace riskmaps

#endif  // RISKMAPS_GEO_HPP
