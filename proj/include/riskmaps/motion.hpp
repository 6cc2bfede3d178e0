#ifndef RISKMAPS_MOTION_HPP
#define RISKMAPS_MOTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "riskmaps/error.hpp"
#include "riskmaps/path.hpp"

namespace riskmaps {

/// Longitudinal probing configuration.
struct ProbeConfig {
  int samples = 21;      ///< velocity profiles per path, >= 3
  double v_max = 20.0;   ///< m/s
  double a_max = 3.0;    ///< m/s^2, > 0
  double a_min = -4.0;   ///< m/s^2, < 0
  double horizon = 12.0; ///< s
  double step = 0.1;     ///< s

  void validate() const {
    if (samples < 3) throw Error("ProbeConfig: at least 3 samples are required");
    if (!(v_max > 0.0)) throw Error("ProbeConfig: v_max must be positive");
    if (!(a_min < 0.0 && a_max > 0.0)) throw Error("ProbeConfig: need a_min < 0 < a_max");
    if (!(step > 0.0 && step < horizon)) throw Error("ProbeConfig: need 0 < step < horizon");
  }

  [[nodiscard]] std::size_t steps() const {
    return static_cast<std::size_t>(std::llround(horizon / step)) + 1;
  }
};

/// Ramp to `end_velocity` at constant `accel`, then constant speed.
struct VelocityProfile {
  int index = 0;
  double end_velocity = 0.0;
  double accel = 0.0;
  double ramp_duration = 0.0;
};

struct TrajectoryPoint {
  double time = 0.0;       ///< future time s
  WorldPoint position;
  double arclength = 0.0;  ///< on the sample's path
  double v = 0.0;
  double a = 0.0;
  double jerk = 0.0;
  double heading = 0.0;
  double curvature = 0.0;
};

struct TrajectorySample {
  std::vector<TrajectoryPoint> points;
  bool overran = false;  ///< the motion reached the path end and was pinned there
};

/// End velocities equidistant on [0, v_max]; ramp accelerations scaled
/// between zero and a_max (a_min) by the velocity change.
inline std::vector<VelocityProfile> sample_profiles(double v0, const ProbeConfig& cfg) {
  cfg.validate();
  if (!(v0 >= 0.0)) throw Error("sample_profiles: negative initial velocity");
  if (v0 > cfg.v_max) throw Error("sample_profiles: initial velocity exceeds v_max");
  std::vector<VelocityProfile> out;
  out.reserve(static_cast<std::size_t>(cfg.samples));
  for (int h = 0; h < cfg.samples; ++h) {
    VelocityProfile p;
    p.index = h;
    p.end_velocity = static_cast<double>(h) * cfg.v_max / (cfg.samples - 1);
    const double dv = p.end_velocity - v0;
    if (dv > 0.0) {
      p.accel = cfg.a_max * dv / (cfg.v_max - v0);
      p.ramp_duration = (cfg.v_max - v0) / cfg.a_max;
    } else if (dv < 0.0) {
      p.accel = cfg.a_min * (-dv) / v0;
      p.ramp_duration = v0 / -cfg.a_min;
    }
    out.push_back(p);
  }
  return out;
}

namespace detail {

// Samples the path motion given by `offset(t)` and `velocity(t)` on the time grid.
template <typename Offset, typename Velocity, typename Accel>
TrajectorySample sample_motion(const Path& path, double start, const ProbeConfig& cfg, Offset&& offset,
                               Velocity&& velocity, Accel&& accel) {
  if (path.empty()) throw Error("roll_out: empty path");
  TrajectorySample out;
  const std::size_t n = cfg.steps();
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrajectoryPoint pt;
    pt.time = cfg.step * static_cast<double>(i);
    double s = start + offset(pt.time);
    if (s > path.length()) {
      s = path.length();
      out.overran = true;
    }
    pt.arclength = s;
    pt.position = position_at(path, s);
    pt.heading = heading_at(path, s);
    pt.curvature = curvature_at(path, s);
    pt.v = velocity(pt.time);
    pt.a = accel(pt.time);
    if (i > 0) pt.jerk = std::abs(pt.a - out.points.back().a) / cfg.step;
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace detail

/// Kinematic roll-out of a velocity profile along `path`, starting at
/// arclength `start`. Past the path end the position stays pinned.
///
/// The acceleration stored at a grid point is the mean of the piecewise
/// constant acceleration over the cell centered on it, so trapezoidal
/// quadrature of |a| is exact for a single ramp.
inline TrajectorySample roll_out(const VelocityProfile& profile, const Path& path, double v0,
                                 const ProbeConfig& cfg, double start = 0.0) {
  cfg.validate();
  const double a = profile.accel;
  const double ramp = profile.ramp_duration;
  const double half = 0.5 * cfg.step;
  auto velocity = [&](double t) {
    const double v = t < ramp ? v0 + a * t : profile.end_velocity;
    return std::clamp(v, 0.0, cfg.v_max);
  };
  auto offset = [&](double t) {
    if (t <= ramp) return v0 * t + 0.5 * a * t * t;
    return v0 * ramp + 0.5 * a * ramp * ramp + profile.end_velocity * (t - ramp);
  };
  auto accel = [&](double t) {
    if (ramp <= 0.0) return 0.0;
    return a * std::clamp((ramp - (t - half)) / cfg.step, 0.0, 1.0);
  };
  return detail::sample_motion(path, start, cfg, offset, velocity, accel);
}

/// Constant-velocity prediction of another entity from its projected arclength.
inline TrajectorySample predict_other(double v, const Path& path, double start, const ProbeConfig& cfg) {
  cfg.validate();
  if (!(v >= 0.0)) throw Error("predict_other: negative velocity");
  return detail::sample_motion(
      path, start, cfg, [&](double t) { return v * t; }, [&](double) { return v; },
      [](double) { return 0.0; });
}

/// Lane-change blending parameters.
struct BlendSpec {
  double start_time = 1.0;  ///< s until the blend begins
  double scale = 1.0;       ///< l_c, s^2/m
  double steepness = 10.0;  ///< sigmoid k
  double lateral_gap = 0.0; ///< d_path, m

  void validate() const {
    if (!(start_time >= 0.0)) throw Error("BlendSpec: start_time must be >= 0");
    if (!(scale > 0.0)) throw Error("BlendSpec: scale must be > 0");
    if (!(steepness > 0.0)) throw Error("BlendSpec: steepness must be > 0");
    if (!(lateral_gap >= 0.0)) throw Error("BlendSpec: lateral_gap must be >= 0");
  }
};

struct BlendWindow {
  double start = 0.0;
  double length = 0.0;
  double end = 0.0;
};

inline BlendWindow blend_window(double v0, const BlendSpec& spec) {
  BlendWindow w;
  w.start = v0 * spec.start_time;
  w.length = v0 * std::sqrt(spec.scale * spec.lateral_gap);
  w.end = w.start + w.length;
  return w;
}

/// Logistic sigmoid centered on w = 0.5 and rescaled to hit 0 and 1 exactly
/// at the interval ends.
inline double blend_weight(double w, double k) {
  auto sigma = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  w = std::clamp(w, 0.0, 1.0);
  const double lo = sigma(-0.5 * k);
  const double hi = sigma(0.5 * k);
  return (sigma(k * (w - 0.5)) - lo) / (hi - lo);
}

struct BlendedPath {
  Path path;
  double origin = 0.0;  ///< arclength of the ego position on `path`
  BlendWindow window;   ///< relative to the ego position
};

/// Sigmoidal blend from `ego` into `other`. Both paths are sampled on a common
/// grid measured from their ego-abreast points `ego_origin` / `other_origin`.
inline BlendedPath blend_paths(const Path& ego, const Path& other, double v0, const BlendSpec& spec,
                               double ego_origin = 0.0, double other_origin = 0.0,
                               double grid = 0.5) {
  spec.validate();
  if (ego.empty() || other.empty()) throw Error("blend_paths: empty path");
  BlendedPath out;
  out.window = blend_window(v0, spec);
  const double back = std::min(ego_origin, other_origin);
  const double ahead = other.length() - other_origin;
  const auto n = static_cast<std::size_t>(std::ceil((back + ahead) / grid - 1e-9));
  // Sample offsets from the ego position: the uniform grid plus the window
  // ends, so the straight sections stay exact after resampling.
  std::vector<double> offsets;
  offsets.reserve(n + 3);
  for (std::size_t i = 0; i <= n; ++i) offsets.push_back(std::min(-back + grid * static_cast<double>(i), ahead));
  for (double u : {out.window.start, out.window.end}) {
    if (u > -back && u < ahead) offsets.push_back(u);
  }
  std::ranges::sort(offsets);
  const auto dup = std::ranges::unique(offsets, [](double a, double b) { return b - a < 1e-9; });
  offsets.erase(dup.begin(), dup.end());
  std::vector<WorldPoint> pts;
  pts.reserve(offsets.size());
  for (const double u : offsets) {
    WorldPoint p;
    if (u < out.window.start) {
      p = position_at(ego, ego_origin + u);
    } else if (u > out.window.end || out.window.length <= 0.0) {
      p = position_at(other, other_origin + u);
    } else {
      const double w = blend_weight((u - out.window.start) / out.window.length, spec.steepness);
      p = (1.0 - w) * position_at(ego, ego_origin + u) + w * position_at(other, other_origin + u);
    }
    pts.push_back(p);
  }
  std::vector<std::string> lanes = ego.lane_ids;
  lanes.insert(lanes.end(), other.lane_ids.begin(), other.lane_ids.end());
  out.path = make_path(pts, std::move(lanes));
  out.origin = project_to_path(position_at(ego, ego_origin), out.path).arclength;
  return out;
}

}  // namespace riskmaps

#endif  // RISKMAPS_MOTION_HPP
