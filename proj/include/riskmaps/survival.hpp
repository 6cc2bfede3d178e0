#ifndef RISKMAPS_SURVIVAL_HPP
#define RISKMAPS_SURVIVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "riskmaps/error.hpp"
#include "riskmaps/geo.hpp"
#include "riskmaps/motion.hpp"

// Survival-analysis costs of a predicted ego trajectory: collision and curve
// event rates, the survival function with the escape rate, and the integrated
// risk, utility and comfort terms.

namespace riskmaps {

/// Position uncertainty growing with prediction time:
/// sigma(s) = sqrt(sigma_m^2 + (sigma_b s)^2).
struct UncertaintyParams {
  double sigma_m = 0.5;  ///< m, measurement
  double sigma_b = 0.3;  ///< m/s, behavior

  [[nodiscard]] double sigma(double s) const { return std::hypot(sigma_m, sigma_b * s); }
};

struct RiskParams {
  double collision_rate_max = 1.0;  ///< 1/s
  double curve_rate_max = 1.0;      ///< 1/s
  double escape_time = 2.0;         ///< tau0, s
  double a_crit = 4.0;              ///< m/s^2
  double sigma_a = 0.5;             ///< m/s^2
  double car_half_length = 2.0;     ///< m
  double severity_scale = 4.0;     ///< s^2/m^2, collision damage per 0.5 v_rel^2
  double curve_severity = 1.0;

  void validate() const {
    if (!(collision_rate_max > 0 && curve_rate_max > 0 && escape_time > 0 && a_crit > 0 && sigma_a > 0 &&
          car_half_length >= 0 && severity_scale > 0 && curve_severity >= 0)) {
      throw Error("RiskParams: parameters must be positive");
    }
  }
};

struct BenefitParams {
  double b_t = 0.02;            ///< weight on speed
  double b_d = -0.02;           ///< weight on |v - v_d|, <= 0
  double b_c = 0.05;            ///< weight on |a|
  double b_j = 0.01;            ///< weight on |jerk|
  double v_desired = 10.0;      ///< m/s
  double route_offset = 0.1;    ///< utility added on a route-required path

  void validate() const {
    if (!(b_t >= 0 && b_d <= 0 && b_c >= 0 && b_j >= 0)) throw Error("BenefitParams: weight sign violated");
  }
};

/// Collision event rate for an isotropic Gaussian overlap at free gap `gap`
/// with combined standard deviation `sigma_total`.
inline double collision_rate(double gap, double sigma_total, double rate_max) {
  gap = std::max(gap, 0.0);
  if (sigma_total <= 0.0) return gap > 0.0 ? 0.0 : rate_max;
  return rate_max * std::exp(-gap * gap / (2.0 * sigma_total * sigma_total));
}

namespace detail {

inline double point_segment_distance(WorldPoint p, WorldPoint a, WorldPoint b) {
  const auto ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

}  // namespace detail

/// Free gap between two vehicles modeled as line segments of half length
/// `half_a` / `half_b` along their headings. For vehicles in line this is the
/// center distance minus both half lengths.
inline double vehicle_gap(WorldPoint pa, double heading_a, double half_a, WorldPoint pb, double heading_b,
                          double half_b) {
  const WorldPoint da{half_a * std::cos(heading_a), half_a * std::sin(heading_a)};
  const WorldPoint db{half_b * std::cos(heading_b), half_b * std::sin(heading_b)};
  const auto a0 = pa - da, a1 = pa + da, b0 = pb - db, b1 = pb + db;
  auto orient = [](WorldPoint p, WorldPoint q, WorldPoint r) { return cross(q - p, r - p); };
  const double o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
  const double o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
    return 0.0;
  }
  return std::min({detail::point_segment_distance(a0, b0, b1), detail::point_segment_distance(a1, b0, b1),
                   detail::point_segment_distance(b0, a0, a1), detail::point_segment_distance(b1, a0, a1)});
}

/// Skid event rate: probability that the lateral acceleration v^2 |kappa|
/// exceeds a_crit under Gaussian noise, scaled to the maximal rate.
inline double curve_rate(double v, double kappa, const RiskParams& p) {
  const double a_lat = v * v * std::abs(kappa);
  const double z = (a_lat - p.a_crit) / p.sigma_a;
  return p.curve_rate_max * 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// S(s) = exp(-integral of (1/tau0 + event rates)), trapezoidal accumulation.
inline std::vector<double> survival_trace(std::span<const double> event_rates, double tau0, double ds) {
  if (!(tau0 > 0.0) || !(ds > 0.0)) throw Error("survival_trace: tau0 and ds must be positive");
  const double escape = 1.0 / tau0;
  std::vector<double> s(event_rates.size());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < event_rates.size(); ++i) {
    if (!(event_rates[i] >= 0.0)) throw Error("survival_trace: negative event rate");
    if (i > 0) cumulative += 0.5 * ds * (event_rates[i - 1] + event_rates[i]) + escape * ds;
    s[i] = std::exp(-cumulative);
  }
  return s;
}

/// Trapezoidal integral of f(s) S(s) on the uniform grid.
inline double survival_integral(std::span<const double> f, std::span<const double> survival, double ds) {
  if (f.size() != survival.size()) throw Error("survival_integral: mismatched grids");
  double total = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    total += 0.5 * ds * (f[i - 1] * survival[i - 1] + f[i] * survival[i]);
  }
  return total;
}

/// A predicted other vehicle as seen by the cost functions.
struct PredictedEntity {
  TrajectorySample trajectory;
  UncertaintyParams uncertainty;
  double half_length = 2.0;
};

struct RiskResult {
  double risk = 0.0;
  std::vector<double> rate_trace;  ///< total critical event rate per step, 1/s
  std::vector<double> survival;
};

/// Risk integral of collision and curve events weighted by severity and the
/// survival function.
inline RiskResult integrated_risk(const TrajectorySample& ego, const std::vector<PredictedEntity>& others,
                                  const UncertaintyParams& ego_unc, const RiskParams& params, double ds) {
  params.validate();
  const std::size_t n = ego.points.size();
  for (const auto& o : others) {
    if (o.trajectory.points.size() != n) throw Error("integrated_risk: mismatched time grids");
  }
  std::vector<double> rates(n, 0.0);
  std::vector<double> weighted(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ego.points[i];
    const double sigma_e = ego_unc.sigma(e.time);
    double total = 0.0;
    double damage = 0.0;
    for (const auto& o : others) {
      const auto& q = o.trajectory.points[i];
      if (std::abs(q.time - e.time) > 1e-9) throw Error("integrated_risk: mismatched time grids");
      const double gap =
          vehicle_gap(e.position, e.heading, params.car_half_length, q.position, q.heading, o.half_length);
      const double sigma_tot = std::hypot(sigma_e, o.uncertainty.sigma(q.time));
      const double rate = collision_rate(gap, sigma_tot, params.collision_rate_max);
      const WorldPoint ve{e.v * std::cos(e.heading), e.v * std::sin(e.heading)};
      const WorldPoint vq{q.v * std::cos(q.heading), q.v * std::sin(q.heading)};
      const double v_rel = norm(ve - vq);
      total += rate;
      damage += rate * 0.5 * v_rel * v_rel * params.severity_scale;
    }
    const double curve = curve_rate(e.v, e.curvature, params);
    rates[i] = total + curve;
    weighted[i] = damage + curve * params.curve_severity;
  }
  RiskResult out;
  out.survival = survival_trace(rates, params.escape_time, ds);
  out.risk = survival_integral(weighted, out.survival, ds);
  out.rate_trace = std::move(rates);
  return out;
}

/// Integral of (b_t |v| + b_d |v - v_d|) S, plus the route offset when the
/// sample's path serves the route.
inline double utility(const TrajectorySample& ego, const BenefitParams& p, std::span<const double> survival,
                      double ds, bool route_path = false) {
  std::vector<double> f(ego.points.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = ego.points[i].v;
    f[i] = p.b_t * std::abs(v) + p.b_d * std::abs(v - p.v_desired);
  }
  return survival_integral(f, survival, ds) + (route_path ? p.route_offset : 0.0);
}

/// Integral of -(b_c |a| + b_j |j|) S; never positive.
inline double comfort(const TrajectorySample& ego, const BenefitParams& p, std::span<const double> survival,
                      double ds) {
  std::vector<double> f(ego.points.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = -(p.b_c * std::abs(ego.points[i].a) + p.b_j * std::abs(ego.points[i].jerk));
  }
  return survival_integral(f, survival, ds);
}

inline double total_cost(double risk, double utility_value, double comfort_value) {
  return risk - utility_value - comfort_value;
}

struct CostBreakdown {
  double risk = 0.0;
  double utility = 0.0;
  double comfort = 0.0;
  double cost = 0.0;
  std::vector<double> rate_trace;
  std::vector<double> survival;
};

inline CostBreakdown evaluate_sample(const TrajectorySample& ego, const std::vector<PredictedEntity>& others,
                                     const UncertaintyParams& ego_unc, const RiskParams& risk,
                                     const BenefitParams& benefit, double ds, bool route_path) {
  auto r = integrated_risk(ego, others, ego_unc, risk, ds);
  CostBreakdown c;
  c.risk = r.risk;
  c.utility = utility(ego, benefit, r.survival, ds, route_path);
  c.comfort = comfort(ego, benefit, r.survival, ds);
  c.cost = total_cost(c.risk, c.utility, c.comfort);
  c.rate_trace = std::move(r.rate_trace);
  c.survival = std::move(r.survival);
  return c;
}

}  // namespace riskmaps

#endif  // RISKMAPS_SURVIVAL_HPP
