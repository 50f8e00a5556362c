#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kinscan/rng.hpp"
#include "kinscan/sim/specs.hpp"
#include "kinscan/trajectory.hpp"

namespace kinscan::sim {

// Natural cubic spline (zero end curvature), with analytic derivatives.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> t, std::vector<double> y)
      : t_(std::move(t)), y_(std::move(y)) {
    const size_t n = t_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 2 knots");
    m_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
      for (size_t i = 1; i + 1 < n; ++i) {
        const double h0 = t_[i] - t_[i - 1];
        const double h1 = t_[i + 1] - t_[i];
        a[i] = h0 / 6.0;
        b[i] = (h0 + h1) / 3.0;
        c[i] = h1 / 6.0;
        d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      }
      // Thomas algorithm on rows 1..n-2
      for (size_t i = 2; i + 1 < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
      }
      for (size_t i = n - 2; i >= 1; --i) {
        m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
        if (i == 1) break;
      }
    }
  }

  double value(double t) const {
    const auto [i, h, u] = locate(t);
    const double A = (t_[i + 1] - t) / h, B = u / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double t) const {
    const auto [i, h, u] = locate(t);
    const double A = (t_[i + 1] - t) / h, B = u / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3 * B * B - 1) * m_[i + 1] - (3 * A * A - 1) * m_[i]) * h / 6.0;
  }

  double deriv2(double t) const {
    const auto [i, h, u] = locate(t);
    const double A = (t_[i + 1] - t) / h, B = u / h;
    return A * m_[i] + B * m_[i + 1];
  }

 private:
  std::tuple<size_t, double, double> locate(double t) const {
    size_t lo = 0, hi = t_.size() - 1;
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      (t_[mid] <= t ? lo : hi) = mid;
    }
    return {lo, t_[lo + 1] - t_[lo], t - t_[lo]};
  }

  std::vector<double> t_, y_;
  std::vector<double> m_;  // second derivatives at knots
};

struct FlightTruth {
  Trajectory traj;
  std::vector<Vec3> velocities;  // navigation frame, one per pose
  std::vector<std::pair<double, double>> line_windows;  // time span per flight line
};

namespace detail {

struct WaypointPath {
  std::vector<Vec3> waypoints;
  std::vector<std::pair<size_t, size_t>> line_wp;  // (start, end) indices per line
};

// Parallel lines along +-x joined by semicircular turn arcs.
inline WaypointPath lawnmower(const FlightPlan& plan) {
  WaypointPath path;
  const double r = plan.line_spacing / 2.0;
  for (int line = 0; line < plan.line_count; ++line) {
    const double y = line * plan.line_spacing;
    const bool fwd = (line % 2 == 0);
    const double xs = fwd ? 0.0 : plan.line_length;
    const double xe = fwd ? plan.line_length : 0.0;
    const size_t start = path.waypoints.size();
    path.waypoints.emplace_back(xs, y, plan.altitude);
    // midpoint keeps the spline from bowing on long lines
    path.waypoints.emplace_back((xs + xe) / 2.0, y, plan.altitude);
    path.waypoints.emplace_back(xe, y, plan.altitude);
    path.line_wp.emplace_back(start, path.waypoints.size() - 1);
    if (line + 1 < plan.line_count) {
      const Vec3 center(xe, y + r, plan.altitude);
      const double sgn = fwd ? 1.0 : -1.0;
      for (int k = 1; k <= 3; ++k) {
        const double angle = -kPi / 2.0 + k * kPi / 4.0;
        path.waypoints.emplace_back(center.x() + sgn * r * std::cos(angle),
                                    center.y() + r * std::sin(angle), plan.altitude);
      }
    }
  }
  return path;
}

}  // namespace detail

// Ground-truth kinematics: C2 spline through the waypoints timed at constant
// nominal speed, heading along track, sinusoidal attitude dither on top.
inline FlightTruth generate_trajectory(const FlightPlan& plan, double rate, std::uint64_t seed,
                                       double start_time = 100.0) {
  plan.validate();
  if (rate <= 0.0) throw std::invalid_argument("trajectory rate must be > 0");

  detail::WaypointPath path;
  if (plan.waypoints.empty()) {
    path = detail::lawnmower(plan);
  } else {
    path.waypoints = plan.waypoints;
    path.line_wp.emplace_back(0, path.waypoints.size() - 1);
  }

  const size_t n = path.waypoints.size();
  std::vector<double> times(n, start_time);
  for (size_t i = 1; i < n; ++i) {
    const double chord = (path.waypoints[i] - path.waypoints[i - 1]).norm();
    if (chord < 1e-9) throw std::invalid_argument("degenerate flight plan: coincident waypoints");
    times[i] = times[i - 1] + chord / plan.speed;
  }

  std::vector<double> xs(n), ys(n), zs(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = path.waypoints[i].x();
    ys[i] = path.waypoints[i].y();
    zs[i] = path.waypoints[i].z();
  }
  const CubicSpline sx(times, xs), sy(times, ys), sz(times, zs);

  Rng rng(derive_seed(seed, 0xf11e5));
  const Vec3 phase(rng.uniform(0.0, 2 * kPi), rng.uniform(0.0, 2 * kPi),
                   rng.uniform(0.0, 2 * kPi));

  const double dt = 1.0 / rate;
  const size_t count = static_cast<size_t>(std::floor((times.back() - start_time) / dt)) + 1;
  std::vector<TimedPose> poses;
  std::vector<Vec3> velocities;
  poses.reserve(count);
  velocities.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    const double t = start_time + k * dt;
    const Vec3 p(sx.value(t), sy.value(t), sz.value(t));
    const Vec3 v(sx.deriv(t), sy.deriv(t), sz.deriv(t));
    const double vh = v.head<2>().norm();
    if (vh < 1e-9) throw std::invalid_argument("flight plan produces zero ground speed");
    const double yaw_track = rad2deg(std::atan2(v.y(), v.x()));
    const double pitch_track = rad2deg(std::atan2(v.z(), vh));
    const double tau = t - start_time;
    const Vec3 dither(
        plan.dither_amp_deg.x() * std::sin(2 * kPi * tau / plan.dither_period_s.x() + phase.x()),
        plan.dither_amp_deg.y() * std::sin(2 * kPi * tau / plan.dither_period_s.y() + phase.y()),
        plan.dither_amp_deg.z() * std::sin(2 * kPi * tau / plan.dither_period_s.z() + phase.z()));
    const Rotation att = Rotation::from_euler_deg(dither.x(), pitch_track + dither.y(),
                                                  yaw_track + dither.z());
    poses.push_back({t, {att, p}});
    velocities.push_back(v);
  }

  FlightTruth truth{Trajectory(std::move(poses)), std::move(velocities), {}};
  for (const auto& [s, e] : path.line_wp) {
    truth.line_windows.emplace_back(times[s], times[e]);
  }
  return truth;
}

}  // namespace kinscan::sim
