#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "kinscan/rng.hpp"
#include "kinscan/se3.hpp"
#include "kinscan/sim/specs.hpp"

// Synthetic world: a bilinear heightfield plus analytic primitives (boxes
// for buildings and cars, ellipsoids and cones for trees). All ray tests
// are closed-form or bracketed-bisection, no meshes involved.

namespace kinscan::sim {

struct Heightfield {
  Vec3 origin = Vec3::Zero();  // xy of grid corner; z unused
  double cell = 2.0;
  int nx = 0, ny = 0;
  std::vector<double> heights;  // row-major, ny rows of nx

  double at(double x, double y) const {
    const double gx = std::clamp((x - origin.x()) / cell, 0.0, nx - 1.001);
    const double gy = std::clamp((y - origin.y()) / cell, 0.0, ny - 1.001);
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double fx = gx - ix, fy = gy - iy;
    const double h00 = heights[iy * nx + ix];
    const double h10 = heights[iy * nx + ix + 1];
    const double h01 = heights[(iy + 1) * nx + ix];
    const double h11 = heights[(iy + 1) * nx + ix + 1];
    return h00 * (1 - fx) * (1 - fy) + h10 * fx * (1 - fy) + h01 * (1 - fx) * fy +
           h11 * fx * fy;
  }
};

struct Box {
  Vec3 center = Vec3::Zero();  // geometric center
  Vec3 half = Vec3::Ones();    // half extents in the box frame
  double yaw = 0.0;            // rad, about Up
};

struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 radii = Vec3::Ones();
};

struct Cone {
  Vec3 base = Vec3::Zero();  // center of the base disc
  double radius = 1.0;
  double height = 2.0;  // apex at base.z + height
};

using Primitive = std::variant<Box, Ellipsoid, Cone>;

namespace detail {

inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const Box& b) {
  const double c = std::cos(-b.yaw), s = std::sin(-b.yaw);
  const Vec3 ol = o - b.center;
  const Vec3 olr(c * ol.x() - s * ol.y(), s * ol.x() + c * ol.y(), ol.z());
  const Vec3 dr(c * d.x() - s * d.y(), s * d.x() + c * d.y(), d.z());
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dr[k]) < 1e-12) {
      if (std::abs(olr[k]) > b.half[k]) return std::nullopt;
      continue;
    }
    double t0 = (-b.half[k] - olr[k]) / dr[k];
    double t1 = (b.half[k] - olr[k]) / dr[k];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmin <= 1e-9) return std::nullopt;
  return tmin;
}

inline std::optional<double> ray_ellipsoid(const Vec3& o, const Vec3& d, const Ellipsoid& e) {
  const Vec3 ol = (o - e.center).cwiseQuotient(e.radii);
  const Vec3 dl = d.cwiseQuotient(e.radii);
  const double a = dl.squaredNorm();
  const double b = 2.0 * ol.dot(dl);
  const double c = ol.squaredNorm() - 1.0;
  const double disc = b * b - 4 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2 * a);
  if (t0 > 1e-9) return t0;
  const double t1 = (-b + sq) / (2 * a);
  if (t1 > 1e-9) return t1;
  return std::nullopt;
}

inline std::optional<double> ray_cone(const Vec3& o, const Vec3& d, const Cone& cone) {
  // Vertical cone, apex at base.z + height. In apex-local coordinates the
  // surface is x^2 + y^2 = k^2 z^2 for z in [-height, 0], k = radius/height.
  const Vec3 apex = cone.base + Vec3(0, 0, cone.height);
  const Vec3 ol = o - apex;
  const double k2 = (cone.radius / cone.height) * (cone.radius / cone.height);
  const double a = d.x() * d.x() + d.y() * d.y() - k2 * d.z() * d.z();
  const double b = 2.0 * (ol.x() * d.x() + ol.y() * d.y() - k2 * ol.z() * d.z());
  const double c = ol.x() * ol.x() + ol.y() * ol.y() - k2 * ol.z() * ol.z();
  double best = std::numeric_limits<double>::infinity();
  if (std::abs(a) > 1e-12) {
    const double disc = b * b - 4 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (const double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (t <= 1e-9) continue;
        const double z = ol.z() + t * d.z();
        if (z >= -cone.height && z <= 0.0) best = std::min(best, t);
      }
    }
  }
  // base disc
  if (std::abs(d.z()) > 1e-12) {
    const double t = (cone.base.z() - o.z()) / d.z();
    if (t > 1e-9) {
      const Vec3 p = o + t * d;
      if ((p - cone.base).head<2>().squaredNorm() <= cone.radius * cone.radius) {
        best = std::min(best, t);
      }
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

// Conservative 2D circle bound for quick ray rejection.
struct Bound {
  double cx, cy, r2;
};

inline Bound bound_of(const Primitive& prim) {
  return std::visit(
      [](const auto& p) -> Bound {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Box>) {
          const double r = p.half.template head<2>().norm();
          return {p.center.x(), p.center.y(), r * r};
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const double r = std::max(p.radii.x(), p.radii.y());
          return {p.center.x(), p.center.y(), r * r};
        } else {
          return {p.base.x(), p.base.y(), p.radius * p.radius};
        }
      },
      prim);
}

}  // namespace detail

class Scene {
 public:
  Scene(Heightfield ground, std::vector<Primitive> primitives)
      : ground_(std::move(ground)), primitives_(std::move(primitives)) {
    bounds_.reserve(primitives_.size());
    for (const auto& p : primitives_) bounds_.push_back(detail::bound_of(p));
  }

  const Heightfield& ground() const { return ground_; }
  const std::vector<Primitive>& primitives() const { return primitives_; }

  // Range to the nearest surface along (origin, unit dir), if any.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
    double best = max_range;
    bool hit = false;
    if (const auto t = raycast_ground(origin, dir, best)) {
      best = *t;
      hit = true;
    }
    // 2D distance from the ray's xy line to each primitive's bound circle
    const double dh = dir.head<2>().norm();
    const double inv_dh = dh > 1e-12 ? 1.0 / dh : 0.0;
    for (size_t i = 0; i < primitives_.size(); ++i) {
      const auto& b = bounds_[i];
      const double rx = b.cx - origin.x(), ry = b.cy - origin.y();
      if (dh > 1e-12) {
        const double along = (rx * dir.x() + ry * dir.y()) * inv_dh;
        const double perp2 = rx * rx + ry * ry - along * along;
        if (perp2 > b.r2 || along < -std::sqrt(b.r2) || along * inv_dh > best) continue;
      } else if (rx * rx + ry * ry > b.r2) {
        continue;
      }
      const auto t = std::visit(
          [&](const auto& prim) { return intersect(origin, dir, prim); }, primitives_[i]);
      if (t && *t < best) {
        best = *t;
        hit = true;
      }
    }
    if (!hit) return std::nullopt;
    return best;
  }

 private:
  static std::optional<double> intersect(const Vec3& o, const Vec3& d, const Box& p) {
    return detail::ray_box(o, d, p);
  }
  static std::optional<double> intersect(const Vec3& o, const Vec3& d, const Ellipsoid& p) {
    return detail::ray_ellipsoid(o, d, p);
  }
  static std::optional<double> intersect(const Vec3& o, const Vec3& d, const Cone& p) {
    return detail::ray_cone(o, d, p);
  }

  std::optional<double> raycast_ground(const Vec3& o, const Vec3& d, double max_range) const {
    const double dh = d.head<2>().norm();
    if (dh < 1e-9) {
      // vertical ray: direct solve
      if (std::abs(d.z()) < 1e-12) return std::nullopt;
      const double t = (ground_.at(o.x(), o.y()) - o.z()) / d.z();
      if (t <= 1e-9 || t > max_range) return std::nullopt;
      return t;
    }
    const double step = 0.5 * ground_.cell / dh;
    double prev_t = 0.0;
    double prev_f = o.z() - ground_.at(o.x(), o.y());
    if (prev_f <= 0.0) return std::nullopt;  // origin below ground
    for (double t = step; t <= max_range + step; t += step) {
      const double tc = std::min(t, max_range);
      const Vec3 p = o + tc * d;
      const double f = p.z() - ground_.at(p.x(), p.y());
      if (f <= 0.0) {
        // bisection refine on [prev_t, tc]
        double lo = prev_t, hi = tc;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          const Vec3 pm = o + mid * d;
          if (pm.z() - ground_.at(pm.x(), pm.y()) > 0.0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        return 0.5 * (lo + hi);
      }
      prev_t = tc;
      prev_f = f;
      if (tc >= max_range) break;
    }
    return std::nullopt;
  }

  Heightfield ground_;
  std::vector<Primitive> primitives_;
  std::vector<detail::Bound> bounds_;
};

// Procedurally populated terrain with buildings, trees and cars inside the
// rectangle [x0,x1] x [y0,y1] (flight area plus margin).
inline Scene make_scene(const SceneSpec& spec, double x0, double x1, double y0, double y1,
                        std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, 0x5ce7eull));

  Heightfield ground;
  ground.cell = spec.terrain_cell;
  ground.origin = Vec3(x0 - spec.margin, y0 - spec.margin, 0.0);
  ground.nx = static_cast<int>((x1 - x0 + 2 * spec.margin) / ground.cell) + 2;
  ground.ny = static_cast<int>((y1 - y0 + 2 * spec.margin) / ground.cell) + 2;
  ground.heights.resize(static_cast<size_t>(ground.nx) * ground.ny);

  // smooth undulation: a few seeded sinusoidal plane waves
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 4; ++w) {
    const double angle = rng.uniform(0.0, 2 * kPi);
    const double wavelength = spec.terrain_wavelength * rng.uniform(0.6, 1.6);
    waves.push_back({std::cos(angle) * 2 * kPi / wavelength,
                     std::sin(angle) * 2 * kPi / wavelength, rng.uniform(0.0, 2 * kPi),
                     spec.terrain_amplitude * rng.uniform(0.2, 0.5)});
  }
  for (int iy = 0; iy < ground.ny; ++iy) {
    for (int ix = 0; ix < ground.nx; ++ix) {
      const double x = ground.origin.x() + ix * ground.cell;
      const double y = ground.origin.y() + iy * ground.cell;
      double h = 0.0;
      for (const auto& w : waves) h += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      ground.heights[iy * ground.nx + ix] = h;
    }
  }

  std::vector<Primitive> prims;
  const auto place = [&](double inset) {
    return Vec3(rng.uniform(x0 + inset, x1 - inset), rng.uniform(y0 + inset, y1 - inset), 0.0);
  };
  for (int i = 0; i < spec.building_count; ++i) {
    Box b;
    b.half = Vec3(rng.uniform(3.0, 10.0), rng.uniform(3.0, 10.0), rng.uniform(1.5, 6.0));
    Vec3 at = place(12.0);
    b.center = Vec3(at.x(), at.y(), ground.at(at.x(), at.y()) + b.half.z());
    b.yaw = rng.uniform(0.0, kPi);
    prims.emplace_back(b);
  }
  for (int i = 0; i < spec.tree_count; ++i) {
    const Vec3 at = place(4.0);
    const double gz = ground.at(at.x(), at.y());
    if (rng.uniform() < 0.7) {
      Ellipsoid e;
      const double r = rng.uniform(1.2, 3.5);
      e.radii = Vec3(r, r * rng.uniform(0.8, 1.2), r * rng.uniform(0.9, 1.8));
      e.center = Vec3(at.x(), at.y(), gz + rng.uniform(2.0, 7.0) + e.radii.z());
      prims.emplace_back(e);
    } else {
      Cone c;
      c.radius = rng.uniform(1.0, 3.0);
      c.height = rng.uniform(4.0, 12.0);
      c.base = Vec3(at.x(), at.y(), gz + rng.uniform(0.0, 1.0));
      prims.emplace_back(c);
    }
  }
  for (int i = 0; i < spec.car_count; ++i) {
    Box b;
    b.half = Vec3(2.2, 0.9, 0.75);
    const Vec3 at = place(6.0);
    b.center = Vec3(at.x(), at.y(), ground.at(at.x(), at.y()) + b.half.z());
    b.yaw = rng.uniform(0.0, kPi);
    prims.emplace_back(b);
  }
  return Scene(std::move(ground), std::move(prims));
}

}  // namespace kinscan::sim
