#pragma once

#include <cmath>
#include <stdexcept>

#include "kinscan/common.hpp"
#include "kinscan/so3.hpp"

// SE(3)/SO(3) value types and the coupled exponential chart.
//
// Conventions fixed for the whole project:
//  - navigation frame is a local East-North-Up Cartesian frame;
//  - Euler angles are ZYX (yaw about Up, then pitch, then roll), degrees;
//  - tangent vectors are ordered [rotation(3), translation(3)];
//  - node/state perturbations are applied on the right: T <- T * exp(delta).

namespace kinscan {

using Tangent = Vec6;  // [phi (rad); rho (m)]

class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  explicit Rotation(const Quat& q) : q_(q.normalized()) {}
  explicit Rotation(const Mat3& m) : q_(Quat(m).normalized()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_axis_angle(const Vec3& w) {
    const double theta = w.norm();
    if (theta < so3::kSmallAngle) {
      return Rotation(Quat(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z()));
    }
    return Rotation(Quat(Eigen::AngleAxisd(theta, w / theta)));
  }

  // ZYX (yaw-pitch-roll) composition; angles in degrees.
  static Rotation from_euler_deg(double roll, double pitch, double yaw) {
    const Eigen::AngleAxisd rz(deg2rad(yaw), Vec3::UnitZ());
    const Eigen::AngleAxisd ry(deg2rad(pitch), Vec3::UnitY());
    const Eigen::AngleAxisd rx(deg2rad(roll), Vec3::UnitX());
    return Rotation(Quat(rz * ry * rx));
  }

  // (roll, pitch, yaw) in degrees. Pitch is clamped at the +-90 deg
  // gimbal-lock boundary; inputs near the boundary do not round-trip.
  Vec3 to_euler_deg() const {
    const Mat3 m = matrix();
    const double sp = std::clamp(-m(2, 0), -1.0, 1.0);
    const double pitch = std::asin(sp);
    double roll, yaw;
    if (std::abs(sp) > 1.0 - 1e-12) {
      // gimbal lock: put all z-rotation into yaw
      roll = 0.0;
      yaw = std::atan2(-m(0, 1), m(1, 1));
    } else {
      roll = std::atan2(m(2, 1), m(2, 2));
      yaw = std::atan2(m(1, 0), m(0, 0));
    }
    return Vec3(rad2deg(roll), rad2deg(pitch), rad2deg(yaw));
  }

  const Quat& quat() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  // Double cover resolved to w >= 0, for comparison and storage.
  Rotation canonical() const {
    Quat q = q_;
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return Rotation(q);
  }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Rotation operator*(const Rotation& o) const { return Rotation(q_ * o.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  Vec3 log() const { return so3::log(q_); }

  // Geodesic angle to another rotation, radians.
  double angle_to(const Rotation& o) const {
    const Quat d = q_.conjugate() * o.q_;
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
  }

 private:
  Quat q_;
};

struct RigidTransform {
  Rotation rotation;
  Vec3 translation{Vec3::Zero()};

  RigidTransform() = default;
  RigidTransform(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return {}; }

  // Composition: (*this) applied after o.
  RigidTransform operator*(const RigidTransform& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  // Action on a point: R v + t.
  Vec3 operator*(const Vec3& v) const { return rotation * v + translation; }

  RigidTransform inverse() const {
    const Rotation rinv = rotation.inverse();
    return {rinv, -(rinv * translation)};
  }
};

struct TimedPose {
  double t = 0.0;  // GPS seconds
  RigidTransform pose;
};

namespace se3 {

inline RigidTransform exp(const Tangent& x) {
  const Vec3 phi = x.head<3>();
  const Vec3 rho = x.tail<3>();
  return {Rotation::from_axis_angle(phi), so3::left_jacobian(phi) * rho};
}

inline Tangent log(const RigidTransform& t) {
  Tangent x;
  x.head<3>() = t.rotation.log();
  x.tail<3>() = so3::left_jacobian_inverse(x.head<3>()) * t.translation;
  return x;
}

// Barfoot's Q block coupling rotation and translation in the SE(3) Jacobian.
inline Mat3 jacobian_q(const Vec3& phi, const Vec3& rho) {
  const double theta2 = phi.squaredNorm();
  const Mat3 ph = hat(phi);
  const Mat3 rh = hat(rho);
  double c1, c2, c3;
  if (theta2 < 1e-10) {
    c1 = 1.0 / 6.0 - theta2 / 120.0;
    c2 = -1.0 / 24.0 + theta2 / 720.0;
    c3 = -1.0 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    const double s = std::sin(theta), c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (1.0 - theta2 / 2.0 - c) / (theta2 * theta2);
    c3 = (theta - s - theta2 * theta / 6.0) / (theta2 * theta2 * theta);
  }
  return 0.5 * rh + c1 * (ph * rh + rh * ph + ph * rh * ph) -
         c2 * (ph * ph * rh + rh * ph * ph - 3.0 * ph * rh * ph) -
         0.5 * (c2 - 3.0 * c3) * (ph * rh * ph * ph + ph * ph * rh * ph);
}

inline Mat6 left_jacobian(const Tangent& x) {
  const Vec3 phi = x.head<3>();
  const Mat3 jl = so3::left_jacobian(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.bottomLeftCorner<3, 3>() = jacobian_q(phi, x.tail<3>());
  return j;
}

inline Mat6 left_jacobian_inverse(const Tangent& x) {
  const Vec3 phi = x.head<3>();
  const Mat3 jli = so3::left_jacobian_inverse(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jli;
  j.bottomRightCorner<3, 3>() = jli;
  j.bottomLeftCorner<3, 3>() = -jli * jacobian_q(phi, x.tail<3>()) * jli;
  return j;
}

inline Mat6 right_jacobian(const Tangent& x) { return left_jacobian(-x); }
inline Mat6 right_jacobian_inverse(const Tangent& x) { return left_jacobian_inverse(-x); }

// Adj(T) such that T * exp(x) * T^-1 == exp(Adj(T) x).
inline Mat6 adjoint(const RigidTransform& t) {
  const Mat3 r = t.rotation.matrix();
  Mat6 a = Mat6::Zero();
  a.topLeftCorner<3, 3>() = r;
  a.bottomRightCorner<3, 3>() = r;
  a.bottomLeftCorner<3, 3>() = hat(t.translation) * r;
  return a;
}

}  // namespace se3

// One-parameter SE(3) geodesic between two timed poses, evaluated at t.
// Endpoints are returned exactly for alpha in {0, 1}.
inline RigidTransform geodesic_interpolate(const TimedPose& a, const TimedPose& b, double t) {
  if (!(a.t < b.t)) throw std::invalid_argument("geodesic_interpolate: a.t must be < b.t");
  if (t < a.t || t > b.t) throw std::out_of_range("geodesic_interpolate: t outside [a.t, b.t]");
  const double alpha = (t - a.t) / (b.t - a.t);
  if (alpha == 0.0) return a.pose;
  if (alpha == 1.0) return b.pose;
  const Tangent xi = se3::log(a.pose.inverse() * b.pose);
  return a.pose * se3::exp(alpha * xi);
}

}  // namespace kinscan
