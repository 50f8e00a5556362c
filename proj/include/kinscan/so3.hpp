#pragma once

#include <cmath>
#include <stdexcept>

#include "kinscan/common.hpp"

// Rotation-vector algebra on SO(3). Angles in radians throughout.

namespace kinscan::so3 {

inline constexpr double kSmallAngle = 1e-8;

inline Mat3 exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 w_hat = hat(w);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + w_hat + 0.5 * w_hat * w_hat;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + (std::sin(theta) / theta) * w_hat +
         ((1.0 - std::cos(theta)) / theta2) * w_hat * w_hat;
}

// Log via the quaternion chart; accurate up to (but excluding) angle pi.
inline Vec3 log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const Vec3 v(q.x(), q.y(), q.z());
  const double vn = v.norm();
  if (q.w() <= 1e-12 && vn > 0.5) {
    throw std::domain_error("so3::log: rotation angle at pi, axis ambiguous");
  }
  if (vn < kSmallAngle) {
    // theta ~ 2*vn/w for small angles
    return v * (2.0 / q.w()) * (1.0 - vn * vn / (3.0 * q.w() * q.w()));
  }
  const double theta = 2.0 * std::atan2(vn, q.w());
  return v * (theta / vn);
}

inline Vec3 log(const Mat3& r) { return log(Quat(r)); }

// Left Jacobian of SO(3): exp(w + dw) ~ exp(J_l(w) dw) * exp(w).
inline Mat3 left_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 w_hat = hat(w);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + 0.5 * w_hat + (1.0 / 6.0) * w_hat * w_hat;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + ((1.0 - std::cos(theta)) / theta2) * w_hat +
         ((theta - std::sin(theta)) / (theta2 * theta)) * w_hat * w_hat;
}

inline Mat3 left_jacobian_inverse(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 w_hat = hat(w);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() - 0.5 * w_hat + (1.0 / 12.0) * w_hat * w_hat;
  }
  const double theta = std::sqrt(theta2);
  const double coeff = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() - 0.5 * w_hat + coeff * w_hat * w_hat;
}

inline Mat3 right_jacobian(const Vec3& w) { return left_jacobian(-w); }
inline Mat3 right_jacobian_inverse(const Vec3& w) { return left_jacobian_inverse(-w); }

}  // namespace kinscan::so3
