#pragma once

#include "kinscan/rng.hpp"
#include "kinscan/se3.hpp"

namespace kinscan::test {

inline Rotation random_rotation(Rng& rng, double max_angle = kPi * 0.95) {
  Vec3 axis = rng.gauss3(1.0);
  while (axis.norm() < 1e-6) axis = rng.gauss3(1.0);
  axis.normalize();
  return Rotation::from_axis_angle(axis * rng.uniform(0.0, max_angle));
}

inline RigidTransform random_transform(Rng& rng, double max_angle = kPi * 0.95,
                                       double max_trans = 10.0) {
  return {random_rotation(rng, max_angle), rng.gauss3(max_trans / 3.0)};
}

}  // namespace kinscan::test
