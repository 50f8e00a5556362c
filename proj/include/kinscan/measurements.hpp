#pragma once

#include <cstdint>
#include <vector>

#include "kinscan/common.hpp"

namespace kinscan {

// Raw inertial sample: angular rate and specific force in the body frame.
struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

// GNSS position fix in the navigation frame with per-axis 1-sigma.
struct GnssFix {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
};

// A matched pair of raw LiDAR pulses believed to hit the same physical
// point, with the weight sigma used when it becomes a graph constraint.
struct Correspondence {
  double t_a = 0.0;
  Vec3 v_a = Vec3::Zero();
  std::uint32_t line_a = 0;
  double t_b = 0.0;
  Vec3 v_b = Vec3::Zero();
  std::uint32_t line_b = 0;
  double sigma = 0.0;      // m
  double desc_dist = 0.0;  // descriptor-space distance of the match
};

using ImuStream = std::vector<ImuSample>;
using GnssStream = std::vector<GnssFix>;
using CorrespondenceSet = std::vector<Correspondence>;

}  // namespace kinscan
