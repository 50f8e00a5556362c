#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kinscan/common.hpp"

namespace kinscan {

// One raw LiDAR pulse: ray vector in the scanner frame L at time t.
struct LiDARReturn {
  double t = 0.0;
  Vec3 v = Vec3::Zero();
  std::uint32_t line_id = 0;
};

inline constexpr std::uint32_t kNoLine = std::numeric_limits<std::uint32_t>::max();

// A georeferenced point that keeps a handle to its generating pulse, so it
// can always be traced back to the raw measurement.
struct CloudPoint {
  Vec3 p = Vec3::Zero();  // navigation frame
  double t = 0.0;
  std::uint64_t return_id = 0;
  std::uint32_t line_id = 0;
};

using PointCloud = std::vector<CloudPoint>;
using ReturnList = std::vector<LiDARReturn>;

// Looks up the raw pulse behind a cloud point.
inline const LiDARReturn& trace_to_return(const CloudPoint& point, const ReturnList& returns) {
  if (point.return_id >= returns.size()) {
    throw std::out_of_range("trace_to_return: provenance missing for return id " +
                            std::to_string(point.return_id));
  }
  return returns[point.return_id];
}

}  // namespace kinscan
