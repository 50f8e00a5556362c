#pragma once

#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kinscan/pointcloud.hpp"
#include "kinscan/se3.hpp"
#include "kinscan/trajectory.hpp"

namespace kinscan {

// Direct georeferencing: p = Gamma(t) (R^b_L v^L + leverarm), with Gamma(t)
// interpolated on the SE(3) geodesic between bracketing trajectory samples.
// Every output point keeps its source return id, so the point cloud can be
// traced back to the raw measurements at any later stage.
inline PointCloud georeference(const ReturnList& returns, const Trajectory& trajectory,
                               const Rotation& boresight, const Vec3& leverarm,
                               int threads = 0) {
  if (trajectory.empty()) throw std::invalid_argument("georeference: empty trajectory");
  for (const auto& r : returns) {
    if (!trajectory.covers(r.t)) {
      throw std::out_of_range("georeference: return at t=" + std::to_string(r.t) +
                              " outside trajectory span");
    }
  }
  const Mat3 rbl = boresight.matrix();
  PointCloud cloud(returns.size());
  const auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto& r = returns[i];
      const RigidTransform pose = trajectory.pose_at(r.t);
      cloud[i] = {pose * (rbl * r.v + leverarm), r.t, i, r.line_id};
    }
  };
  const int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers <= 1 || returns.size() < 10000) {
    work(0, returns.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (returns.size() + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(returns.size(), begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return cloud;
}

}  // namespace kinscan
