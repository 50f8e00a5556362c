#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "kinscan/se3.hpp"

namespace kinscan {

// Time-sorted pose sequence with geodesic interpolation between samples.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<TimedPose> poses) : poses_(std::move(poses)) {
    for (size_t i = 1; i < poses_.size(); ++i) {
      if (!(poses_[i - 1].t < poses_[i].t)) {
        throw std::invalid_argument("Trajectory: timestamps must be strictly increasing");
      }
    }
  }

  const std::vector<TimedPose>& poses() const { return poses_; }
  bool empty() const { return poses_.empty(); }
  size_t size() const { return poses_.size(); }
  double start_time() const { return poses_.front().t; }
  double end_time() const { return poses_.back().t; }

  bool covers(double t) const {
    return !poses_.empty() && t >= start_time() && t <= end_time();
  }

  // Indices of the samples bracketing t (equal when t hits a sample).
  std::pair<size_t, size_t> bracket(double t) const {
    if (!covers(t)) throw std::out_of_range("Trajectory: time outside span");
    const auto it = std::lower_bound(
        poses_.begin(), poses_.end(), t,
        [](const TimedPose& p, double ti) { return p.t < ti; });
    const size_t hi = static_cast<size_t>(it - poses_.begin());
    if (poses_[hi].t == t) return {hi, hi};
    return {hi - 1, hi};
  }

  RigidTransform pose_at(double t) const {
    const auto [lo, hi] = bracket(t);
    if (lo == hi) return poses_[lo].pose;
    return geodesic_interpolate(poses_[lo], poses_[hi], t);
  }

 private:
  std::vector<TimedPose> poses_;
};

}  // namespace kinscan
