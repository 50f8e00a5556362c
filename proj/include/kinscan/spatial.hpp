#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "kinscan/common.hpp"
#include "kinscan/pointcloud.hpp"

namespace kinscan {

// Uniform hash-free voxel index over a fixed point set. Points are grouped
// by cell into one contiguous order array; cell lookup is a binary search
// over the sorted unique keys.
class VoxelGrid {
 public:
  VoxelGrid(std::vector<Vec3> points, double cell_size)
      : points_(std::move(points)), cell_(cell_size) {
    if (cell_ <= 0.0) throw std::invalid_argument("VoxelGrid: cell size must be positive");
    const size_t n = points_.size();
    origin_ = Vec3::Zero();
    if (n > 0) {
      origin_ = points_[0];
      for (const auto& p : points_) origin_ = origin_.cwiseMin(p);
    }
    std::vector<std::pair<std::uint64_t, std::uint32_t>> tagged(n);
    for (size_t i = 0; i < n; ++i) {
      tagged[i] = {key_of(points_[i]), static_cast<std::uint32_t>(i)};
    }
    std::sort(tagged.begin(), tagged.end());
    order_.resize(n);
    for (size_t i = 0; i < n; ++i) order_[i] = tagged[i].second;
    for (size_t i = 0; i < n;) {
      size_t j = i;
      while (j < n && tagged[j].first == tagged[i].first) ++j;
      keys_.push_back(tagged[i].first);
      starts_.push_back(static_cast<std::uint32_t>(i));
      i = j;
    }
    starts_.push_back(static_cast<std::uint32_t>(n));
  }

  const std::vector<Vec3>& points() const { return points_; }
  size_t size() const { return points_.size(); }

  // Appends indices of all points with |p - center| <= radius.
  void radius_search(const Vec3& center, double radius, std::vector<int>& out) const {
    visit_ball(center, radius, [&](int idx, double) { out.push_back(idx); });
  }

  int count_within(const Vec3& center, double radius) const {
    int count = 0;
    visit_ball(center, radius, [&](int, double) { ++count; });
    return count;
  }

  // Index of the nearest point strictly other than `exclude`; -1 when the
  // grid holds no eligible point. Search grows outward in cell shells.
  int nearest(const Vec3& center, int exclude = -1) const {
    if (points_.empty()) return -1;
    double radius = cell_;
    for (int iter = 0; iter < 48; ++iter) {
      int best = -1;
      double best_d2 = std::numeric_limits<double>::infinity();
      visit_ball(center, radius, [&](int idx, double d2) {
        if (idx == exclude) return;
        if (d2 < best_d2) {
          best_d2 = d2;
          best = idx;
        }
      });
      if (best >= 0 && std::sqrt(best_d2) <= radius) return best;
      radius *= 2.0;
    }
    return -1;
  }

 private:
  template <typename Fn>
  void visit_ball(const Vec3& center, double radius, Fn&& fn) const {
    if (points_.empty()) return;
    const double r2 = radius * radius;
    const auto lo = cell_coord(center - Vec3::Constant(radius));
    const auto hi = cell_coord(center + Vec3::Constant(radius));
    for (std::int64_t cz = lo[2]; cz <= hi[2]; ++cz) {
      for (std::int64_t cy = lo[1]; cy <= hi[1]; ++cy) {
        for (std::int64_t cx = lo[0]; cx <= hi[0]; ++cx) {
          const std::uint64_t key = pack(cx, cy, cz);
          const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
          if (it == keys_.end() || *it != key) continue;
          const size_t slot = static_cast<size_t>(it - keys_.begin());
          for (std::uint32_t k = starts_[slot]; k < starts_[slot + 1]; ++k) {
            const int idx = static_cast<int>(order_[k]);
            const double d2 = (points_[idx] - center).squaredNorm();
            if (d2 <= r2) fn(idx, d2);
          }
        }
      }
    }
  }

  std::array<std::int64_t, 3> cell_coord(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor((p.x() - origin_.x()) / cell_)),
            static_cast<std::int64_t>(std::floor((p.y() - origin_.y()) / cell_)),
            static_cast<std::int64_t>(std::floor((p.z() - origin_.z()) / cell_))};
  }

  static std::uint64_t pack(std::int64_t cx, std::int64_t cy, std::int64_t cz) {
    constexpr std::int64_t bias = 1 << 20;
    constexpr std::uint64_t mask = (1ull << 21) - 1;
    return ((static_cast<std::uint64_t>(cx + bias) & mask) << 42) |
           ((static_cast<std::uint64_t>(cy + bias) & mask) << 21) |
           (static_cast<std::uint64_t>(cz + bias) & mask);
  }

  std::uint64_t key_of(const Vec3& p) const {
    const auto c = cell_coord(p);
    return pack(c[0], c[1], c[2]);
  }

  std::vector<Vec3> points_;
  double cell_;
  Vec3 origin_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> starts_;
};

// Mean nearest-neighbor distance of a cloud (the point cloud GSD). Uses a
// deterministic stride subsample to bound cost on large clouds.
inline double estimate_gsd(const std::vector<Vec3>& positions, size_t max_samples = 20000) {
  if (positions.size() < 2) return 0.0;
  VoxelGrid grid(positions, 0.5);
  const size_t stride = std::max<size_t>(1, positions.size() / max_samples);
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < positions.size(); i += stride) {
    const int j = grid.nearest(positions[i], static_cast<int>(i));
    if (j >= 0) {
      sum += (positions[j] - positions[i]).norm();
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

inline std::vector<Vec3> cloud_positions(const PointCloud& cloud) {
  std::vector<Vec3> out(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) out[i] = cloud[i].p;
  return out;
}

}  // namespace kinscan
