#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "kinscan/corr/descriptor.hpp"

namespace kinscan::corr {

struct Match {
  int query = -1;      // row in the query descriptor set
  int target = -1;     // row in the target descriptor set
  float distance = 0;  // L2 descriptor distance
};

// Nearest neighbor in descriptor space for every query row against all
// target rows (key-point-to-all matching). Descriptors are unit vectors, so
// the nearest neighbor maximizes the dot product; the scan runs as blocked
// matrix products.
inline std::vector<Match> match_descriptors(const Eigen::MatrixXf& query,
                                            const Eigen::MatrixXf& target) {
  std::vector<Match> matches;
  if (query.rows() == 0 || target.rows() == 0) return matches;
  const Eigen::Index block = 4096;
  Eigen::VectorXf best = Eigen::VectorXf::Constant(query.rows(), -2.0f);
  std::vector<int> best_idx(query.rows(), -1);
  for (Eigen::Index start = 0; start < target.rows(); start += block) {
    const Eigen::Index count = std::min(block, target.rows() - start);
    const Eigen::MatrixXf scores = query * target.middleRows(start, count).transpose();
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      Eigen::Index c;
      const float s = scores.row(r).maxCoeff(&c);
      if (s > best[r]) {
        best[r] = s;
        best_idx[r] = static_cast<int>(start + c);
      }
    }
  }
  matches.reserve(query.rows());
  for (Eigen::Index r = 0; r < query.rows(); ++r) {
    if (best_idx[r] < 0) continue;
    const float d2 = std::max(0.0f, 2.0f - 2.0f * best[r]);
    matches.push_back({static_cast<int>(r), best_idx[r], std::sqrt(d2)});
  }
  return matches;
}

// Deterministic voxel downsampling: one point per voxel, the one nearest to
// the voxel center (ties by lowest index). voxel <= 0 keeps every point.
inline std::vector<int> voxel_downsample(const std::vector<Vec3>& pts, double voxel) {
  std::vector<int> out;
  if (voxel <= 0.0) {
    out.resize(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) out[i] = static_cast<int>(i);
    return out;
  }
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, int> keep;
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto key = std::make_tuple(static_cast<std::int64_t>(std::floor(pts[i].x() / voxel)),
                                     static_cast<std::int64_t>(std::floor(pts[i].y() / voxel)),
                                     static_cast<std::int64_t>(std::floor(pts[i].z() / voxel)));
    const auto [it, inserted] = keep.try_emplace(key, static_cast<int>(i));
    if (!inserted) {
      const Vec3 center((std::get<0>(key) + 0.5) * voxel, (std::get<1>(key) + 0.5) * voxel,
                        (std::get<2>(key) + 0.5) * voxel);
      if ((pts[i] - center).squaredNorm() < (pts[it->second] - center).squaredNorm()) {
        it->second = static_cast<int>(i);
      }
    }
  }
  out.reserve(keep.size());
  for (const auto& [key, idx] : keep) out.push_back(idx);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kinscan::corr
