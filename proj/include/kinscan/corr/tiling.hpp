#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "kinscan/pointcloud.hpp"

namespace kinscan::corr {

// A grid tile of the overlap region with the point indices of both clouds
// that fall inside it.
struct TilePair {
  double x0 = 0.0, y0 = 0.0;  // lower corner, navigation frame
  double size = 50.0;
  std::vector<int> points_a;
  std::vector<int> points_b;
};

// Splits the xy-intersection of the two clouds' bounding rectangles into
// grid-aligned square tiles. Tiles with fewer than min_points on either
// side are discarded. Output is ordered by (row, column) for determinism.
inline std::vector<TilePair> extract_overlap_tiles(const PointCloud& cloud_a,
                                                   const PointCloud& cloud_b, double tile_size,
                                                   int min_points = 100) {
  if (tile_size <= 0.0) throw std::invalid_argument("tile_size must be > 0");
  if (cloud_a.empty() || cloud_b.empty()) return {};

  const auto bounds = [](const PointCloud& c) {
    double x0 = c[0].p.x(), x1 = x0, y0 = c[0].p.y(), y1 = y0;
    for (const auto& pt : c) {
      x0 = std::min(x0, pt.p.x());
      x1 = std::max(x1, pt.p.x());
      y0 = std::min(y0, pt.p.y());
      y1 = std::max(y1, pt.p.y());
    }
    return std::array<double, 4>{x0, x1, y0, y1};
  };
  const auto ba = bounds(cloud_a), bb = bounds(cloud_b);
  const double ix0 = std::max(ba[0], bb[0]), ix1 = std::min(ba[1], bb[1]);
  const double iy0 = std::max(ba[2], bb[2]), iy1 = std::min(ba[3], bb[3]);
  if (ix0 >= ix1 || iy0 >= iy1) return {};

  using Key = std::pair<std::int64_t, std::int64_t>;  // (row, col)
  std::map<Key, TilePair> tiles;
  const auto assign = [&](const PointCloud& cloud, bool side_a) {
    for (size_t i = 0; i < cloud.size(); ++i) {
      const double x = cloud[i].p.x(), y = cloud[i].p.y();
      if (x < ix0 || x > ix1 || y < iy0 || y > iy1) continue;
      const Key key{static_cast<std::int64_t>(std::floor(y / tile_size)),
                    static_cast<std::int64_t>(std::floor(x / tile_size))};
      auto& tile = tiles[key];
      tile.x0 = key.second * tile_size;
      tile.y0 = key.first * tile_size;
      tile.size = tile_size;
      (side_a ? tile.points_a : tile.points_b).push_back(static_cast<int>(i));
    }
  };
  assign(cloud_a, true);
  assign(cloud_b, false);

  std::vector<TilePair> out;
  for (auto& [key, tile] : tiles) {
    if (static_cast<int>(tile.points_a.size()) >= min_points &&
        static_cast<int>(tile.points_b.size()) >= min_points) {
      out.push_back(std::move(tile));
    }
  }
  return out;
}

}  // namespace kinscan::corr
