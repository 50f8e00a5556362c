#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "kinscan/corr/iss.hpp"
#include "kinscan/corr/matching.hpp"
#include "kinscan/corr/ransac.hpp"
#include "kinscan/corr/tiling.hpp"
#include "kinscan/log.hpp"
#include "kinscan/measurements.hpp"
#include "kinscan/pointcloud.hpp"
#include "kinscan/spatial.hpp"

// End-to-end correspondence extraction between two overlapping clouds:
// tiling -> ISS detection -> description -> key-point-to-all matching ->
// per-tile sample-consensus filtering. Tiles are processed independently
// (the misalignment is rigid only at tile scale) and merged in tile order,
// so the result does not depend on the number of worker threads.

namespace kinscan::corr {

struct PipelineParams {
  double tile_size = 50.0;
  int min_tile_points = 100;
  IssParams iss;
  DescriptorParams descriptor;
  double match_voxel = 0.2;  // target-side downsampling; <= 0 describes all
  RansacParams ransac;
  double sigma = 0.0;  // correspondence weight; 0 = use the mean cloud GSD
  int threads = 0;
};

struct TileStats {
  double x0 = 0, y0 = 0;
  int points_a = 0, points_b = 0;
  int keypoints = 0;
  int raw_matches = 0;
  int inliers = 0;
  double inlier_ratio = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

struct PipelineResult {
  CorrespondenceSet correspondences;  // RANSAC inliers, all tiles
  CorrespondenceSet raw_matches;      // before filtering (for diagnostics)
  std::vector<TileStats> tiles;
  double gsd = 0.0;
  double sigma = 0.0;
};

inline PipelineResult run_pipeline(const PointCloud& cloud_a, const PointCloud& cloud_b,
                                   const ReturnList& returns, const PipelineParams& params,
                                   std::uint64_t seed) {
  PipelineResult result;
  const auto tiles = extract_overlap_tiles(cloud_a, cloud_b, params.tile_size,
                                           params.min_tile_points);
  if (tiles.empty()) {
    log_warn("correspondence pipeline: no overlapping tiles");
    return result;
  }

  double sigma = params.sigma;
  double gsd = 0.0;
  {
    const double gsd_a = estimate_gsd(cloud_positions(cloud_a));
    const double gsd_b = estimate_gsd(cloud_positions(cloud_b));
    gsd = 0.5 * (gsd_a + gsd_b);
  }
  if (sigma <= 0.0) sigma = gsd;
  result.gsd = gsd;
  result.sigma = sigma;

  struct TileOutput {
    CorrespondenceSet inliers;
    CorrespondenceSet raw;
    TileStats stats;
  };
  std::vector<TileOutput> outputs(tiles.size());

  const auto process_tile = [&](size_t ti) {
    const TilePair& tile = tiles[ti];
    TileOutput& out = outputs[ti];
    out.stats.x0 = tile.x0;
    out.stats.y0 = tile.y0;
    out.stats.points_a = static_cast<int>(tile.points_a.size());
    out.stats.points_b = static_cast<int>(tile.points_b.size());

    std::vector<Vec3> pos_a(tile.points_a.size()), pos_b(tile.points_b.size());
    for (size_t i = 0; i < tile.points_a.size(); ++i) pos_a[i] = cloud_a[tile.points_a[i]].p;
    for (size_t i = 0; i < tile.points_b.size(); ++i) pos_b[i] = cloud_b[tile.points_b[i]].p;

    const VoxelGrid grid_a(pos_a, params.descriptor.radius);
    const auto keypoints = detect_keypoints_iss(grid_a, params.iss);
    out.stats.keypoints = static_cast<int>(keypoints.size());
    if (keypoints.empty()) {
      out.stats.skipped = true;
      out.stats.skip_reason = "no key points";
      return;
    }

    Eigen::MatrixXf desc_a(keypoints.size(), params.descriptor.dims());
    std::vector<int> desc_a_rows;  // keypoint index per row
    {
      Eigen::Index row = 0;
      for (size_t k = 0; k < keypoints.size(); ++k) {
        const auto d = describe(grid_a, pos_a[keypoints[k].index], params.descriptor);
        if (!d) continue;
        desc_a.row(row) = d->transpose();
        desc_a_rows.push_back(static_cast<int>(k));
        ++row;
      }
      desc_a.conservativeResize(row, Eigen::NoChange);
    }

    const VoxelGrid grid_b(pos_b, params.descriptor.radius);
    const auto candidates = voxel_downsample(pos_b, params.match_voxel);
    Eigen::MatrixXf desc_b(candidates.size(), params.descriptor.dims());
    std::vector<int> desc_b_rows;
    {
      Eigen::Index row = 0;
      for (const int c : candidates) {
        const auto d = describe(grid_b, pos_b[c], params.descriptor);
        if (!d) continue;
        desc_b.row(row) = d->transpose();
        desc_b_rows.push_back(c);
        ++row;
      }
      desc_b.conservativeResize(row, Eigen::NoChange);
    }
    if (desc_a.rows() == 0 || desc_b.rows() == 0) {
      out.stats.skipped = true;
      out.stats.skip_reason = "no descriptors";
      return;
    }

    const auto matches = match_descriptors(desc_a, desc_b);
    out.stats.raw_matches = static_cast<int>(matches.size());

    const auto to_correspondence = [&](const Match& m) {
      const CloudPoint& a = cloud_a[tile.points_a[keypoints[desc_a_rows[m.query]].index]];
      const CloudPoint& b = cloud_b[tile.points_b[desc_b_rows[m.target]]];
      const LiDARReturn& ra = trace_to_return(a, returns);
      const LiDARReturn& rb = trace_to_return(b, returns);
      Correspondence c;
      c.t_a = ra.t;
      c.v_a = ra.v;
      c.line_a = ra.line_id;
      c.t_b = rb.t;
      c.v_b = rb.v;
      c.line_b = rb.line_id;
      c.sigma = sigma;
      c.desc_dist = m.distance;
      return c;
    };
    for (const auto& m : matches) out.raw.push_back(to_correspondence(m));

    if (static_cast<int>(matches.size()) < params.ransac.subset) {
      out.stats.skipped = true;
      out.stats.skip_reason = "fewer matches than the sample size";
      return;
    }
    std::vector<Vec3> pa(matches.size()), pb(matches.size());
    for (size_t i = 0; i < matches.size(); ++i) {
      pa[i] = pos_a[keypoints[desc_a_rows[matches[i].query]].index];
      pb[i] = pos_b[desc_b_rows[matches[i].target]];
    }
    RansacResult rr;
    try {
      rr = ransac_filter(pa, pb, params.ransac, derive_seed(seed, 0x71e0 + ti));
    } catch (const std::invalid_argument& e) {
      out.stats.skipped = true;
      out.stats.skip_reason = e.what();
      return;
    }
    out.stats.inliers = rr.inlier_count;
    out.stats.inlier_ratio = rr.inlier_ratio;
    for (size_t i = 0; i < matches.size(); ++i) {
      if (!rr.inliers[i]) continue;
      const Correspondence c = to_correspondence(matches[i]);
      if (c.t_a == c.t_b) continue;  // self-match carries no constraint
      out.inliers.push_back(c);
    }
  };

  const int n_workers =
      params.threads > 0 ? params.threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers <= 1 || tiles.size() < 2) {
    for (size_t t = 0; t < tiles.size(); ++t) process_tile(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min<int>(n_workers, static_cast<int>(tiles.size())); ++w) {
      pool.emplace_back([&] {
        for (size_t t = next.fetch_add(1); t < tiles.size(); t = next.fetch_add(1)) {
          process_tile(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (auto& out : outputs) {
    if (out.stats.skipped) {
      log_warn("tile (", out.stats.x0, ",", out.stats.y0, ") skipped: ", out.stats.skip_reason);
    }
    result.tiles.push_back(out.stats);
    result.raw_matches.insert(result.raw_matches.end(), out.raw.begin(), out.raw.end());
    result.correspondences.insert(result.correspondences.end(), out.inliers.begin(),
                                  out.inliers.end());
  }
  log_info("correspondence pipeline: ", tiles.size(), " tiles, ", result.raw_matches.size(),
           " raw matches, ", result.correspondences.size(), " kept");
  return result;
}

}  // namespace kinscan::corr
