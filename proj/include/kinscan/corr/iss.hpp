#pragma once

#include <Eigen/Eigenvalues>

#include <vector>

#include "kinscan/spatial.hpp"

// Intrinsic-shape-signature key point detection: per-point weighted
// neighborhood covariance, eigenvalue ratio tests, then non-maximum
// suppression on the smallest eigenvalue (the saliency).

namespace kinscan::corr {

struct KeyPoint {
  int index = -1;           // into the input point list
  Vec3 eigenvalues;         // lambda1 >= lambda2 >= lambda3 >= 0
  double saliency() const { return eigenvalues.z(); }
};

struct IssParams {
  double radius = 1.0;    // spherical support, m
  double ratio21 = 0.5;   // lambda2/lambda1 upper bound
  double ratio32 = 0.5;   // lambda3/lambda2 upper bound
  int min_neighbors = 5;  // besides the point itself
};

inline std::vector<KeyPoint> detect_keypoints_iss(const VoxelGrid& grid, const IssParams& params) {
  if (params.radius <= 0.0) throw std::invalid_argument("iss radius must be > 0");
  const auto& pts = grid.points();
  const int n = static_cast<int>(pts.size());

  // neighbor weights: inversely proportional to neighborhood population
  std::vector<int> counts(n);
  for (int i = 0; i < n; ++i) counts[i] = grid.count_within(pts[i], params.radius);

  std::vector<double> saliency(n, -1.0);
  std::vector<KeyPoint> candidates;
  std::vector<int> nbhd;
  for (int i = 0; i < n; ++i) {
    nbhd.clear();
    grid.radius_search(pts[i], params.radius, nbhd);
    if (static_cast<int>(nbhd.size()) - 1 < params.min_neighbors) continue;

    Mat3 cov = Mat3::Zero();
    double wsum = 0.0;
    for (const int j : nbhd) {
      if (j == i) continue;
      const double w = 1.0 / static_cast<double>(counts[j]);
      const Vec3 d = pts[j] - pts[i];
      cov += w * d * d.transpose();
      wsum += w;
    }
    cov /= wsum;

    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(cov);
    const Vec3 ev(std::max(0.0, eig.eigenvalues()(2)), std::max(0.0, eig.eigenvalues()(1)),
                  std::max(0.0, eig.eigenvalues()(0)));
    if (ev.x() <= 0.0) continue;
    if (ev.y() / ev.x() >= params.ratio21) continue;
    if (ev.y() <= 0.0 || ev.z() / ev.y() >= params.ratio32) continue;
    if (ev.z() <= 1e-12) continue;  // exactly flat structures carry no saliency
    saliency[i] = ev.z();
    candidates.push_back({i, ev});
  }

  // non-maximum suppression among candidates within the support radius
  std::vector<KeyPoint> keypoints;
  for (const auto& cand : candidates) {
    nbhd.clear();
    grid.radius_search(pts[cand.index], params.radius, nbhd);
    bool is_max = true;
    for (const int j : nbhd) {
      if (j == cand.index || saliency[j] < 0.0) continue;
      if (saliency[j] > cand.saliency() ||
          (saliency[j] == cand.saliency() && j < cand.index)) {
        is_max = false;
        break;
      }
    }
    if (is_max) keypoints.push_back(cand);
  }
  return keypoints;
}

}  // namespace kinscan::corr
