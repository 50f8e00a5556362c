#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kinscan/rng.hpp"
#include "kinscan/se3.hpp"

namespace kinscan::corr {

// Least-squares rigid fit min_{R,T} sum ||R pa_i + T - pb_i||^2 via centroid
// subtraction and orthogonal Procrustes on the cross-covariance, with the
// determinant corrected to a proper rotation.
inline RigidTransform estimate_rigid(const std::vector<Vec3>& pa, const std::vector<Vec3>& pb) {
  if (pa.size() != pb.size() || pa.size() < 3) {
    throw std::invalid_argument("estimate_rigid: need >= 3 point pairs");
  }
  const double n = static_cast<double>(pa.size());
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (size_t i = 0; i < pa.size(); ++i) {
    ca += pa[i];
    cb += pb[i];
  }
  ca /= n;
  cb /= n;
  Mat3 h = Mat3::Zero();
  for (size_t i = 0; i < pa.size(); ++i) {
    h += (pa[i] - ca) * (pb[i] - cb).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
    throw std::domain_error("estimate_rigid: degenerate (collinear) point configuration");
  }
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return {Rotation(r), cb - r * ca};
}

struct RansacParams {
  double tau = 0.25;          // inlier threshold, m
  int subset = 4;             // sample size s
  double confidence = 0.999;  // success probability for the iteration bound
  int max_iter = 10000;
};

struct RansacResult {
  RigidTransform model;
  std::vector<char> inliers;  // one flag per correspondence
  double inlier_ratio = 0.0;
  int inlier_count = 0;
  int iterations = 0;
};

// Sample-consensus fit of one rigid model per tile: the model that collects
// the most correspondences with ||R pa + T - pb|| < tau wins; ties break on
// the lower mean inlier residual. The returned flags are the classification
// under the returned model, so the tau inequality holds for every flagged
// inlier by construction.
inline RansacResult ransac_filter(const std::vector<Vec3>& pa, const std::vector<Vec3>& pb,
                                  const RansacParams& params, std::uint64_t seed) {
  const int n = static_cast<int>(pa.size());
  if (pb.size() != pa.size()) throw std::invalid_argument("ransac: size mismatch");
  if (n < params.subset) {
    throw std::invalid_argument("ransac: fewer correspondences than the subset size");
  }
  if (params.tau <= 0.0) throw std::invalid_argument("ransac: tau must be > 0");

  Rng rng(derive_seed(seed, 0x4a5ac));
  RansacResult best;
  best.inliers.assign(n, 0);
  double best_mean_residual = std::numeric_limits<double>::infinity();
  int needed = params.max_iter;

  std::vector<int> sample(params.subset);
  std::vector<Vec3> sa(params.subset), sb(params.subset);
  std::vector<char> flags(n);
  int t = 0;
  for (; t < needed; ++t) {
    // draw `subset` distinct indices
    for (int k = 0; k < params.subset; ++k) {
      bool fresh;
      do {
        sample[k] = static_cast<int>(rng.uniform_index(n));
        fresh = true;
        for (int j = 0; j < k; ++j) fresh &= (sample[j] != sample[k]);
      } while (!fresh);
      sa[k] = pa[sample[k]];
      sb[k] = pb[sample[k]];
    }
    RigidTransform model;
    try {
      model = estimate_rigid(sa, sb);
    } catch (const std::domain_error&) {
      continue;  // degenerate sample
    }
    int count = 0;
    double residual_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = (model * pa[i] - pb[i]).norm();
      flags[i] = r < params.tau ? 1 : 0;
      if (flags[i]) {
        ++count;
        residual_sum += r;
      }
    }
    const double mean_residual = count > 0 ? residual_sum / count : 0.0;
    if (count > best.inlier_count ||
        (count == best.inlier_count && mean_residual < best_mean_residual)) {
      best.inlier_count = count;
      best.model = model;
      best.inliers = flags;
      best_mean_residual = mean_residual;
      // adaptive iteration bound from the running inlier ratio
      const double w = static_cast<double>(count) / n;
      if (w > 0.0 && w < 1.0) {
        const double denom = std::log(1.0 - std::pow(w, params.subset));
        if (denom < 0.0) {
          const int bound =
              static_cast<int>(std::ceil(std::log(1.0 - params.confidence) / denom));
          needed = std::min(params.max_iter, std::max(bound, t + 1));
        }
      } else if (w >= 1.0) {
        needed = t + 1;
      }
    }
  }
  best.iterations = t;
  best.inlier_ratio = n > 0 ? static_cast<double>(best.inlier_count) / n : 0.0;
  return best;
}

}  // namespace kinscan::corr
