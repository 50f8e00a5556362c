#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "kinscan/spatial.hpp"

// Translation-invariant geometric descriptor. Neighbors are re-expressed
// relative to the described point, aligned to the neighborhood's horizontal
// principal direction (which makes the vector invariant to rotations about
// the vertical axis), then binned on a cylindrical occupancy grid; a small
// block of covariance shape features is appended. The result is
// L2-normalized. Small attitude errors are tolerated by the coarse bins.

namespace kinscan::corr {

using Descriptor = Eigen::VectorXf;

struct DescriptorParams {
  double radius = 2.0;
  int min_neighbors = 16;
  int radial_bins = 4;
  int azimuth_bins = 4;
  int z_bins = 6;
  int max_neighbors = 512;    // deterministic stride cap
  double shape_weight = 0.3;  // relative weight of the shape block

  int histogram_dims() const { return radial_bins * azimuth_bins * z_bins; }
  int dims() const { return histogram_dims() + 6; }
};

inline std::optional<Descriptor> describe(const VoxelGrid& grid, const Vec3& center,
                                          const DescriptorParams& params) {
  std::vector<int> nbhd;
  grid.radius_search(center, params.radius, nbhd);

  // recenter; sort so the result is independent of index order
  std::vector<Vec3> q;
  q.reserve(nbhd.size());
  for (const int j : nbhd) {
    const Vec3 d = grid.points()[j] - center;
    if (d.squaredNorm() > 1e-24) q.push_back(d);
  }
  if (static_cast<int>(q.size()) < params.min_neighbors) return std::nullopt;
  std::sort(q.begin(), q.end(), [](const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  });
  if (static_cast<int>(q.size()) > params.max_neighbors) {
    std::vector<Vec3> kept;
    const size_t stride = (q.size() + params.max_neighbors - 1) / params.max_neighbors;
    for (size_t i = 0; i < q.size(); i += stride) kept.push_back(q[i]);
    q.swap(kept);
  }

  // horizontal principal direction
  double cxx = 0, cxy = 0, cyy = 0;
  for (const auto& d : q) {
    cxx += d.x() * d.x();
    cxy += d.x() * d.y();
    cyy += d.y() * d.y();
  }
  const double angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  Eigen::Vector2d u(std::cos(angle), std::sin(angle));
  // resolve the sign with the third moment along u, falling back to the first
  double m3 = 0, m1 = 0;
  for (const auto& d : q) {
    const double s = u.x() * d.x() + u.y() * d.y();
    m3 += s * s * s;
    m1 += s;
  }
  const double pick = std::abs(m3) > 1e-9 ? m3 : m1;
  if (pick < 0) u = -u;

  Descriptor desc = Descriptor::Zero(params.dims());
  const double r = params.radius;
  for (const auto& d : q) {
    const double along = u.x() * d.x() + u.y() * d.y();
    const double across = -u.y() * d.x() + u.x() * d.y();
    const double rho = std::hypot(d.x(), d.y());
    const double phi = std::atan2(across, along);  // [-pi, pi]
    const int br = std::min(params.radial_bins - 1,
                            static_cast<int>(rho / r * params.radial_bins));
    const int bp = std::min(params.azimuth_bins - 1,
                            static_cast<int>((phi + kPi) / (2 * kPi) * params.azimuth_bins));
    const int bz = std::min(params.z_bins - 1,
                            std::max(0, static_cast<int>((d.z() + r) / (2 * r) * params.z_bins)));
    desc[(bz * params.azimuth_bins + bp) * params.radial_bins + br] += 1.0f;
  }
  const float hist_norm = desc.head(params.histogram_dims()).norm();
  if (hist_norm > 0) {
    desc.head(params.histogram_dims()) *=
        static_cast<float>(1.0 - params.shape_weight) / hist_norm;
  }

  // covariance shape features
  Vec3 mean = Vec3::Zero();
  for (const auto& d : q) mean += d;
  mean /= static_cast<double>(q.size());
  Mat3 cov = Mat3::Zero();
  double zvar = 0.0;
  for (const auto& d : q) {
    const Vec3 c = d - mean;
    cov += c * c.transpose();
    zvar += c.z() * c.z();
  }
  cov /= static_cast<double>(q.size());
  zvar /= static_cast<double>(q.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(cov);
  const double l1 = std::max(eig.eigenvalues()(2), 1e-12);
  const double l2 = std::max(eig.eigenvalues()(1), 0.0);
  const double l3 = std::max(eig.eigenvalues()(0), 0.0);
  const Vec3 normal = eig.eigenvectors().col(0);
  Eigen::Matrix<float, 6, 1> shape;
  shape << static_cast<float>((l1 - l2) / l1), static_cast<float>((l2 - l3) / l1),
      static_cast<float>(l3 / l1), static_cast<float>(std::abs(normal.z())),
      static_cast<float>(mean.z() / r), static_cast<float>(std::sqrt(zvar) / r);
  const float shape_norm = shape.norm();
  if (shape_norm > 0) shape *= static_cast<float>(params.shape_weight) / shape_norm;
  desc.tail(6) = shape;

  desc.normalize();
  return desc;
}

}  // namespace kinscan::corr
