#include <gtest/gtest.h>

#include <cmath>

#include "kinscan/georef.hpp"
#include "kinscan/sim/flight.hpp"
#include "kinscan/sim/scene.hpp"
#include "kinscan/sim/sensors.hpp"
#include "kinscan/spatial.hpp"

namespace kinscan {
namespace {

using sim::FlightPlan;
using sim::FlightTruth;
using sim::GnssSpec;
using sim::ImuSpec;
using sim::LidarSpec;
using sim::Scene;
using sim::SceneSpec;

FlightTruth hover_truth(double duration, double rate, const Vec3& position = Vec3::Zero()) {
  std::vector<TimedPose> poses;
  std::vector<Vec3> vel;
  const size_t n = static_cast<size_t>(duration * rate) + 1;
  for (size_t k = 0; k < n; ++k) {
    poses.push_back({100.0 + k / rate, {Rotation(), position}});
    vel.push_back(Vec3::Zero());
  }
  FlightTruth truth;
  truth.traj = Trajectory(std::move(poses));
  truth.velocities = std::move(vel);
  truth.line_windows = {{100.0, 100.0 + duration}};
  return truth;
}

Scene flat_scene(double extent = 400.0) {
  SceneSpec spec;
  spec.terrain_amplitude = 0.0;
  spec.building_count = 0;
  spec.tree_count = 0;
  spec.car_count = 0;
  return sim::make_scene(spec, -extent, extent, -extent, extent, 1);
}

TEST(Flight, StraightLineConstantVelocity) {
  FlightPlan plan;
  plan.waypoints = {Vec3(0, 0, 100), Vec3(240, 0, 100)};
  plan.speed = 12.0;
  plan.dither_amp_deg = Vec3::Zero();
  const auto truth = sim::generate_trajectory(plan, 50.0, 1);
  ASSERT_GT(truth.traj.size(), 100u);
  for (size_t k = 1; k < truth.traj.size(); ++k) {
    const Vec3 dp = truth.traj.poses()[k].pose.translation -
                    truth.traj.poses()[k - 1].pose.translation;
    EXPECT_NEAR(dp.norm() * 50.0, 12.0, 1e-6);
    // heading along track: yaw == track azimuth (0 for +East flight)
    const Vec3 rpy = truth.traj.poses()[k].pose.rotation.to_euler_deg();
    EXPECT_NEAR(rpy.z(), 0.0, 1e-9);
    EXPECT_NEAR(rpy.x(), 0.0, 1e-9);
  }
}

TEST(Flight, LineDurationMatchesSpeed) {
  FlightPlan plan;
  plan.line_count = 1;
  plan.line_length = 2000.0;
  plan.speed = 12.0;
  const auto truth = sim::generate_trajectory(plan, 10.0, 1);
  ASSERT_EQ(truth.line_windows.size(), 1u);
  EXPECT_NEAR(truth.line_windows[0].second - truth.line_windows[0].first, 2000.0 / 12.0, 1e-9);
}

TEST(Flight, SpacingForFortyPercentOverlap) {
  EXPECT_NEAR(sim::spacing_for_overlap(180.0, 0.4), 108.0, 1e-12);
}

TEST(Flight, DegeneratePlanThrows) {
  FlightPlan plan;
  plan.waypoints = {Vec3(0, 0, 100), Vec3(0, 0, 100)};
  EXPECT_THROW(sim::generate_trajectory(plan, 10.0, 1), std::invalid_argument);
}

TEST(Imu, HoverMeasuresGravityReaction) {
  ImuSpec spec;
  spec.gyro_bias_deg_h = 0;
  spec.accel_bias_mg = 0;
  spec.gyro_noise_deg_sqrt_h = 0;
  spec.accel_noise_ms2_sqrt_hz = 0;
  spec.gyro_walk_rad_s_sqrt_s = 0;
  spec.accel_walk_ms2_sqrt_s = 0;
  const auto truth = hover_truth(2.0, spec.rate);
  const auto imu = sim::synthesize_imu(truth, spec, 5);
  for (const auto& s : imu) {
    EXPECT_NEAR(s.gyro.norm(), 0.0, 1e-12);
    EXPECT_NEAR((s.accel - Vec3(0, 0, kGravity)).norm(), 0.0, 1e-9);
  }
}

// Integration oracle: strapdown integration of noise-free outputs must
// reproduce the truth trajectory.
TEST(Imu, ZeroNoiseIntegrationClosure) {
  FlightPlan plan;
  plan.line_count = 1;
  plan.line_length = 130.0;
  plan.speed = 12.0;
  ImuSpec spec;
  spec.rate = 200.0;
  spec.gyro_bias_deg_h = 0;
  spec.accel_bias_mg = 0;
  spec.gyro_noise_deg_sqrt_h = 0;
  spec.accel_noise_ms2_sqrt_hz = 0;
  spec.gyro_walk_rad_s_sqrt_s = 0;
  spec.accel_walk_ms2_sqrt_s = 0;
  const auto truth = sim::generate_trajectory(plan, spec.rate, 3);
  ASSERT_GE(truth.traj.end_time() - truth.traj.start_time(), 10.0);
  const auto imu = sim::synthesize_imu(truth, spec, 3);

  const double dt = 1.0 / spec.rate;
  Rotation r = truth.traj.poses()[0].pose.rotation;
  Vec3 p = truth.traj.poses()[0].pose.translation;
  Vec3 v = truth.velocities[0];
  for (size_t k = 0; k < imu.size(); ++k) {
    const Rotation r_mid = r * Rotation::from_axis_angle(0.5 * dt * imu[k].gyro);
    const Vec3 a = r_mid * imu[k].accel + kGravityEnu;
    p += v * dt + 0.5 * a * dt * dt;
    v += a * dt;
    r = r * Rotation::from_axis_angle(dt * imu[k].gyro);
  }
  const auto& last = truth.traj.poses().back();
  EXPECT_LT((p - last.pose.translation).norm(), 1e-4);
  EXPECT_LT(r.angle_to(last.pose.rotation), 1e-6);
}

// Order-of-magnitude check of free-inertial drift with a MEMS-grade spec.
TEST(Imu, NavchipGradeFreeInertialDrift) {
  ImuSpec spec;  // defaults are Navchip-like: 20 deg/h, 2 mg
  const double duration = 60.0;
  const auto truth = hover_truth(duration, spec.rate);
  const auto imu = sim::synthesize_imu(truth, spec, 11);

  const double dt = 1.0 / spec.rate;
  Rotation r;
  Vec3 p = Vec3::Zero(), v = Vec3::Zero();
  for (const auto& s : imu) {
    const Rotation r_mid = r * Rotation::from_axis_angle(0.5 * dt * s.gyro);
    const Vec3 a = r_mid * s.accel + kGravityEnu;
    p += v * dt + 0.5 * a * dt * dt;
    v += a * dt;
    r = r * Rotation::from_axis_angle(dt * s.gyro);
  }
  const double drift = p.norm();
  EXPECT_GT(drift, 0.3);
  EXPECT_LT(drift, 300.0);
}

TEST(Gnss, NoiselessMatchesTruth) {
  GnssSpec spec;
  spec.sigma = Vec3::Zero();
  const auto truth = hover_truth(10.0, 200.0, Vec3(3, 4, 5));
  const auto gnss = sim::synthesize_gnss(truth, spec, 1);
  ASSERT_FALSE(gnss.empty());
  for (const auto& g : gnss) {
    EXPECT_NEAR((g.p - Vec3(3, 4, 5)).norm(), 0.0, 1e-12);
  }
}

TEST(Gnss, OutageRemovesExactlyTheWindow) {
  GnssSpec spec;
  spec.rate = 5.0;
  spec.outages = {{100.0, 160.0}};
  const auto truth = hover_truth(200.0, 200.0);
  const auto gnss = sim::synthesize_gnss(truth, spec, 1);
  size_t inside = 0;
  for (const auto& g : gnss) {
    EXPECT_FALSE(g.t >= 100.0 && g.t <= 160.0);
    ++inside;
  }
  // epochs at 5 Hz on [100, 300]: 1001 total, 301 fall in [100,160]
  EXPECT_EQ(gnss.size(), 1001u - 301u);
}

TEST(Gnss, EmpiricalSigmaWithinTenPercent) {
  GnssSpec spec;
  spec.rate = 5.0;
  spec.sigma = Vec3(0.02, 0.02, 0.02);
  const auto truth = hover_truth(2000.0, 50.0);
  const auto gnss = sim::synthesize_gnss(truth, spec, 17);
  ASSERT_GE(gnss.size(), 10000u);
  for (int axis = 0; axis < 3; ++axis) {
    double ss = 0.0;
    for (const auto& g : gnss) ss += g.p[axis] * g.p[axis];
    const double std = std::sqrt(ss / gnss.size());
    EXPECT_NEAR(std, 0.02, 0.002);
  }
}

TEST(Lidar, NadirRangeOverFlatGround) {
  LidarSpec spec;
  spec.point_rate = 2000.0;
  spec.scan_rate = 10.0;
  spec.fov_half_deg = 0.5;
  spec.range_noise = 0.02;
  const auto truth = hover_truth(1.0, 200.0, Vec3(0, 0, 230.0));
  const auto scene = flat_scene();
  const auto returns = sim::scan_scene(truth, scene, spec, 9);
  ASSERT_GT(returns.size(), 100u);
  for (const auto& r : returns) {
    EXPECT_NEAR(r.v.norm(), 230.0, 0.02 * 6 + 230.0 * 2e-5);
  }
}

TEST(Lidar, MissesAreDropped) {
  LidarSpec spec;
  spec.max_range = 100.0;  // ground at 230 m is out of reach
  const auto truth = hover_truth(0.5, 200.0, Vec3(0, 0, 230.0));
  const auto returns = sim::scan_scene(truth, flat_scene(), spec, 9);
  EXPECT_TRUE(returns.empty());
}

// Density check with acquisition settings emulating the reference flights:
// 230 m AGL, 12 m/s, 100 Hz scan. Bare-ground density must land in the
// 35..50 pts/m^2 band.
TEST(Lidar, BareGroundDensity) {
  FlightPlan plan;
  plan.line_count = 1;
  plan.line_length = 200.0;
  plan.speed = 12.0;
  plan.altitude = 230.0;
  plan.dither_amp_deg = Vec3::Zero();
  LidarSpec spec;
  spec.point_rate = 120000.0;
  spec.scan_rate = 100.0;
  spec.fov_half_deg = 30.0;
  spec.range_noise = 0.0;
  spec.max_range = 400.0;
  const auto truth = sim::generate_trajectory(plan, 200.0, 2);
  const auto returns = sim::scan_scene(truth, flat_scene(400.0), spec, 2, 2);
  const auto cloud = georeference(returns, truth.traj, spec.boresight, spec.leverarm);

  // count points in 5x5 m cells well inside the swath
  std::map<std::pair<int, int>, int> cells;
  for (const auto& pt : cloud) {
    if (pt.p.x() < 50 || pt.p.x() > 150 || std::abs(pt.p.y()) > 80) continue;
    cells[{static_cast<int>(pt.p.x() / 5), static_cast<int>(std::floor(pt.p.y() / 5))}]++;
  }
  ASSERT_GT(cells.size(), 100u);
  double mean = 0.0;
  for (const auto& [key, count] : cells) mean += count / 25.0;
  mean /= cells.size();
  EXPECT_GE(mean, 35.0);
  EXPECT_LE(mean, 50.0);
}

TEST(Georef, IdentityTrajectoryReturnsRawVectors) {
  ReturnList returns{{100.5, Vec3(1, 2, -3), 0}, {101.0, Vec3(0, 0, -5), 0}};
  Trajectory traj({{100.0, RigidTransform::identity()}, {102.0, RigidTransform::identity()}});
  const auto cloud = georeference(returns, traj, Rotation(), Vec3::Zero());
  ASSERT_EQ(cloud.size(), 2u);
  EXPECT_NEAR((cloud[0].p - Vec3(1, 2, -3)).norm(), 0.0, 1e-15);
  EXPECT_EQ(cloud[0].return_id, 0u);
  EXPECT_EQ(cloud[1].return_id, 1u);
}

TEST(Georef, OutsideSpanThrows) {
  ReturnList returns{{99.0, Vec3(1, 2, -3), 0}};
  Trajectory traj({{100.0, RigidTransform::identity()}, {102.0, RigidTransform::identity()}});
  EXPECT_THROW(georeference(returns, traj, Rotation(), Vec3::Zero()), std::out_of_range);
}

// Closing the loop: scanning a scene and georeferencing with the same truth
// and mounting must put every point back on the surface it hit.
TEST(Georef, TruthRoundTripHitsGround) {
  FlightPlan plan;
  plan.line_count = 1;
  plan.line_length = 100.0;
  plan.altitude = 230.0;
  LidarSpec spec;
  spec.point_rate = 5000.0;
  spec.scan_rate = 50.0;
  spec.fov_half_deg = 15.0;
  spec.range_noise = 0.0;
  spec.boresight = Rotation::from_euler_deg(0.3, -0.2, 0.5);
  spec.leverarm = Vec3(0.3, 0.1, -0.2);
  const auto truth = sim::generate_trajectory(plan, 200.0, 4);
  const auto scene = flat_scene();
  const auto returns = sim::scan_scene(truth, scene, spec, 4);
  ASSERT_GT(returns.size(), 1000u);
  const auto cloud = georeference(returns, truth.traj, spec.boresight, spec.leverarm);
  for (const auto& pt : cloud) {
    EXPECT_NEAR(pt.p.z(), 0.0, 1e-5);  // flat scene at height 0
  }
}

TEST(Georef, YawPerturbationLeverEffect) {
  // single pulse 90 m off nadir from 230 m AGL
  const double range = std::sqrt(230.0 * 230.0 + 90.0 * 90.0);
  const double theta = std::atan2(90.0, 230.0);
  ReturnList returns{{100.5, range * Vec3(0, std::sin(theta), -std::cos(theta)), 0}};
  const Vec3 position(0, 0, 230.0);
  Trajectory truth({{100.0, {Rotation(), position}}, {101.0, {Rotation(), position}}});
  Trajectory perturbed({{100.0, {Rotation::from_euler_deg(0, 0, 0.19), position}},
                        {101.0, {Rotation::from_euler_deg(0, 0, 0.19), position}}});
  const auto a = georeference(returns, truth, Rotation(), Vec3::Zero());
  const auto b = georeference(returns, perturbed, Rotation(), Vec3::Zero());
  const double horizontal = (b[0].p - a[0].p).head<2>().norm();
  EXPECT_GT(horizontal, 0.25);
  EXPECT_LT(horizontal, 0.85);
}

TEST(Simulator, BitExactReproducibilityAcrossThreads) {
  FlightPlan plan;
  plan.line_count = 1;
  plan.line_length = 60.0;
  LidarSpec spec;
  spec.point_rate = 3000.0;
  spec.scan_rate = 30.0;
  const auto truth = sim::generate_trajectory(plan, 200.0, 21);
  const auto scene = flat_scene();
  const auto r1 = sim::scan_scene(truth, scene, spec, 21, 1);
  const auto r2 = sim::scan_scene(truth, scene, spec, 21, 2);
  ASSERT_EQ(r1.size(), r2.size());
  for (size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].t, r2[i].t);
    EXPECT_EQ(r1[i].v, r2[i].v);
  }
  const auto imu1 = sim::synthesize_imu(truth, ImuSpec{}, 7);
  const auto imu2 = sim::synthesize_imu(truth, ImuSpec{}, 7);
  ASSERT_EQ(imu1.size(), imu2.size());
  for (size_t i = 0; i < imu1.size(); ++i) {
    EXPECT_EQ(imu1[i].gyro, imu2[i].gyro);
    EXPECT_EQ(imu1[i].accel, imu2[i].accel);
  }
}

}  // namespace
}  // namespace kinscan
