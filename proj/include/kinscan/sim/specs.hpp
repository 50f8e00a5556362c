#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "kinscan/se3.hpp"

namespace kinscan::sim {

// Lawnmower-style flight description. When `waypoints` is empty they are
// generated from the line parameters (parallel lines joined by arc turns).
struct FlightPlan {
  std::vector<Vec3> waypoints;
  double speed = 12.0;          // m/s along track
  int line_count = 2;
  double line_length = 500.0;   // m
  double line_spacing = 60.0;   // m between adjacent lines
  double altitude = 230.0;      // m AGL
  Vec3 dither_amp_deg{2.0, 2.0, 5.0};     // roll, pitch, yaw amplitude
  Vec3 dither_period_s{8.0, 12.5, 17.0};  // per-axis period

  void validate() const {
    if (speed <= 0.0) throw std::invalid_argument("flight.speed must be > 0");
    if (waypoints.empty()) {
      if (line_count < 1) throw std::invalid_argument("flight.line_count must be >= 1");
      if (line_length <= 0.0) throw std::invalid_argument("flight.line_length must be > 0");
      if (line_count > 1 && line_spacing <= 0.0) {
        throw std::invalid_argument("flight.line_spacing must be > 0");
      }
    } else if (waypoints.size() < 2) {
      throw std::invalid_argument("flight needs at least 2 waypoints");
    }
    if ((dither_period_s.array() <= 0.0).any()) {
      throw std::invalid_argument("flight.dither periods must be > 0");
    }
  }
};

// Line spacing that yields the requested side overlap for a given swath.
inline double spacing_for_overlap(double swath, double overlap) {
  if (overlap <= 0.0 || overlap >= 1.0) {
    throw std::invalid_argument("side overlap must be in (0,1)");
  }
  return swath * (1.0 - overlap);
}

struct ImuSpec {
  double rate = 200.0;                  // Hz
  double gyro_bias_deg_h = 20.0;        // bias instability, deg/h
  double accel_bias_mg = 2.0;           // bias instability, mg
  double gyro_noise_deg_sqrt_h = 0.3;   // angular random walk, deg/sqrt(h)
  double accel_noise_ms2_sqrt_hz = 8e-4;
  double gyro_walk_rad_s_sqrt_s = 3e-6;    // bias random-walk PSD
  double accel_walk_ms2_sqrt_s = 6e-4;

  double gyro_bias_rad_s() const { return deg2rad(gyro_bias_deg_h) / 3600.0; }
  double accel_bias_ms2() const { return accel_bias_mg * 1e-3 * kGravity; }
  // deg/sqrt(h) -> rad/sqrt(s)
  double gyro_noise_rad_sqrt_s() const { return deg2rad(gyro_noise_deg_sqrt_h) / 60.0; }

  void validate() const {
    if (rate < 50.0) throw std::invalid_argument("imu.rate must be >= 50 Hz");
    if (gyro_bias_deg_h < 0 || accel_bias_mg < 0 || gyro_noise_deg_sqrt_h < 0 ||
        accel_noise_ms2_sqrt_hz < 0 || gyro_walk_rad_s_sqrt_s < 0 || accel_walk_ms2_sqrt_s < 0) {
      throw std::invalid_argument("imu noise parameters must be nonnegative");
    }
  }
};

struct GnssSpec {
  double rate = 5.0;                  // Hz
  Vec3 sigma{0.02, 0.02, 0.03};       // m per ENU axis
  std::vector<std::pair<double, double>> outages;  // [start, end] seconds

  void validate() const {
    if (rate <= 0.0) throw std::invalid_argument("gnss.rate must be > 0");
    if ((sigma.array() < 0.0).any()) throw std::invalid_argument("gnss.sigma must be >= 0");
    for (size_t i = 0; i < outages.size(); ++i) {
      if (outages[i].second <= outages[i].first) {
        throw std::invalid_argument("gnss outage window must have start < end");
      }
      for (size_t j = i + 1; j < outages.size(); ++j) {
        if (outages[i].first < outages[j].second && outages[j].first < outages[i].second) {
          throw std::invalid_argument("gnss outage windows must not overlap");
        }
      }
    }
  }
};

struct LidarSpec {
  double point_rate = 40000.0;  // Hz
  double scan_rate = 60.0;      // Hz (across-track sweeps per second)
  double fov_half_deg = 12.0;   // half-angle of the across-track sweep
  double range_noise = 0.02;    // m, 1 sigma along the ray
  double max_range = 600.0;     // m
  Rotation boresight;           // scanner-to-body rotation R^b_L
  Vec3 leverarm{Vec3::Zero()};  // m, body frame

  void validate() const {
    if (point_rate <= 0 || scan_rate <= 0) {
      throw std::invalid_argument("lidar rates must be > 0");
    }
    if (fov_half_deg <= 0 || fov_half_deg >= 90) {
      throw std::invalid_argument("lidar.fov_half_deg must be in (0,90)");
    }
    if (range_noise < 0) throw std::invalid_argument("lidar.range_noise must be >= 0");
  }
};

// Procedural scene content knobs; the scene itself is built by make_scene.
struct SceneSpec {
  double margin = 80.0;              // ground extent beyond the flight lines, m
  double terrain_amplitude = 1.5;    // m
  double terrain_wavelength = 90.0;  // m
  double terrain_cell = 2.0;         // heightfield grid cell, m
  int building_count = 40;
  int tree_count = 150;
  int car_count = 25;

  void validate() const {
    if (terrain_cell <= 0) throw std::invalid_argument("scene.terrain_cell must be > 0");
    if (building_count < 0 || tree_count < 0 || car_count < 0) {
      throw std::invalid_argument("scene object counts must be >= 0");
    }
  }
};

}  // namespace kinscan::sim
