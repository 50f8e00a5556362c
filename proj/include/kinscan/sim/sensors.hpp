#pragma once

#include <cmath>
#include <future>
#include <stdexcept>
#include <vector>

#include "kinscan/measurements.hpp"
#include "kinscan/pointcloud.hpp"
#include "kinscan/rng.hpp"
#include "kinscan/sim/flight.hpp"
#include "kinscan/sim/scene.hpp"
#include "kinscan/sim/specs.hpp"

namespace kinscan::sim {

// Inertial measurement model. Sample k covers [t_k, t_k+1]:
//   gyro_k  = log(R_k^T R_k+1)/dt                      + bias + noise
//   accel_k = R_mid^T ((v_k+1 - v_k)/dt - g)           + bias + noise
// with R_mid = R_k exp(w dt/2). Biases follow first-order random walks from
// a seeded constant initial draw. Earth rotation and gravity variation are
// omitted (scene extent < 3 km; the residual folds into the gyro bias).
inline ImuStream synthesize_imu(const FlightTruth& truth, const ImuSpec& spec,
                                std::uint64_t seed) {
  spec.validate();
  const auto& poses = truth.traj.poses();
  if (poses.size() < 2) throw std::invalid_argument("synthesize_imu: trajectory too short");
  const double dt = 1.0 / spec.rate;
  for (size_t k = 1; k < std::min<size_t>(poses.size(), 16); ++k) {
    if (std::abs(poses[k].t - poses[k - 1].t - dt) > 1e-9) {
      throw std::invalid_argument("synthesize_imu: trajectory not sampled at imu rate");
    }
  }

  Rng rng(derive_seed(seed, 0x101u));
  Vec3 bias_g = rng.gauss3(spec.gyro_bias_rad_s());
  Vec3 bias_a = rng.gauss3(spec.accel_bias_ms2());
  const double sigma_g = spec.gyro_noise_rad_sqrt_s() * std::sqrt(spec.rate);
  const double sigma_a = spec.accel_noise_ms2_sqrt_hz * std::sqrt(spec.rate);
  const double walk_g = spec.gyro_walk_rad_s_sqrt_s * std::sqrt(dt);
  const double walk_a = spec.accel_walk_ms2_sqrt_s * std::sqrt(dt);

  ImuStream out;
  out.reserve(poses.size() - 1);
  for (size_t k = 0; k + 1 < poses.size(); ++k) {
    const Rotation& r0 = poses[k].pose.rotation;
    const Rotation& r1 = poses[k + 1].pose.rotation;
    const Vec3 w = (r0.inverse() * r1).log() / dt;
    const Rotation r_mid = r0 * Rotation::from_axis_angle(0.5 * dt * w);
    const Vec3 accel_nav = (truth.velocities[k + 1] - truth.velocities[k]) / dt;
    const Vec3 f = r_mid.inverse() * (accel_nav - kGravityEnu);

    ImuSample s;
    s.t = poses[k].t;
    s.gyro = w + bias_g + rng.gauss3(sigma_g);
    s.accel = f + bias_a + rng.gauss3(sigma_a);
    out.push_back(s);

    bias_g += rng.gauss3(walk_g);
    bias_a += rng.gauss3(walk_a);
  }
  return out;
}

// GNSS position fixes: truth + iid per-axis noise; epochs falling inside an
// outage window are omitted entirely.
inline GnssStream synthesize_gnss(const FlightTruth& truth, const GnssSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, 0x202u));
  GnssStream out;
  const double t0 = truth.traj.start_time();
  const double t1 = truth.traj.end_time();
  const double dt = 1.0 / spec.rate;
  for (size_t k = 0;; ++k) {
    const double t = t0 + k * dt;
    if (t > t1) break;
    const Vec3 noise = rng.gauss3(spec.sigma);  // drawn even during outages: streams stay aligned
    bool in_outage = false;
    for (const auto& [ws, we] : spec.outages) {
      if (t >= ws && t <= we) {
        in_outage = true;
        break;
      }
    }
    if (in_outage) continue;
    out.push_back({t, truth.traj.pose_at(t).translation + noise, spec.sigma});
  }
  return out;
}

// Across-track line scanner: the beam sweeps the full field of view once per
// scan period (sawtooth), rays leave the scanner mostly nadir. Returns are
// first-surface hits with range noise; misses are dropped. Pulses are
// generated in one-second slices, each with its own derived RNG stream, so
// the result is independent of the number of worker threads.
inline ReturnList scan_scene(const FlightTruth& truth, const Scene& scene, const LidarSpec& spec,
                             std::uint64_t seed, int threads = 0) {
  spec.validate();
  const double t0 = truth.traj.start_time();
  const double t1 = truth.traj.end_time();
  const double pulse_dt = 1.0 / spec.point_rate;
  const double fov = deg2rad(spec.fov_half_deg);
  const Mat3 boresight = spec.boresight.matrix();

  const auto line_of = [&](double t) -> std::uint32_t {
    for (size_t i = 0; i < truth.line_windows.size(); ++i) {
      if (t >= truth.line_windows[i].first && t <= truth.line_windows[i].second) {
        return static_cast<std::uint32_t>(i);
      }
    }
    return kNoLine;
  };

  const size_t n_slices = static_cast<size_t>(std::ceil(t1 - t0));
  const auto run_slice = [&](size_t slice) {
    ReturnList local;
    Rng rng(derive_seed(seed, 0x300u + slice));
    const double ts = t0 + static_cast<double>(slice);
    const double te = std::min(ts + 1.0, t1);
    const size_t k0 = static_cast<size_t>(std::ceil((ts - t0) / pulse_dt - 1e-9));
    for (size_t k = k0;; ++k) {
      const double t = t0 + k * pulse_dt;
      if (t >= te || t > t1) break;
      const double phase = std::fmod(t * spec.scan_rate, 1.0);
      const double theta = fov * (2.0 * phase - 1.0);
      const Vec3 dl(0.0, std::sin(theta), -std::cos(theta));
      const RigidTransform pose = truth.traj.pose_at(t);
      const Vec3 origin = pose * spec.leverarm;
      const Vec3 dir = pose.rotation * (boresight * dl);
      const double noise = rng.gauss(0.0, spec.range_noise);
      const auto range = scene.raycast(origin, dir, spec.max_range);
      if (!range) continue;
      local.push_back({t, (*range + noise) * dl, line_of(t)});
    }
    return local;
  };

  const int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  std::vector<ReturnList> slices(n_slices);
  if (n_workers <= 1 || n_slices < 2) {
    for (size_t s = 0; s < n_slices; ++s) slices[s] = run_slice(s);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (size_t s = next.fetch_add(1); s < n_slices; s = next.fetch_add(1)) {
          slices[s] = run_slice(s);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  ReturnList out;
  size_t total = 0;
  for (const auto& s : slices) total += s.size();
  out.reserve(total);
  for (auto& s : slices) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace kinscan::sim
