#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "kinscan/measurements.hpp"
#include "kinscan/pointcloud.hpp"
#include "kinscan/trajectory.hpp"

// File codecs. Binary formats are little-endian with an 8-byte magic that
// embeds the format version; writes are atomic (temp file + rename).

namespace kinscan::io {

inline constexpr std::array<char, 8> kCloudMagic = {'K', 'S', 'P', 'C', 1, 0, 0, 0};
inline constexpr std::array<char, 8> kReturnsMagic = {'K', 'S', 'L', 'R', 1, 0, 0, 0};

namespace detail {

class AtomicFile {
 public:
  explicit AtomicFile(const std::filesystem::path& path)
      : path_(path), tmp_(path.string() + ".tmp") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open for write: " + tmp_.string());
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + tmp_.string());
    out_.close();
    std::filesystem::rename(tmp_, path_);
  }

  ~AtomicFile() {
    if (out_.is_open()) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("truncated file while reading " + what);
  return value;
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite value in ") + what);
}

inline std::string fmt_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, int line_no, const char* file) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(std::string(file) + ": bad number '" + std::string(s) + "' at line " +
                             std::to_string(line_no));
  }
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline void expect_magic(std::istream& is, const std::array<char, 8>& magic, const char* what) {
  std::array<char, 8> got{};
  is.read(got.data(), got.size());
  if (!is || got != magic) throw std::runtime_error(std::string("bad magic in ") + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point cloud: binary records (x f64, y f64, z f64, t f64, return_id u64,
// line_id u32) after magic + record count.

inline void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os.write(kCloudMagic.data(), kCloudMagic.size());
  detail::put<std::uint64_t>(os, cloud.size());
  for (const auto& pt : cloud) {
    for (int k = 0; k < 3; ++k) detail::check_finite(pt.p[k], "point cloud");
    detail::check_finite(pt.t, "point cloud");
    detail::put(os, pt.p.x());
    detail::put(os, pt.p.y());
    detail::put(os, pt.p.z());
    detail::put(os, pt.t);
    detail::put(os, pt.return_id);
    detail::put(os, pt.line_id);
  }
  file.commit();
}

inline PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  detail::expect_magic(is, kCloudMagic, path.c_str());
  const auto count = detail::get<std::uint64_t>(is, "record count");
  PointCloud cloud;
  cloud.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string what = "record " + std::to_string(i) + "/" + std::to_string(count);
    CloudPoint pt;
    pt.p.x() = detail::get<double>(is, what);
    pt.p.y() = detail::get<double>(is, what);
    pt.p.z() = detail::get<double>(is, what);
    pt.t = detail::get<double>(is, what);
    pt.return_id = detail::get<std::uint64_t>(is, what);
    pt.line_id = detail::get<std::uint32_t>(is, what);
    for (int k = 0; k < 3; ++k) detail::check_finite(pt.p[k], path.c_str());
    cloud.push_back(pt);
  }
  return cloud;
}

// CSV debug variant of the cloud format.
inline void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os << "x,y,z,t,return_id,line_id\n";
  for (const auto& pt : cloud) {
    os << detail::fmt_double(pt.p.x()) << ',' << detail::fmt_double(pt.p.y()) << ','
       << detail::fmt_double(pt.p.z()) << ',' << detail::fmt_double(pt.t) << ',' << pt.return_id
       << ',' << pt.line_id << '\n';
  }
  file.commit();
}

// ---------------------------------------------------------------------------
// Raw LiDAR returns: (t f64, vx f64, vy f64, vz f64, line_id u32); the
// return id is the record index.

inline void write_returns(const std::filesystem::path& path, const ReturnList& returns) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os.write(kReturnsMagic.data(), kReturnsMagic.size());
  detail::put<std::uint64_t>(os, returns.size());
  for (const auto& r : returns) {
    detail::check_finite(r.t, "returns");
    detail::put(os, r.t);
    detail::put(os, r.v.x());
    detail::put(os, r.v.y());
    detail::put(os, r.v.z());
    detail::put(os, r.line_id);
  }
  file.commit();
}

inline ReturnList read_returns(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  detail::expect_magic(is, kReturnsMagic, path.c_str());
  const auto count = detail::get<std::uint64_t>(is, "record count");
  ReturnList returns;
  returns.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string what = "record " + std::to_string(i) + "/" + std::to_string(count);
    LiDARReturn r;
    r.t = detail::get<double>(is, what);
    r.v.x() = detail::get<double>(is, what);
    r.v.y() = detail::get<double>(is, what);
    r.v.z() = detail::get<double>(is, what);
    r.line_id = detail::get<std::uint32_t>(is, what);
    returns.push_back(r);
  }
  return returns;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: t,x,y,z,qw,qx,qy,qz at 10 significant digits.

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os << "t,x,y,z,qw,qx,qy,qz\n";
  char buf[200];
  for (const auto& tp : traj.poses()) {
    const Quat q = tp.pose.rotation.canonical().quat();
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", tp.t,
                  tp.pose.translation.x(), tp.pose.translation.y(), tp.pose.translation.z(), q.w(),
                  q.x(), q.y(), q.z());
    os << buf;
  }
  file.commit();
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "t,x,y,z,qw,qx,qy,qz") {
    throw std::runtime_error("bad trajectory header in " + path.string());
  }
  std::vector<TimedPose> poses;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 8) {
      throw std::runtime_error(path.string() + ": expected 8 fields at line " +
                               std::to_string(line_no));
    }
    double v[8];
    for (int k = 0; k < 8; ++k) v[k] = detail::parse_double(f[k], line_no, path.c_str());
    poses.push_back({v[0], {Rotation(Quat(v[4], v[5], v[6], v[7])), Vec3(v[1], v[2], v[3])}});
  }
  return Trajectory(std::move(poses));
}

// ---------------------------------------------------------------------------
// IMU CSV: t,wx,wy,wz,fx,fy,fz (shortest round-trip formatting).

inline void write_imu_csv(const std::filesystem::path& path, const ImuStream& imu) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os << "t,wx,wy,wz,fx,fy,fz\n";
  for (const auto& s : imu) {
    os << detail::fmt_double(s.t) << ',' << detail::fmt_double(s.gyro.x()) << ','
       << detail::fmt_double(s.gyro.y()) << ',' << detail::fmt_double(s.gyro.z()) << ','
       << detail::fmt_double(s.accel.x()) << ',' << detail::fmt_double(s.accel.y()) << ','
       << detail::fmt_double(s.accel.z()) << '\n';
  }
  file.commit();
}

inline ImuStream read_imu_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "t,wx,wy,wz,fx,fy,fz") {
    throw std::runtime_error("bad IMU header in " + path.string());
  }
  ImuStream imu;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 7) {
      throw std::runtime_error(path.string() + ": expected 7 fields at line " +
                               std::to_string(line_no));
    }
    double v[7];
    for (int k = 0; k < 7; ++k) v[k] = detail::parse_double(f[k], line_no, path.c_str());
    imu.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  return imu;
}

// ---------------------------------------------------------------------------
// GNSS CSV: t,x,y,z,sx,sy,sz.

inline void write_gnss_csv(const std::filesystem::path& path, const GnssStream& gnss) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os << "t,x,y,z,sx,sy,sz\n";
  for (const auto& g : gnss) {
    os << detail::fmt_double(g.t) << ',' << detail::fmt_double(g.p.x()) << ','
       << detail::fmt_double(g.p.y()) << ',' << detail::fmt_double(g.p.z()) << ','
       << detail::fmt_double(g.sigma.x()) << ',' << detail::fmt_double(g.sigma.y()) << ','
       << detail::fmt_double(g.sigma.z()) << '\n';
  }
  file.commit();
}

inline GnssStream read_gnss_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "t,x,y,z,sx,sy,sz") {
    throw std::runtime_error("bad GNSS header in " + path.string());
  }
  GnssStream gnss;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 7) {
      throw std::runtime_error(path.string() + ": expected 7 fields at line " +
                               std::to_string(line_no));
    }
    double v[7];
    for (int k = 0; k < 7; ++k) v[k] = detail::parse_double(f[k], line_no, path.c_str());
    gnss.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  return gnss;
}

// ---------------------------------------------------------------------------
// Correspondence CSV:
// t_a,vx_a,vy_a,vz_a,line_a,t_b,vx_b,vy_b,vz_b,line_b,sigma,desc_dist

inline const char* kCorrespondenceHeader =
    "t_a,vx_a,vy_a,vz_a,line_a,t_b,vx_b,vy_b,vz_b,line_b,sigma,desc_dist";

inline void write_correspondences_csv(const std::filesystem::path& path,
                                      const CorrespondenceSet& set) {
  detail::AtomicFile file(path);
  auto& os = file.stream();
  os << kCorrespondenceHeader << '\n';
  for (const auto& c : set) {
    os << detail::fmt_double(c.t_a) << ',' << detail::fmt_double(c.v_a.x()) << ','
       << detail::fmt_double(c.v_a.y()) << ',' << detail::fmt_double(c.v_a.z()) << ',' << c.line_a
       << ',' << detail::fmt_double(c.t_b) << ',' << detail::fmt_double(c.v_b.x()) << ','
       << detail::fmt_double(c.v_b.y()) << ',' << detail::fmt_double(c.v_b.z()) << ',' << c.line_b
       << ',' << detail::fmt_double(c.sigma) << ',' << detail::fmt_double(c.desc_dist) << '\n';
  }
  file.commit();
}

inline CorrespondenceSet read_correspondences_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kCorrespondenceHeader) {
    throw std::runtime_error("bad correspondence header in " + path.string());
  }
  CorrespondenceSet set;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 12) {
      throw std::runtime_error(path.string() + ": expected 12 fields at line " +
                               std::to_string(line_no));
    }
    Correspondence c;
    c.t_a = detail::parse_double(f[0], line_no, path.c_str());
    c.v_a = Vec3(detail::parse_double(f[1], line_no, path.c_str()),
                 detail::parse_double(f[2], line_no, path.c_str()),
                 detail::parse_double(f[3], line_no, path.c_str()));
    c.line_a = static_cast<std::uint32_t>(detail::parse_double(f[4], line_no, path.c_str()));
    c.t_b = detail::parse_double(f[5], line_no, path.c_str());
    c.v_b = Vec3(detail::parse_double(f[6], line_no, path.c_str()),
                 detail::parse_double(f[7], line_no, path.c_str()),
                 detail::parse_double(f[8], line_no, path.c_str()));
    c.line_b = static_cast<std::uint32_t>(detail::parse_double(f[9], line_no, path.c_str()));
    c.sigma = detail::parse_double(f[10], line_no, path.c_str());
    c.desc_dist = detail::parse_double(f[11], line_no, path.c_str());
    set.push_back(c);
  }
  return set;
}

}  // namespace kinscan::io
