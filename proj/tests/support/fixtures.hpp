#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "moslabel/geometry.hpp"

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("moslabel_" + tag + "_" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Points sampled on an axis-aligned rectangle lying in a coordinate plane.
inline void add_wall(moslabel::PointCloud& cloud, const moslabel::Vec3& origin, const moslabel::Vec3& u,
                     const moslabel::Vec3& v, double step) {
  const int nu = static_cast<int>(u.norm() / step);
  const int nv = static_cast<int>(v.norm() / step);
  for (int i = 0; i <= nu; ++i) {
    for (int j = 0; j <= nv; ++j) cloud.push_back(origin + u * (double(i) / nu) + v * (double(j) / nv), 0.0f);
  }
}

/// Solid box surface sampled on a regular lattice (all six faces).
inline void add_box(moslabel::PointCloud& cloud, const moslabel::Vec3& lo, const moslabel::Vec3& hi, double step) {
  using moslabel::Vec3;
  const Vec3 d = hi - lo;
  add_wall(cloud, lo, Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0), step);
  add_wall(cloud, Vec3(lo.x(), lo.y(), hi.z()), Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0), step);
  add_wall(cloud, lo, Vec3(d.x(), 0, 0), Vec3(0, 0, d.z()), step);
  add_wall(cloud, Vec3(lo.x(), hi.y(), lo.z()), Vec3(d.x(), 0, 0), Vec3(0, 0, d.z()), step);
  add_wall(cloud, lo, Vec3(0, d.y(), 0), Vec3(0, 0, d.z()), step);
  add_wall(cloud, Vec3(hi.x(), lo.y(), lo.z()), Vec3(0, d.y(), 0), Vec3(0, 0, d.z()), step);
}

inline moslabel::PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double scale = 50.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::uniform_real_distribution<float> in(0.0f, 1.0f);
  moslabel::PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({u(rng), u(rng), u(rng)}, in(rng));
  return c;
}

inline moslabel::Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
  moslabel::Pose p;
  p.rotation = Eigen::AngleAxisd(3.0 * u(rng), axis).toRotationMatrix();
  p.translation = moslabel::Vec3(u(rng), u(rng), u(rng)) * 20.0;
  return p;
}

}  // namespace fixtures
