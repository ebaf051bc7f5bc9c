#include "moslabel/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "moslabel/errors.hpp"

namespace moslabel {

namespace {
constexpr double kDriftTolerance = 1e-9;
}

Pose Pose::translate(double x, double y, double z) {
  Pose p;
  p.translation = Vec3(x, y, z);
  return p;
}

Pose Pose::rot_z(double radians) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix();
  return p;
}

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  Pose p = rot_z(yaw);
  p.translation = t;
  return p;
}

bool Pose::is_valid(double tol) const {
  return rotation.allFinite() && translation.allFinite() && orthonormality_error(rotation) <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  return u * v.transpose();
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (orthonormality_error(out.rotation) > kDriftTolerance) {
    out.rotation = orthonormalize(out.rotation);
  }
  return out;
}

Pose invert(const Pose& a) {
  Pose out;
  out.rotation = a.rotation.transpose();
  out.translation = -(out.rotation * a.translation);
  return out;
}

double yaw_of(const Pose& pose) {
  const Vec3 x_axis = pose.rotation.col(0);
  if (std::abs(x_axis.z()) > 0.999) {
    throw Error(Errc::degenerate_orientation, "yaw_of: x-axis is near vertical");
  }
  double yaw = std::atan2(x_axis.y(), x_axis.x());
  if (yaw <= -std::numbers::pi) yaw += 2.0 * std::numbers::pi;
  return yaw;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 d = a.transpose() * b;
  const double c = std::clamp((d.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

void PointCloud::reserve(std::size_t n, bool with_intensity) {
  points.reserve(n);
  if (with_intensity) intensities.reserve(n);
}

void PointCloud::push_back(const Vec3& p, float intensity) {
  points.push_back(p);
  intensities.push_back(intensity);
}

void PointCloud::push_back(const Vec3& p) { points.push_back(p); }

bool PointCloud::is_valid() const {
  if (!intensities.empty() && intensities.size() != points.size()) return false;
  for (const auto& p : points) {
    if (!p.allFinite()) return false;
  }
  return true;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    out.points.push_back(pose.rotation * p + pose.translation);
  }
  out.intensities = cloud.intensities;
  return out;
}

void Aabb::expand(const Vec3& p) {
  min_corner = min_corner.cwiseMin(p);
  max_corner = max_corner.cwiseMax(p);
}

Aabb Aabb::around(const Vec3& center, const Vec3& extent) {
  return {center - 0.5 * extent, center + 0.5 * extent};
}

Aabb aabb_of(std::span<const Vec3> points, double padding) {
  if (points.empty()) {
    throw Error(Errc::empty_input, "aabb_of: empty point set");
  }
  if (padding < 0.0) {
    throw Error(Errc::invalid_parameter, "aabb_of: negative padding");
  }
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) box.expand(p);
  box.min_corner.array() -= padding;
  box.max_corner.array() += padding;
  return box;
}

Aabb aabb_of(const PointCloud& cloud, double padding) {
  return aabb_of(std::span<const Vec3>(cloud.points), padding);
}

bool point_in_box(const Vec3& p, const Aabb& box) {
  return (p.array() >= box.min_corner.array()).all() && (p.array() <= box.max_corner.array()).all();
}

}  // namespace moslabel
