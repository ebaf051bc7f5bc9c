#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <vector>

namespace moslabel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform. `apply(p)` maps a point from the child frame into the parent frame.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose translate(double x, double y, double z);
  static Pose rot_z(double radians);
  static Pose from_yaw(double yaw, const Vec3& t);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  bool is_valid(double tol = 1e-6) const;
};

/// Result applies `b` first, then `a`.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

/// Polar-decomposition projection of the rotation onto SO(3).
Mat3 orthonormalize(const Mat3& r);
/// Largest absolute entry of R^T R - I.
double orthonormality_error(const Mat3& r);

/// Heading in (-pi, pi] from the rotated x-axis projected on the ground plane.
double yaw_of(const Pose& pose);

/// Rotation angle of a^-1 b in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensities;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensities() const { return !intensities.empty(); }
  void reserve(std::size_t n, bool with_intensity = true);
  void push_back(const Vec3& p, float intensity);
  void push_back(const Vec3& p);
  /// Checks the type invariants: finite coordinates and matching intensity length.
  bool is_valid() const;
};

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

struct Aabb {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min_corner + max_corner); }
  Vec3 extent() const { return max_corner - min_corner; }
  double diagonal() const { return extent().norm(); }
  void expand(const Vec3& p);
  static Aabb around(const Vec3& center, const Vec3& extent);
};

Aabb aabb_of(const PointCloud& cloud, double padding);
Aabb aabb_of(std::span<const Vec3> points, double padding);
bool point_in_box(const Vec3& p, const Aabb& box);

}  // namespace moslabel
