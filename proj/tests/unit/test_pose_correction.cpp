#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/fixtures.hpp"
#include "moslabel/errors.hpp"
#include "moslabel/pose_correction.hpp"
#include "moslabel/voxel.hpp"

using namespace moslabel;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Street-like world: ground, two facades, a cross wall and some boxes; constrains all six degrees of freedom.
PointCloud structured_world() {
  PointCloud w;
  fixtures::add_wall(w, Vec3(-40, -12, 0), Vec3(80, 0, 0), Vec3(0, 24, 0), 0.5);
  fixtures::add_wall(w, Vec3(-40, -12, 0), Vec3(80, 0, 0), Vec3(0, 0, 8), 0.4);
  fixtures::add_wall(w, Vec3(-40, 12, 0), Vec3(55, 0, 0), Vec3(0, 0, 6), 0.4);
  fixtures::add_wall(w, Vec3(30, -12, 0), Vec3(0, 24, 0), Vec3(0, 0, 5), 0.4);
  fixtures::add_box(w, Vec3(-20, 4, 0), Vec3(-17, 6, 2), 0.25);
  fixtures::add_box(w, Vec3(5, -8, 0), Vec3(6, -7, 4), 0.25);
  fixtures::add_box(w, Vec3(18, 7, 0), Vec3(21, 9.5, 1.5), 0.25);
  return w;
}

/// What a sensor at `pose` sees of the world, in its body frame (points within `range`).
PointCloud observe(const PointCloud& world, const Pose& pose, double range = 35.0) {
  const Pose inv = invert(pose);
  PointCloud out;
  for (const Vec3& p : world.points) {
    if ((p - pose.translation).norm() <= range) out.push_back(inv.apply(p), 0.0f);
  }
  return out;
}

double translation_error(const Pose& a, const Pose& b) { return (a.translation - b.translation).norm(); }
double rotation_error(const Pose& a, const Pose& b) { return rotation_angle_between(a.rotation, b.rotation); }

}  // namespace

TEST_CASE("build_submap counts") {
  const PointCloud world = structured_world();
  const std::vector<Pose> poses = {Pose::identity(), Pose::identity()};
  const FrameCloudProvider same = [&](std::size_t) { return observe(world, Pose::identity()); };

  const std::vector<std::size_t> one = {0};
  const Submap single = build_submap(0, one, same, poses, 0.2);
  CHECK(single.cloud.size() == voxel_downsample(observe(world, Pose::identity()), 0.2).size());
  CHECK(single.reference_frame == 0);

  const std::vector<std::size_t> both = {0, 1};
  CHECK(build_submap(0, both, same, poses, 0.2).cloud.size() == single.cloud.size());

  // two frames 10 m apart, each seeing its own wall
  PointCloud wall_a, wall_b;
  fixtures::add_wall(wall_a, Vec3(2, -5, 0), Vec3(0, 10, 0), Vec3(0, 0, 3), 0.3);
  fixtures::add_wall(wall_b, Vec3(2, -5, 0), Vec3(0, 10, 0), Vec3(0, 0, 3), 0.3);
  const std::vector<Pose> apart = {Pose::identity(), Pose::translate(10, 0, 0)};
  const FrameCloudProvider walls = [&](std::size_t f) { return f == 0 ? wall_a : wall_b; };
  const std::size_t expected = voxel_downsample(wall_a, 0.2).size() + voxel_downsample(wall_b, 0.2).size();
  CHECK(build_submap(0, both, walls, apart, 0.2).cloud.size() == expected);
}

TEST_CASE("icp on identical clouds") {
  const PointCloud cloud = voxel_downsample(observe(structured_world(), Pose::identity()), 0.2);
  IcpParams params;
  const IcpTarget target(cloud, params);
  const IcpResult r = icp_align(cloud, target, params);
  CHECK(r.converged);
  CHECK((r.transform.translation).norm() < 1e-6);
  CHECK(rotation_error(r.transform, Pose::identity()) < 1e-6);
}

TEST_CASE("icp recovers a known perturbation") {
  const PointCloud cloud = voxel_downsample(observe(structured_world(), Pose::identity()), 0.2);
  const Pose t = Pose::from_yaw(5 * kDeg, Vec3(0.3, 0, 0));
  IcpParams params;
  // the source expressed in a frame displaced by t: target = t * source
  const PointCloud source = transform_cloud(cloud, invert(t));
  const IcpResult r = icp_align(source, IcpTarget(cloud, params), params);
  CHECK(r.converged);
  CHECK(translation_error(r.transform, t) < 0.05);
  CHECK(rotation_error(r.transform, t) < 0.5 * kDeg);
}

TEST_CASE("icp error shrinks with the perturbation") {
  const PointCloud cloud = voxel_downsample(observe(structured_world(), Pose::identity()), 0.2);
  IcpParams params;
  const IcpTarget target(cloud, params);
  std::vector<double> errors;
  for (const double d : {2.0, 1.0, 0.5}) {
    const Pose t = Pose::from_yaw(d * 2 * kDeg, Vec3(d, -0.5 * d, 0.1 * d));
    const IcpResult r = icp_align(transform_cloud(cloud, invert(t)), target, params);
    errors.push_back(translation_error(r.transform, t));
  }
  CHECK(errors[1] <= errors[0] + 1e-4);
  CHECK(errors[2] <= errors[1] + 1e-4);
}

TEST_CASE("icp rejects tiny clouds") {
  PointCloud small;
  for (int i = 0; i < 50; ++i) small.push_back(Vec3(i, 0, 0), 0.0f);
  IcpParams params;
  const PointCloud cloud = voxel_downsample(observe(structured_world(), Pose::identity()), 0.2);
  try {
    icp_align(small, IcpTarget(cloud, params), params);
    FAIL("expected degenerate input");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_input);
  }
}

TEST_CASE("cluster correction") {
  const PointCloud world = structured_world();
  // three passes through the same street; truth poses and drifted ones
  std::vector<Pose> truth, drifted;
  const Vec3 drift(0.4, -0.1, 0.0);
  for (int pass = 0; pass < 3; ++pass) {
    for (int k = 0; k < 4; ++k) {
      const Pose p = Pose::from_yaw(0.02 * k, Vec3(-10 + 5 * k + pass, 0.5 * pass, 1.8));
      truth.push_back(p);
      Pose d = p;
      if (pass > 0) d.translation += drift * pass;
      drifted.push_back(d);
    }
  }
  const FrameCloudProvider clouds = [&](std::size_t f) { return observe(world, truth[f]); };
  TrajectoryCluster cluster;
  cluster.kind = ClusterKind::revisit;
  for (std::size_t f = 0; f < truth.size(); ++f) cluster.frames.push_back(f);
  cluster.subclusters = {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}};

  CorrectionParams params;
  const auto submaps = build_cluster_submaps(cluster, clouds, drifted, params);
  REQUIRE(submaps.size() == 3);

  std::vector<Pose> poses = drifted;
  const ClusterCorrection cc = correct_cluster_poses(0, submaps, poses, params.icp);
  CHECK(cc.icp_calls == 2);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(poses[f].rotation == drifted[f].rotation);
    CHECK(poses[f].translation == drifted[f].translation);
  }
  for (std::size_t f = 4; f < truth.size(); ++f) {
    CHECK(translation_error(poses[f], truth[f]) < 0.05);
    CHECK(rotation_error(poses[f], truth[f]) < 0.5 * kDeg);
  }

  // a second pass on corrected poses barely moves them
  const auto again = build_cluster_submaps(cluster, clouds, poses, params);
  std::vector<Pose> twice = poses;
  correct_cluster_poses(0, again, twice, params.icp);
  for (std::size_t f = 0; f < truth.size(); ++f) CHECK(translation_error(twice[f], poses[f]) < params.map_voxel / 2);

  // a single submap is its own anchor
  std::vector<Pose> untouched = drifted;
  const std::vector<Submap> first(submaps.begin(), submaps.begin() + 1);
  CHECK(correct_cluster_poses(0, first, untouched, params.icp).icp_calls == 0);
  for (std::size_t f = 0; f < truth.size(); ++f) CHECK(untouched[f].translation == drifted[f].translation);
}

TEST_CASE("correct_poses reports one call per non-anchor submap") {
  const PointCloud world = structured_world();
  std::vector<Pose> truth;
  for (int k = 0; k < 3; ++k) truth.push_back(Pose::translate(-5 + 5 * k, 0, 1.8));
  truth.push_back(Pose::translate(40, 0, 1.8));
  for (int k = 0; k < 3; ++k) truth.push_back(Pose::translate(-5 + 5 * k, 0.3, 1.8));
  ClusterPartition part;
  TrajectoryCluster a, b;
  a.kind = ClusterKind::revisit;
  a.frames = {0, 1, 2, 4, 5, 6};
  b.frames = {3};
  part.clusters = {a, b};
  part.reindex(7);
  part.validate(7);
  REQUIRE(part.clusters[0].subclusters.size() == 2);

  const FrameCloudProvider clouds = [&](std::size_t f) { return observe(world, truth[f]); };
  CorrectionReport report;
  const auto corrected = correct_poses(part, truth, clouds, {}, &report);
  CHECK(report.icp_calls == 1);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].icp.converged);
  CHECK(report.to_table().rfind("cluster", 0) != std::string::npos);
  CHECK(corrected[3].translation == truth[3].translation);
  for (std::size_t f = 4; f < 7; ++f) CHECK(translation_error(corrected[f], truth[f]) < 0.05);
}
