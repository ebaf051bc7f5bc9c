#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "moslabel/geometry.hpp"
#include "moslabel/kdtree.hpp"
#include "moslabel/traj_cluster.hpp"

namespace moslabel {

/// Returns the merged scan of a frame in its own body frame.
using FrameCloudProvider = std::function<PointCloud(std::size_t frame)>;

struct Submap {
  std::size_t subcluster = 0;
  std::size_t reference_frame = 0;  // w_n, first member
  PointCloud cloud;                  // expressed in the reference frame
  std::vector<std::size_t> members;
};

/// Double voxel sampling: every member scan moved into the first member's frame and sampled, then the union sampled.
Submap build_submap(std::size_t subcluster, std::span<const std::size_t> members, const FrameCloudProvider& clouds,
                    std::span<const Pose> poses, double voxel_size);

struct IcpParams {
  std::size_t max_iterations = 50;
  double initial_gate = 2.0;
  double min_gate = 0.5;
  double update_tolerance = 1e-4;
  double convergence_residual = 0.1;  // RMS point-to-plane, meters
  std::size_t normal_neighbors = 20;
  std::size_t min_points = 500;
  std::size_t max_source_points = 20000;  // evenly strided subset used for correspondences
};

struct IcpResult {
  Pose transform;  // target-from-source
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Target cloud with its search tree and per-point plane normals, reusable across alignments.
class IcpTarget {
 public:
  IcpTarget(const PointCloud& cloud, const IcpParams& params);

  const KdTree& tree() const { return tree_; }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }
  bool has_normal(std::size_t i) const { return valid_[i] != 0; }

 private:
  KdTree tree_;
  std::vector<Vec3> normals_;
  std::vector<unsigned char> valid_;
};

IcpResult icp_align(const PointCloud& source, const IcpTarget& target, const IcpParams& params,
                    const Pose& initial = Pose::identity());
IcpResult icp_align(const Submap& source, const Submap& target, const IcpParams& params);

struct SubclusterCorrection {
  std::size_t cluster = 0;
  std::size_t subcluster = 0;
  IcpResult icp;
  bool applied = false;
};

struct ClusterCorrection {
  std::vector<SubclusterCorrection> entries;  // one per aligned (non-anchor) submap
  std::size_t icp_calls = 0;
};

/// Aligns submaps 2..N to the first and left-composes every member pose; poses outside the submaps are untouched.
ClusterCorrection correct_cluster_poses(std::size_t cluster_id, std::span<const Submap> submaps,
                                        std::vector<Pose>& poses, const IcpParams& params);

struct CorrectionParams {
  double map_voxel = 0.2;
  IcpParams icp;
};

/// Submaps of one cluster; subclusters whose submap is below `min_points` are folded into a neighbour.
std::vector<Submap> build_cluster_submaps(const TrajectoryCluster& cluster, const FrameCloudProvider& clouds,
                                          std::span<const Pose> poses, const CorrectionParams& params);

struct CorrectionReport {
  std::vector<SubclusterCorrection> entries;
  std::size_t icp_calls = 0;

  /// Rows `cluster n residual iterations converged`.
  std::string to_table() const;
};

std::vector<Pose> correct_poses(const ClusterPartition& partition, std::span<const Pose> poses,
                                const FrameCloudProvider& clouds, const CorrectionParams& params,
                                CorrectionReport* report = nullptr);

}  // namespace moslabel
