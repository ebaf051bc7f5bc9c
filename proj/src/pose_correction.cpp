#include "moslabel/pose_correction.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <spdlog/spdlog.h>

#include "moslabel/errors.hpp"
#include "moslabel/voxel.hpp"

namespace moslabel {

Submap build_submap(std::size_t subcluster, std::span<const std::size_t> members, const FrameCloudProvider& clouds,
                    std::span<const Pose> poses, double voxel_size) {
  if (members.empty()) throw Error(Errc::empty_input, "build_submap: empty subcluster");
  Submap map;
  map.subcluster = subcluster;
  map.reference_frame = members.front();
  map.members.assign(members.begin(), members.end());
  const Pose world_to_ref = invert(poses[map.reference_frame]);

  VoxelGrid outer(voxel_size);
  for (const std::size_t t : members) {
    if (t >= poses.size()) throw Error(Errc::invalid_parameter, "build_submap: no pose for frame " + std::to_string(t));
    const Pose ref_from_t = compose(world_to_ref, poses[t]);
    VoxelGrid inner(voxel_size);
    for (const Vec3& p : clouds(t).points) inner.insert(ref_from_t.apply(p));
    for (const VoxelKey& k : inner.keys()) outer.insert(inner.representative(k));
  }
  map.cloud = outer.to_cloud(false);
  return map;
}

IcpTarget::IcpTarget(const PointCloud& cloud, const IcpParams& params)
    : tree_(cloud.points), normals_(cloud.size(), Vec3::Zero()), valid_(cloud.size(), 0) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree_.knn(cloud.points[i], params.normal_neighbors);
    if (nn.size() < 5) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nn) mean += tree_.point(n.index);
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nn) {
      const Vec3 d = tree_.point(n.index) - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    normals_[i] = eig.eigenvectors().col(0);
    valid_[i] = 1;
  }
}

IcpResult icp_align(const PointCloud& source, const IcpTarget& target, const IcpParams& params, const Pose& initial) {
  if (source.size() < params.min_points || target.tree().size() < params.min_points) {
    throw Error(Errc::degenerate_input, "icp_align: clouds have " + std::to_string(source.size()) + " and " +
                                            std::to_string(target.tree().size()) + " points, need " +
                                            std::to_string(params.min_points));
  }
  std::vector<Vec3> src;
  const std::size_t stride =
      params.max_source_points == 0 ? 1 : std::max<std::size_t>(1, source.size() / params.max_source_points);
  for (std::size_t i = 0; i < source.size(); i += stride) src.push_back(source.points[i]);

  IcpResult result;
  result.transform = initial;
  double gate = params.initial_gate;
  bool done = false;

  const auto residual_at = [&](const Pose& T, double g) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Vec3& p : src) {
      const Vec3 q = T.apply(p);
      const auto nb = target.tree().nearest(q, g * g);
      if (!nb || !target.has_normal(nb->index)) continue;
      const double r = target.normal(nb->index).dot(q - target.tree().point(nb->index));
      sum += r * r;
      ++count;
    }
    return count < 6 ? std::numeric_limits<double>::infinity() : std::sqrt(sum / static_cast<double>(count));
  };

  while (!done && result.iterations < params.max_iterations) {
    ++result.iterations;
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    std::size_t count = 0;
    for (const Vec3& p : src) {
      const Vec3 q = result.transform.apply(p);
      const auto nb = target.tree().nearest(q, gate * gate);
      if (!nb || !target.has_normal(nb->index)) continue;
      const Vec3& n = target.normal(nb->index);
      const double r = n.dot(q - target.tree().point(nb->index));
      Eigen::Matrix<double, 6, 1> J;
      J.head<3>() = q.cross(n);
      J.tail<3>() = n;
      H += J * J.transpose();
      g += J * r;
      ++count;
    }
    if (count < 6) break;
    H.diagonal().array() += 1e-9 * std::max(1.0, H.trace());
    const Eigen::Matrix<double, 6, 1> delta = H.ldlt().solve(-g);
    if (!delta.allFinite()) break;

    const Vec3 w = delta.head<3>();
    Pose step;
    if (w.norm() > 0.0) step.rotation = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
    step.translation = delta.tail<3>();
    result.transform = compose(step, result.transform);

    if (delta.norm() < params.update_tolerance) {
      if (gate * 0.5 >= params.min_gate) {
        gate *= 0.5;
      } else {
        done = true;
      }
    }
  }
  result.residual = residual_at(result.transform, gate);
  result.converged = done && result.residual <= params.convergence_residual;
  return result;
}

IcpResult icp_align(const Submap& source, const Submap& target, const IcpParams& params) {
  if (target.cloud.size() < params.min_points) {
    throw Error(Errc::degenerate_input, "icp_align: target submap has too few points");
  }
  return icp_align(source.cloud, IcpTarget(target.cloud, params), params);
}

ClusterCorrection correct_cluster_poses(std::size_t cluster_id, std::span<const Submap> submaps,
                                        std::vector<Pose>& poses, const IcpParams& params) {
  ClusterCorrection out;
  if (submaps.size() < 2) return out;
  const Submap& anchor = submaps.front();
  const IcpTarget target(anchor.cloud, params);
  const Pose w1 = poses[anchor.reference_frame];

  // all alignments read the original poses; updates only touch members of the aligned submap
  std::vector<std::pair<std::size_t, Pose>> updates;
  for (std::size_t n = 1; n < submaps.size(); ++n) {
    const Submap& s = submaps[n];
    const Pose wn = poses[s.reference_frame];
    // initial guess from the (drifted) poses: w_1 <- w_n
    const Pose guess = compose(invert(w1), wn);
    SubclusterCorrection entry{cluster_id, s.subcluster, {}, false};
    ++out.icp_calls;
    try {
      entry.icp = icp_align(s.cloud, target, params, guess);
    } catch (const Error& e) {
      spdlog::warn("cluster {} subcluster {}: {}", cluster_id, s.subcluster, e.what());
    }
    if (entry.icp.converged) {
      entry.applied = true;
      // corrected world pose of member t: w_1 * T(w1<-wn) * T(wn<-t)
      const Pose world_from_wn = compose(w1, entry.icp.transform);
      const Pose wn_inv = invert(wn);
      for (const std::size_t t : s.members) updates.emplace_back(t, compose(world_from_wn, compose(wn_inv, poses[t])));
    } else {
      spdlog::warn("cluster {} subcluster {}: ICP did not converge (residual {:.3f} m), keeping poses", cluster_id,
                   s.subcluster, entry.icp.residual);
    }
    out.entries.push_back(entry);
  }
  for (const auto& [t, p] : updates) poses[t] = p;
  return out;
}

std::vector<Submap> build_cluster_submaps(const TrajectoryCluster& cluster, const FrameCloudProvider& clouds,
                                          std::span<const Pose> poses, const CorrectionParams& params) {
  std::vector<std::vector<std::size_t>> groups = cluster.subclusters;
  std::vector<std::size_t> ids(groups.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;

  std::vector<Submap> maps;
  for (std::size_t i = 0; i < groups.size(); ++i) maps.push_back(build_submap(ids[i], groups[i], clouds, poses, params.map_voxel));

  bool changed = true;
  while (changed && maps.size() > 1) {
    changed = false;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      if (maps[i].cloud.size() >= params.icp.min_points) continue;
      const std::size_t host = i == 0 ? 1 : i - 1;
      std::vector<std::size_t> members = maps[std::min(i, host)].members;
      const auto& other = maps[std::max(i, host)].members;
      members.insert(members.end(), other.begin(), other.end());
      spdlog::warn("subcluster {} has {} map points, folding into subcluster {}", maps[i].subcluster,
                   maps[i].cloud.size(), maps[host].subcluster);
      Submap merged = build_submap(maps[std::min(i, host)].subcluster, members, clouds, poses, params.map_voxel);
      maps[std::min(i, host)] = std::move(merged);
      maps.erase(maps.begin() + static_cast<std::ptrdiff_t>(std::max(i, host)));
      changed = true;
      break;
    }
  }
  return maps;
}

std::string CorrectionReport::to_table() const {
  std::ostringstream out;
  out << "cluster n residual iterations converged\n";
  char buf[128];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%zu %zu %.4f %zu %d\n", e.cluster, e.subcluster, e.icp.residual, e.icp.iterations,
                  e.icp.converged ? 1 : 0);
    out << buf;
  }
  return out.str();
}

std::vector<Pose> correct_poses(const ClusterPartition& partition, std::span<const Pose> poses,
                                const FrameCloudProvider& clouds, const CorrectionParams& params,
                                CorrectionReport* report) {
  std::vector<Pose> corrected(poses.begin(), poses.end());
  CorrectionReport local;
  for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
    const auto& cluster = partition.clusters[c];
    if (cluster.subclusters.size() < 2) continue;
    const auto maps = build_cluster_submaps(cluster, clouds, poses, params);
    auto cc = correct_cluster_poses(c, maps, corrected, params.icp);
    local.icp_calls += cc.icp_calls;
    local.entries.insert(local.entries.end(), cc.entries.begin(), cc.entries.end());
  }
  if (report) *report = std::move(local);
  return corrected;
}

}  // namespace moslabel
