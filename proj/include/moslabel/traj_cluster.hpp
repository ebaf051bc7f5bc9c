#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "moslabel/geometry.hpp"

namespace moslabel {

struct TrajectoryFrame {
  std::size_t index = 0;
  Pose pose;
  double timestamp = 0.0;
  double yaw = 0.0;

  Vec3 position() const { return pose.translation; }
};

/// Builds contiguous frames 0..n-1 with cached yaw; timestamps must be strictly increasing.
std::vector<TrajectoryFrame> make_trajectory(std::span<const Pose> poses, std::span<const double> timestamps);

/// Inclusive frame-index range.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

enum class ClusterKind { intersection, revisit, linear };
const char* to_string(ClusterKind kind);

struct TrajectoryCluster {
  ClusterKind kind = ClusterKind::linear;
  std::vector<std::size_t> frames;                    // sorted
  std::vector<std::vector<std::size_t>> subclusters;  // maximal consecutive runs, by first index
};

struct ClusterPartition {
  std::vector<TrajectoryCluster> clusters;
  std::vector<std::size_t> cluster_of;     // per frame
  std::vector<std::size_t> subcluster_of;  // per frame, index within its cluster

  std::size_t frame_count() const { return cluster_of.size(); }
  /// Rebuilds the per-frame lookups and subclusters from `clusters`.
  void reindex(std::size_t frame_count);
  /// Throws unless the clusters are disjoint, exhaustive and correctly decomposed.
  void validate(std::size_t frame_count) const;

  /// Text table: one `frame_index cluster_id subcluster_id` row per frame, kinds in `#` comments.
  std::string to_table() const;
  static ClusterPartition from_table(const std::string& text);
};

struct ClusterParams {
  std::size_t yaw_window = 20;
  double yaw_threshold = 30.0 * std::numbers::pi / 180.0;
  double revisit_radius = 10.0;
  double min_time_gap = 60.0;
  std::size_t min_linear_len = 100;
};

std::vector<IndexRange> detect_turn_regions(std::span<const TrajectoryFrame> frames, std::size_t window,
                                            double yaw_threshold);

std::vector<std::vector<std::size_t>> detect_revisits(std::span<const TrajectoryFrame> frames, double radius,
                                                      double min_time_gap);

/// Frames where two passes separated by at least `min_time_gap` cross at an angle above `yaw_threshold`.
std::vector<std::vector<std::size_t>> detect_crossings(std::span<const TrajectoryFrame> frames, double radius,
                                                       double min_time_gap, double yaw_threshold);

std::vector<std::vector<std::size_t>> decompose_subclusters(std::span<const std::size_t> frames);

ClusterPartition cluster_trajectory(std::span<const TrajectoryFrame> frames, const ClusterParams& params = {});

}  // namespace moslabel
