#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "moslabel/dataset_io.hpp"

namespace moslabel {

struct SyncOptions {
  double max_sync_gap = 0.15;  // seconds
  /// Chain each sensor's own pose with the reference pose to undo ego-motion between timestamps.
  bool compensate_ego_motion = true;
};

/// Nearest-in-time frame of every sensor for one reference frame.
struct FrameQuadruple {
  double reference_timestamp = 0.0;
  std::array<std::size_t, kSensorCount> frames{};
  std::array<double, kSensorCount> timestamps{};
};

struct PointSource {
  SensorId sensor = SensorId::ouster;
  std::uint32_t frame = 0;
  std::uint32_t index = 0;

  friend bool operator==(const PointSource&, const PointSource&) = default;
};

struct SourceScan {
  std::size_t frame = 0;
  std::size_t point_count = 0;
};

/// Four sensors merged into the reference frame, with per-point provenance.
struct SyncedScan {
  std::size_t frame = 0;
  double timestamp = 0.0;
  PointCloud cloud;
  std::vector<PointSource> provenance;
  /// Reference (body) pose at the reference timestamp.
  Pose body_pose;
  std::array<SourceScan, kSensorCount> sources{};
};

using ScanLoader = std::function<PointCloud(SensorId, std::size_t)>;

ScanLoader disk_scan_loader(const SequenceManifest& manifest);

FrameQuadruple match_frames(const SequenceManifest& manifest, std::size_t ref_frame, const SyncOptions& options = {});

/// Nearest timestamp in a sorted list; ties go to the earlier entry.
std::size_t nearest_timestamp(std::span<const double> sorted, double t);

SyncedScan merge_scans(const FrameQuadruple& quad, const SequenceManifest& manifest, const ScanLoader& loader,
                       const SyncOptions& options = {});

/// Labels routed back to each contributing source scan.
struct SplitLabels {
  std::array<std::size_t, kSensorCount> frames{};
  std::array<std::vector<LabelValue>, kSensorCount> labels;
};

SplitLabels split_labels(const SyncedScan& synced, std::span<const LabelValue> labels);
/// Inverse of split_labels: gathers labels back into merged order.
std::vector<LabelValue> merge_labels(const SyncedScan& synced, const SplitLabels& split);

}  // namespace moslabel
