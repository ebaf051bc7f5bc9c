#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moslabel/dataset_io.hpp"
#include "moslabel/geometry.hpp"
#include "moslabel/labels.hpp"
#include "moslabel/mos_detect.hpp"
#include "moslabel/traj_cluster.hpp"

namespace moslabel {

enum class ScanPattern { spinning, grid, rosette };

struct SensorProfile {
  SensorId id = SensorId::ouster;
  ScanPattern pattern = ScanPattern::spinning;
  double h_min_deg = -180.0;
  double h_max_deg = 180.0;
  double v_min_deg = -11.25;
  double v_max_deg = 11.25;
  std::size_t rows = 128;     // channels for spinning, grid rows
  std::size_t columns = 1024;  // grid columns; rosette sample count
  double min_range = 0.5;
  double max_range = 120.0;
  double time_offset = 0.0;  // seconds after the reference sweep
  Pose extrinsic;            // sensor frame into reference frame
};

/// Defaults standing in for the four heterogeneous sensors: sparse and dense spinning, grid and rosette solid-state.
SensorProfile default_profile(SensorId id);

/// Bounded planar disc (infinite when radius is absent).
struct ScenePlane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  std::optional<double> radius;
};

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  std::optional<double> yaw;
};

struct MoverSpec {
  Vec3 extent = Vec3(4.5, 1.8, 1.5);
  std::vector<TimedPoint> waypoints;  // bottom-center positions
  std::size_t first_frame = 0;
  std::size_t last_frame = static_cast<std::size_t>(-1);

  /// Axis-aligned box at time t, held at the end waypoints outside their span.
  Aabb box_at(double t) const;
};

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

struct SceneSpec {
  std::string name = "synthetic";
  std::uint64_t seed = 1;
  double frame_rate = 10.0;
  Vec3 bounds_min = Vec3(-200, -200, -10);
  Vec3 bounds_max = Vec3(200, 200, 50);
  std::vector<ScenePlane> planes;  // an infinite ground at z = 0 is added when empty
  std::vector<Aabb> boxes;
  std::vector<MoverSpec> movers;
  std::vector<TimedPoint> ego;       // reference-sensor positions over time
  std::vector<TimeWindow> recording;  // empty: the full ego time span
  std::array<SensorProfile, kSensorCount> sensors;
  double range_noise = 0.0;  // Gaussian sigma, meters

  SceneSpec();
  /// Throws a validation error for impossible specs.
  void validate() const;

  std::vector<double> frame_times() const;
  Pose ego_pose(double t) const;
};

SceneSpec read_scene_spec(const fs::path& path);
SceneSpec parse_scene_spec(const std::string& json_text);

struct SensorFrame {
  double timestamp = 0.0;
  Pose body_pose;  // reference pose at `timestamp`
  PointCloud cloud;
  std::vector<LabelValue> labels;
  std::vector<std::int32_t> mover;  // -1 for static surfaces
  std::vector<double> hit_range;
};

/// One sensor's scan at one frame; deterministic under the spec seed.
SensorFrame generate_sensor_frame(const SceneSpec& spec, SensorId sensor, std::size_t frame);

struct GroundTruthBundle {
  std::vector<double> reference_times;
  std::vector<Pose> reference_poses;
  std::array<std::vector<SensorFrame>, kSensorCount> frames;
};

GroundTruthBundle generate_scene(const SceneSpec& spec);

/// Writes scans, gt labels, manifest.json and gt_poses.txt under `dir`; returns the manifest.
SequenceManifest write_bundle(const SceneSpec& spec, const fs::path& dir);

struct PoseCorruption {
  Vec3 direction = Vec3::UnitX();
  double drift = 0.0;
  double ramp_begin = 0.0;
  double ramp_end = 0.0;

  Vec3 offset_at(double t) const;
  Pose apply(const Pose& pose, double t) const;
};

/// Drift appears just before the earliest frame that opens a second subcluster of any cluster, then stays,
/// so every revisiting subcluster carries one rigid offset.
PoseCorruption plan_corruption(std::span<const Pose> poses, std::span<const double> times, double drift,
                               std::uint64_t seed, const ClusterParams& clustering = {});
std::vector<Pose> corrupt_poses(std::span<const Pose> poses, std::span<const double> times,
                                const PoseCorruption& corruption);
void corrupt_manifest(SequenceManifest& manifest, const PoseCorruption& corruption);

struct DetectionEdit {
  enum class Kind { dropped, injected };
  Kind kind = Kind::dropped;
  std::size_t frame = 0;
  std::uint32_t instance = 0;
};

struct DegradeOptions {
  std::vector<std::size_t> drop_frames;
  std::size_t inject_static_fp = 0;
  std::vector<std::pair<std::size_t, std::uint32_t>> inject_explicit;  // (frame, instance)
  std::uint64_t seed = 1;
};

/// Drops every dynamic instance at the chosen frames and flips static instances to dynamic.
std::vector<DetectionEdit> degrade_detections(std::span<FrameDetection> detections, const DegradeOptions& options);

}  // namespace moslabel
