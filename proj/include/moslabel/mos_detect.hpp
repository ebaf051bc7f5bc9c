#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moslabel/geometry.hpp"
#include "moslabel/labels.hpp"
#include "moslabel/pose_correction.hpp"
#include "moslabel/voxel.hpp"

namespace moslabel {

struct GroundParams {
  double cell_size = 10.0;
  double seed_fraction = 0.3;  // lowest share of a cell's points used to seed the plane
  double distance_threshold = 0.25;
  std::size_t min_cell_points = 10;
  double max_tilt = 30.0 * std::numbers::pi / 180.0;
  int refine_iterations = 2;
};

/// Per-point ground flag from region-wise plane fits.
std::vector<std::uint8_t> segment_ground(const PointCloud& scan, const GroundParams& params = {});

struct Instance {
  std::uint32_t id = 0;  // 1-based within a scan
  std::vector<std::uint32_t> indices;
  Vec3 centroid = Vec3::Zero();
  Aabb box;

  std::size_t point_count() const { return indices.size(); }
};

struct InstanceParams {
  double voxel_size = 0.5;
  std::size_t min_points = 10;
  double max_diagonal = 15.0;
};

/// Connected components of non-ground voxels (26-neighbourhood); ids follow the lowest member index.
std::vector<Instance> extract_instances(const PointCloud& scan, std::span<const std::uint8_t> ground,
                                        const InstanceParams& params = {});

enum class CoverageMode { visibility, fov };

struct StaticMapParams {
  double voxel_size = 0.5;
  std::size_t min_coverage = 3;
  double rho_dynamic = 0.35;
  CoverageMode coverage = CoverageMode::visibility;
  int hit_neighborhood = 1;  // voxels of dilation when counting hits
  double max_range = 100.0;
  double bin_size = 0.5 * std::numbers::pi / 180.0;
  double min_elevation = -45.0 * std::numbers::pi / 180.0;
  double max_elevation = 45.0 * std::numbers::pi / 180.0;
  double visibility_tolerance = 0.5;  // meters a return may fall short of the voxel and still see it
};

struct VoxelEvidence {
  std::size_t hits = 0;
  std::size_t coverage = 0;
};

/// Voxel persistence over the frames of one cluster, in world coordinates.
class StaticMapModel {
 public:
  explicit StaticMapModel(const StaticMapParams& params = {});

  /// `scan` is in the body frame of `pose`; frames must be added in increasing order. Ground points
  /// (non-zero `ground` entries) only feed visibility, not occupancy.
  void add_frame(std::size_t frame, const PointCloud& scan, const Pose& pose, std::span<const std::uint8_t> ground = {});

  const StaticMapParams& params() const { return params_; }
  std::size_t frame_count() const { return frames_.size(); }
  std::size_t voxel_count() const { return hits_.size(); }
  VoxelKey key_of(const Vec3& world) const { return voxel_key(world, params_.voxel_size); }

  /// Frames whose returns landed in the voxel itself.
  std::size_t direct_hits(const VoxelKey& key) const;
  VoxelEvidence evidence(const VoxelKey& key) const;
  bool covers(std::size_t frame_slot, const Vec3& world) const;

 private:
  struct FrameView {
    std::size_t frame = 0;
    Pose world_to_body;
    std::vector<float> max_range;  // per angular bin, 0 when empty
  };

  std::size_t bin_of(double azimuth, double elevation) const;

  StaticMapParams params_;
  std::size_t azimuth_bins_ = 0;
  std::size_t elevation_bins_ = 0;
  std::vector<FrameView> frames_;
  VoxelMap<std::vector<std::uint32_t>> hits_;  // voxel -> sorted frame slots
  mutable VoxelMap<VoxelEvidence> evidence_cache_;
};

StaticMapModel build_static_map(std::span<const std::size_t> frames, const FrameCloudProvider& clouds,
                                std::span<const Pose> poses, const StaticMapParams& params = {});

enum class Verdict { static_, dynamic, unlabeled };
const char* to_string(Verdict v);

struct InstanceVerdict {
  Verdict verdict = Verdict::unlabeled;
  double rho = 0.0;
  std::size_t eligible_voxels = 0;
};

/// `world_points` is the scan already moved into world coordinates.
InstanceVerdict classify_instance(const Instance& instance, std::span<const Vec3> world_points,
                                  const StaticMapModel& map);

struct ScanAnnotation {
  std::size_t frame = 0;
  std::vector<MosClass> classes;
  std::vector<std::uint32_t> instance;  // 0 = none

  std::size_t size() const { return classes.size(); }
  std::size_t count(MosClass c) const;
  std::vector<LabelValue> to_labels() const;
  static ScanAnnotation from_labels(std::size_t frame, std::span<const LabelValue> labels);
};

/// Ground and background points become static; instance points take their verdict.
ScanAnnotation annotate_scan(std::size_t frame, std::size_t point_count, std::span<const Instance> instances,
                             std::span<const Verdict> verdicts);

struct DetectParams {
  GroundParams ground;
  InstanceParams instance;
  StaticMapParams map;
};

struct FrameDetection {
  ScanAnnotation annotation;
  std::vector<Instance> instances;  // world-frame centroids and boxes
  std::vector<InstanceVerdict> verdicts;
};

/// Full detection over one cluster: map from all member frames, then per-frame annotation.
std::vector<FrameDetection> detect_cluster(std::span<const std::size_t> frames, const FrameCloudProvider& clouds,
                                           std::span<const Pose> poses, const DetectParams& params = {});

}  // namespace moslabel
