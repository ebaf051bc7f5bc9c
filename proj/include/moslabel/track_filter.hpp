#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "moslabel/geometry.hpp"
#include "moslabel/mos_detect.hpp"
#include "moslabel/traj_cluster.hpp"

namespace moslabel {

struct TrackObservation {
  std::size_t frame = 0;
  std::uint32_t instance = 0;
  Vec3 centroid = Vec3::Zero();
  Aabb box;
};

/// Detections of one frame; frames are fed in increasing order.
struct FrameObservations {
  std::size_t frame = 0;
  std::vector<TrackObservation> detections;
};

enum class TrackStatus { pending, confirmed_moving, rejected_static };
const char* to_string(TrackStatus s);

struct Track {
  std::uint32_t id = 0;
  std::vector<TrackObservation> observations;
  TrackStatus status = TrackStatus::pending;

  /// Frame ranges strictly between consecutive observations.
  std::vector<IndexRange> gaps() const;
};

struct TrackParams {
  double max_assoc_dist = 2.0;
  std::size_t max_gap = 5;
  double min_displacement = 1.0;
  std::size_t min_track_len = 3;
  double box_pad = 0.2;
  bool judge = true;
  bool augment = true;
};

std::vector<Track> associate_tracks(std::span<const FrameObservations> frames, const TrackParams& params = {},
                                    std::uint32_t first_id = 1);

/// Motion of the object rather than of its visible part: per-axis span of all boxes minus the largest single box.
double track_displacement(const Track& track);
TrackStatus judge_track(const Track& track, const TrackParams& params = {});
void judge_tracks(std::span<Track> tracks, const TrackParams& params = {});

struct AugmentedBox {
  std::size_t frame = 0;
  Aabb box;
  std::uint32_t track = 0;
  double lambda = 0.0;
};

std::vector<AugmentedBox> augment_lost_boxes(const Track& track, const TrackParams& params = {});

/// World coordinates of a frame's points, in annotation order.
using WorldPointsProvider = std::function<std::vector<Vec3>(std::size_t frame)>;

/// Applies track verdicts and augmented boxes, then renumbers instances: tracked points carry their track id and
/// every other instance is shifted above the largest track id.
void filter_labels(std::span<ScanAnnotation> annotations, std::span<const Track> tracks,
                   std::span<const AugmentedBox> boxes, const WorldPointsProvider& world_points);

struct TrackFilterResult {
  std::vector<Track> tracks;
  std::vector<AugmentedBox> boxes;
  std::uint32_t next_track_id = 1;
};

/// Tracking stage for one cluster; annotations inside `detections` are refined in place.
TrackFilterResult run_track_filter(std::span<FrameDetection> detections, const WorldPointsProvider& world_points,
                                   const TrackParams& params = {}, std::uint32_t first_track_id = 1);

/// Rows `track_id frame cx cy cz status`.
std::string track_dump(std::span<const Track> tracks);

}  // namespace moslabel
