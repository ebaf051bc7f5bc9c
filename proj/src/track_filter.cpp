#include "moslabel/track_filter.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>

#include "moslabel/errors.hpp"

namespace moslabel {

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::pending: return "pending";
    case TrackStatus::confirmed_moving: return "moving";
    case TrackStatus::rejected_static: return "static";
  }
  return "pending";
}

std::vector<IndexRange> Track::gaps() const {
  std::vector<IndexRange> out;
  for (std::size_t k = 1; k < observations.size(); ++k) {
    const std::size_t a = observations[k - 1].frame;
    const std::size_t b = observations[k].frame;
    if (b > a + 1) out.push_back({a + 1, b - 1});
  }
  return out;
}

std::vector<Track> associate_tracks(std::span<const FrameObservations> frames, const TrackParams& params,
                                    std::uint32_t first_id) {
  std::vector<Track> done;
  std::vector<Track> active;
  std::uint32_t next_id = first_id;
  std::optional<std::size_t> previous;

  const auto predict = [](const Track& t, std::size_t frame) {
    const auto& obs = t.observations;
    const TrackObservation& last = obs.back();
    if (obs.size() < 2) return last.centroid;
    const TrackObservation& prev = obs[obs.size() - 2];
    const Vec3 velocity = (last.centroid - prev.centroid) / static_cast<double>(last.frame - prev.frame);
    return Vec3(last.centroid + velocity * static_cast<double>(frame - last.frame));
  };

  for (const FrameObservations& fo : frames) {
    if (previous && fo.frame <= *previous) throw Error(Errc::invalid_parameter, "associate_tracks: frames out of order");
    previous = fo.frame;

    // retire tracks that have been lost for too long
    for (auto it = active.begin(); it != active.end();) {
      if (fo.frame - it->observations.back().frame > params.max_gap + 1) {
        done.push_back(std::move(*it));
        it = active.erase(it);
      } else {
        ++it;
      }
    }

    struct Candidate {
      double distance;
      std::size_t track;
      std::size_t detection;
    };
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < active.size(); ++t) {
      const Vec3 p = predict(active[t], fo.frame);
      for (std::size_t d = 0; d < fo.detections.size(); ++d) {
        const double dist = (fo.detections[d].centroid - p).norm();
        if (dist <= params.max_assoc_dist) candidates.push_back({dist, t, d});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.distance < b.distance; });
    std::vector<bool> track_used(active.size(), false), det_used(fo.detections.size(), false);
    for (const Candidate& c : candidates) {
      if (track_used[c.track] || det_used[c.detection]) continue;
      track_used[c.track] = det_used[c.detection] = true;
      TrackObservation obs = fo.detections[c.detection];
      obs.frame = fo.frame;
      active[c.track].observations.push_back(obs);
    }
    for (std::size_t d = 0; d < fo.detections.size(); ++d) {
      if (det_used[d]) continue;
      Track t;
      t.id = next_id++;
      TrackObservation obs = fo.detections[d];
      obs.frame = fo.frame;
      t.observations.push_back(obs);
      active.push_back(std::move(t));
    }
  }
  for (auto& t : active) done.push_back(std::move(t));
  std::sort(done.begin(), done.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return done;
}

double track_displacement(const Track& track) {
  if (track.observations.empty()) return 0.0;
  Aabb all = track.observations.front().box;
  Vec3 largest = Vec3::Zero();
  for (const auto& o : track.observations) {
    all.expand(o.box.min_corner);
    all.expand(o.box.max_corner);
    largest = largest.cwiseMax(o.box.extent());
  }
  return (all.extent() - largest).cwiseMax(0.0).norm();
}

TrackStatus judge_track(const Track& track, const TrackParams& params) {
  if (track.observations.size() < params.min_track_len) return TrackStatus::rejected_static;
  if (track_displacement(track) < params.min_displacement) return TrackStatus::rejected_static;
  return TrackStatus::confirmed_moving;
}

void judge_tracks(std::span<Track> tracks, const TrackParams& params) {
  for (Track& t : tracks) t.status = judge_track(t, params);
}

std::vector<AugmentedBox> augment_lost_boxes(const Track& track, const TrackParams& params) {
  std::vector<AugmentedBox> out;
  const auto& obs = track.observations;
  for (std::size_t k = 1; k < obs.size(); ++k) {
    const TrackObservation& a = obs[k - 1];
    const TrackObservation& b = obs[k];
    if (b.frame <= a.frame + 1) continue;
    const Vec3 ca = a.box.center();
    const Vec3 cb = b.box.center();
    const Vec3 extent = a.box.extent().cwiseMax(b.box.extent()) + Vec3::Constant(2.0 * params.box_pad);
    for (std::size_t g = a.frame + 1; g < b.frame; ++g) {
      const double lambda = static_cast<double>(g - a.frame) / static_cast<double>(b.frame - a.frame);
      out.push_back({g, Aabb::around((1.0 - lambda) * ca + lambda * cb, extent), track.id, lambda});
    }
  }
  return out;
}

void filter_labels(std::span<ScanAnnotation> annotations, std::span<const Track> tracks,
                   std::span<const AugmentedBox> boxes, const WorldPointsProvider& world_points) {
  std::map<std::size_t, ScanAnnotation*> by_frame;
  for (auto& a : annotations) by_frame[a.frame] = &a;

  std::uint32_t max_track = 0;
  // (frame, original instance) -> track
  std::map<std::pair<std::size_t, std::uint32_t>, const Track*> owner;
  for (const Track& t : tracks) {
    max_track = std::max(max_track, t.id);
    for (const auto& o : t.observations) owner[{o.frame, o.instance}] = &t;
  }

  for (auto& a : annotations) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::uint32_t inst = a.instance[i];
      if (inst == 0) continue;
      const auto it = owner.find({a.frame, inst});
      if (it == owner.end()) {
        a.instance[i] = inst + max_track;
        continue;
      }
      const Track& t = *it->second;
      if (t.status == TrackStatus::rejected_static) a.classes[i] = MosClass::static_;
      a.instance[i] = t.id;
    }
  }

  std::map<std::size_t, std::vector<const AugmentedBox*>> boxes_by_frame;
  for (const auto& b : boxes) {
    if (by_frame.contains(b.frame)) boxes_by_frame[b.frame].push_back(&b);
  }
  for (const auto& [frame, list] : boxes_by_frame) {
    ScanAnnotation& a = *by_frame.at(frame);
    const std::vector<Vec3> pts = world_points(frame);
    if (pts.size() != a.size()) throw Error(Errc::count_mismatch, "filter_labels: world points do not match annotation");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (a.classes[i] == MosClass::dynamic) continue;
      for (const AugmentedBox* b : list) {
        if (point_in_box(pts[i], b->box)) {
          a.classes[i] = MosClass::dynamic;
          a.instance[i] = b->track;
          break;
        }
      }
    }
  }
}

TrackFilterResult run_track_filter(std::span<FrameDetection> detections, const WorldPointsProvider& world_points,
                                   const TrackParams& params, std::uint32_t first_track_id) {
  std::vector<FrameObservations> frames;
  for (const FrameDetection& d : detections) {
    FrameObservations fo;
    fo.frame = d.annotation.frame;
    for (std::size_t k = 0; k < d.instances.size(); ++k) {
      if (d.verdicts[k].verdict != Verdict::dynamic) continue;
      const Instance& inst = d.instances[k];
      fo.detections.push_back({fo.frame, inst.id, inst.centroid, inst.box});
    }
    frames.push_back(std::move(fo));
  }
  std::sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });

  TrackFilterResult result;
  result.tracks = associate_tracks(frames, params, first_track_id);
  if (params.judge) {
    judge_tracks(result.tracks, params);
  } else {
    for (Track& t : result.tracks) t.status = TrackStatus::confirmed_moving;
  }
  if (params.augment) {
    for (const Track& t : result.tracks) {
      if (t.status != TrackStatus::confirmed_moving) continue;
      auto boxes = augment_lost_boxes(t, params);
      result.boxes.insert(result.boxes.end(), boxes.begin(), boxes.end());
    }
  }
  std::vector<ScanAnnotation> annotations;
  annotations.reserve(detections.size());
  for (auto& d : detections) annotations.push_back(std::move(d.annotation));
  filter_labels(annotations, result.tracks, result.boxes, world_points);
  for (std::size_t k = 0; k < detections.size(); ++k) detections[k].annotation = std::move(annotations[k]);

  result.next_track_id = first_track_id;
  for (const Track& t : result.tracks) result.next_track_id = std::max(result.next_track_id, t.id + 1);
  return result;
}

std::string track_dump(std::span<const Track> tracks) {
  std::string out = "track_id frame cx cy cz status\n";
  char buf[160];
  for (const Track& t : tracks) {
    for (const auto& o : t.observations) {
      std::snprintf(buf, sizeof buf, "%u %zu %.3f %.3f %.3f %s\n", t.id, o.frame, o.centroid.x(), o.centroid.y(),
                    o.centroid.z(), to_string(t.status));
      out += buf;
    }
  }
  return out;
}

}  // namespace moslabel
