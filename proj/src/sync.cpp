#include "moslabel/sync.hpp"

#include <algorithm>
#include <cmath>

#include "moslabel/errors.hpp"

namespace moslabel {

ScanLoader disk_scan_loader(const SequenceManifest& manifest) {
  return [&manifest](SensorId id, std::size_t frame) { return read_scan(manifest.sensor(id).at(frame).path); };
}

std::size_t nearest_timestamp(std::span<const double> sorted, double t) {
  if (sorted.empty()) throw Error(Errc::empty_input, "no timestamps to match against");
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  if (it == sorted.begin()) return 0;
  if (it == sorted.end()) return sorted.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - sorted.begin());
  const std::size_t lo = hi - 1;
  // Compare the two gaps at a common scale so that symmetric candidates tie exactly.
  const double d_lo = t - sorted[lo];
  const double d_hi = sorted[hi] - t;
  return d_hi < d_lo - 1e-12 * std::max(1.0, std::abs(t)) ? hi : lo;
}

FrameQuadruple match_frames(const SequenceManifest& manifest, std::size_t ref_frame, const SyncOptions& options) {
  const auto& ref_list = manifest.sensor(manifest.reference);
  if (ref_frame >= ref_list.size()) {
    throw Error(Errc::invalid_parameter, "reference frame " + std::to_string(ref_frame) + " out of range");
  }
  FrameQuadruple quad;
  quad.reference_timestamp = ref_list[ref_frame].timestamp;
  for (auto id : kAllSensors) {
    const auto& list = manifest.sensor(id);
    if (id == manifest.reference) {
      quad.frames[index_of(id)] = ref_frame;
      quad.timestamps[index_of(id)] = quad.reference_timestamp;
      continue;
    }
    if (list.empty()) {
      throw Error(Errc::sync_gap, std::string(sensor_name(id)) + ": no scans to synchronize");
    }
    std::vector<double> ts(list.size());
    std::transform(list.begin(), list.end(), ts.begin(), [](const ScanEntry& e) { return e.timestamp; });
    const std::size_t best = nearest_timestamp(ts, quad.reference_timestamp);
    const double gap = std::abs(ts[best] - quad.reference_timestamp);
    if (gap > options.max_sync_gap) {
      throw Error(Errc::sync_gap, std::string(sensor_name(id)) + ": nearest scan is " + std::to_string(gap) +
                                      " s from reference frame " + std::to_string(ref_frame));
    }
    quad.frames[index_of(id)] = best;
    quad.timestamps[index_of(id)] = ts[best];
  }
  return quad;
}

SyncedScan merge_scans(const FrameQuadruple& quad, const SequenceManifest& manifest, const ScanLoader& loader,
                       const SyncOptions& options) {
  const std::size_t ref_frame = quad.frames[index_of(manifest.reference)];
  const auto& ref_entry = manifest.sensor(manifest.reference).at(ref_frame);

  SyncedScan out;
  out.frame = ref_frame;
  out.timestamp = ref_entry.timestamp;
  out.body_pose = ref_entry.pose;
  const Pose ref_inv = invert(ref_entry.pose);

  std::array<PointCloud, kSensorCount> clouds;
  std::size_t total = 0;
  for (auto id : kAllSensors) {
    const std::size_t s = index_of(id);
    clouds[s] = loader(id, quad.frames[s]);
    total += clouds[s].size();
  }
  out.cloud.reserve(total);
  out.provenance.reserve(total);

  for (auto id : kAllSensors) {
    const std::size_t s = index_of(id);
    Pose extrinsic = Pose::identity();
    if (const auto& e = manifest.extrinsics[s]) {
      extrinsic = *e;
    } else if (id != manifest.reference) {
      throw Error(Errc::configuration, std::string("missing extrinsic for sensor ") + std::string(sensor_name(id)));
    }
    Pose to_ref = extrinsic;
    if (options.compensate_ego_motion && id != manifest.reference) {
      const Pose& sensor_body = manifest.sensor(id).at(quad.frames[s]).pose;
      to_ref = compose(ref_inv, compose(sensor_body, extrinsic));
    }
    const PointCloud& c = clouds[s];
    for (std::size_t i = 0; i < c.size(); ++i) {
      out.cloud.push_back(to_ref.apply(c.points[i]), c.has_intensities() ? c.intensities[i] : 0.0f);
      out.provenance.push_back({id, static_cast<std::uint32_t>(quad.frames[s]), static_cast<std::uint32_t>(i)});
    }
    out.sources[s] = {quad.frames[s], c.size()};
  }
  return out;
}

SplitLabels split_labels(const SyncedScan& synced, std::span<const LabelValue> labels) {
  if (labels.size() != synced.provenance.size()) {
    throw Error(Errc::count_mismatch, "split_labels: " + std::to_string(labels.size()) + " labels for " +
                                          std::to_string(synced.provenance.size()) + " merged points");
  }
  SplitLabels out;
  for (auto id : kAllSensors) {
    const std::size_t s = index_of(id);
    out.frames[s] = synced.sources[s].frame;
    out.labels[s].assign(synced.sources[s].point_count, LabelValue::make(MosClass::unlabeled));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& src = synced.provenance[i];
    out.labels[index_of(src.sensor)].at(src.index) = labels[i];
  }
  return out;
}

std::vector<LabelValue> merge_labels(const SyncedScan& synced, const SplitLabels& split) {
  std::vector<LabelValue> out;
  out.reserve(synced.provenance.size());
  for (const auto& src : synced.provenance) {
    out.push_back(split.labels[index_of(src.sensor)].at(src.index));
  }
  return out;
}

}  // namespace moslabel
