#include <doctest.h>

#include <map>
#include <random>

#include "moslabel/errors.hpp"
#include "moslabel/sync.hpp"

using namespace moslabel;

namespace {

/// Manifest whose scans live in memory; every non-reference sensor gets the given timestamps.
struct MemorySequence {
  SequenceManifest manifest;
  std::map<std::pair<SensorId, std::size_t>, PointCloud> clouds;

  ScanLoader loader() const {
    return [this](SensorId id, std::size_t f) { return clouds.at({id, f}); };
  }
};

MemorySequence single_points() {
  MemorySequence s;
  for (const SensorId id : kAllSensors) {
    s.manifest.extrinsics[index_of(id)] = Pose::identity();
    s.manifest.sensor(id).push_back({"mem", 0.0, Pose::identity(), std::nullopt});
    PointCloud c;
    c.push_back(Vec3(double(index_of(id)), 0, 0), 0.0f);
    s.clouds[{id, 0}] = c;
  }
  return s;
}

}  // namespace

TEST_CASE("nearest timestamp") {
  const std::vector<double> a = {9.40, 9.95, 10.55};
  CHECK(nearest_timestamp(a, 10.0) == 1);
  const std::vector<double> b = {9.90, 10.10};
  CHECK(nearest_timestamp(b, 10.0) == 0);
}

TEST_CASE("match_frames") {
  SequenceManifest m;
  for (const SensorId id : kAllSensors) m.extrinsics[index_of(id)] = Pose::identity();
  m.sensor(SensorId::ouster).push_back({"o", 10.0, Pose::identity(), std::nullopt});
  for (const double t : {9.40, 9.95, 10.55}) m.sensor(SensorId::aeva).push_back({"a", t, Pose::identity(), {}});
  for (const double t : {9.90, 10.10}) m.sensor(SensorId::livox).push_back({"l", t, Pose::identity(), {}});
  m.sensor(SensorId::velodyne).push_back({"v", 10.05, Pose::identity(), {}});

  FrameQuadruple q = match_frames(m, 0);
  CHECK(q.frames[index_of(SensorId::aeva)] == 1);
  CHECK(q.timestamps[index_of(SensorId::aeva)] == 9.95);
  CHECK(q.frames[index_of(SensorId::livox)] == 0);
  CHECK(q.frames[index_of(SensorId::velodyne)] == 0);

  m.sensor(SensorId::velodyne)[0].timestamp = 10.30;
  try {
    match_frames(m, 0);
    FAIL("expected sync gap");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::sync_gap);
  }
}

TEST_CASE("merge_scans concatenates in fixed sensor order") {
  const MemorySequence s = single_points();
  const SyncedScan merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader());
  REQUIRE(merged.cloud.size() == 4);
  for (const SensorId id : kAllSensors) {
    const std::size_t i = index_of(id);
    CHECK(merged.provenance[i] == PointSource{id, 0, 0});
    CHECK(merged.cloud.points[i].x() == double(i));
  }
}

TEST_CASE("empty sensor scan") {
  MemorySequence s = single_points();
  s.clouds[{SensorId::livox, 0}] = PointCloud{};
  const SyncedScan merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader());
  CHECK(merged.cloud.size() == 3);
  CHECK(merged.sources[index_of(SensorId::livox)].point_count == 0);
}

TEST_CASE("extrinsics move points into the reference frame") {
  MemorySequence s = single_points();
  s.manifest.extrinsics[index_of(SensorId::velodyne)] = Pose::translate(0, 0, 0.5);
  s.clouds[{SensorId::velodyne, 0}].points[0] = Vec3::Zero();
  const SyncedScan merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader());
  CHECK(merged.cloud.points[3] == Vec3(0, 0, 0.5));
}

TEST_CASE("ego-motion compensation chains the sensor's own pose") {
  MemorySequence s = single_points();
  // Livox scan taken 0.05 s later while the body moved 0.5 m forward
  s.manifest.sensor(SensorId::livox)[0] = {"mem", 0.05, Pose::translate(0.5, 0, 0), std::nullopt};
  s.clouds[{SensorId::livox, 0}].points[0] = Vec3(10, 0, 0);
  SyncedScan merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader());
  CHECK((merged.cloud.points[1] - Vec3(10.5, 0, 0)).norm() < 1e-12);

  SyncOptions raw;
  raw.compensate_ego_motion = false;
  merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader(), raw);
  CHECK(merged.cloud.points[1] == Vec3(10, 0, 0));
}

TEST_CASE("split_labels routes labels by provenance") {
  std::mt19937_64 rng(23);
  MemorySequence s = single_points();
  for (const SensorId id : kAllSensors) {
    PointCloud c;
    for (int i = 0; i < 10 + int(index_of(id)); ++i) c.push_back(Vec3(i, 0, 0), 0.0f);
    s.clouds[{id, 0}] = c;
  }
  const SyncedScan merged = merge_scans(match_frames(s.manifest, 0), s.manifest, s.loader());
  CHECK(merged.cloud.size() == 10 + 11 + 12 + 13);

  std::vector<LabelValue> all_static(merged.cloud.size(), LabelValue::make(MosClass::static_));
  SplitLabels split = split_labels(merged, all_static);
  for (const SensorId id : kAllSensors) {
    for (const auto l : split.labels[index_of(id)]) CHECK(l.mos_class() == MosClass::static_);
  }

  std::vector<LabelValue> labels = all_static;
  std::size_t target = 0;
  while (!(merged.provenance[target].sensor == SensorId::velodyne && merged.provenance[target].index == 7)) ++target;
  labels[target] = LabelValue::make(MosClass::dynamic, 4);
  split = split_labels(merged, labels);
  CHECK(split.labels[index_of(SensorId::velodyne)][7] == LabelValue::make(MosClass::dynamic, 4));
  CHECK(merge_labels(merged, split) == labels);

  labels.pop_back();
  CHECK_THROWS_AS(split_labels(merged, labels), Error);
}
