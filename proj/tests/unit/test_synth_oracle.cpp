#include <doctest.h>

#include <cmath>
#include <numbers>

#include "moslabel/errors.hpp"
#include "moslabel/synth_oracle.hpp"

using namespace moslabel;

namespace {

SceneSpec small_scene() {
  SceneSpec s;
  s.planes.push_back({Vec3::Zero(), Vec3::UnitZ(), std::nullopt});
  s.ego = {{0.0, Vec3(0, 0, 1.8), std::nullopt}, {2.0, Vec3(10, 0, 1.8), std::nullopt}};
  for (auto& p : s.sensors) {
    p.rows = std::min<std::size_t>(p.rows, 16);
    p.columns = std::min<std::size_t>(p.columns, 180);
  }
  return s;
}

double surface_distance(const Vec3& p, const Aabb& b) {
  // distance to the nearest face for points inside, to the box for points outside
  const Vec3 out = (b.min_corner - p).cwiseMax(p - b.max_corner).cwiseMax(0.0);
  if (out.norm() > 0) return out.norm();
  const Vec3 in = (p - b.min_corner).cwiseMin(b.max_corner - p);
  return in.minCoeff();
}

Vec3 world_of(const SceneSpec& spec, SensorId id, const SensorFrame& f, const Vec3& p) {
  return compose(f.body_pose, spec.sensors[index_of(id)].extrinsic).apply(p);
}

}  // namespace

TEST_CASE("empty scene is all static and on the ground") {
  const SceneSpec s = small_scene();
  for (const SensorId id : kAllSensors) {
    const SensorFrame f = generate_sensor_frame(s, id, 3);
    REQUIRE(f.cloud.size() > 0);
    CHECK(f.labels.size() == f.cloud.size());
    const auto& prof = s.sensors[index_of(id)];
    for (std::size_t i = 0; i < f.cloud.size(); ++i) {
      CHECK(f.labels[i].raw == LabelValue::make(MosClass::static_).raw);
      CHECK(f.mover[i] == -1);
      CHECK(std::abs(world_of(s, id, f, f.cloud.points[i]).z()) < 1e-6);
      CHECK(f.hit_range[i] >= prof.min_range);
      CHECK(f.hit_range[i] <= prof.max_range);
      CHECK(f.cloud.points[i].norm() == doctest::Approx(f.hit_range[i]));
    }
  }
}

TEST_CASE("mover points are dynamic and lie on the mover box") {
  SceneSpec s = small_scene();
  MoverSpec m;
  m.extent = Vec3(4, 2, 1.5);
  m.waypoints = {{0.0, Vec3(20, -2, 0.2), std::nullopt}, {2.0, Vec3(20, 2, 0.2), std::nullopt}};
  s.movers.push_back(m);
  std::size_t seen = 0;
  for (std::size_t frame = 0; frame < s.frame_times().size(); frame += 5) {
    const SensorFrame f = generate_sensor_frame(s, SensorId::ouster, frame);
    const Aabb box = m.box_at(f.timestamp);
    for (std::size_t i = 0; i < f.cloud.size(); ++i) {
      if (f.mover[i] != 0) continue;
      ++seen;
      CHECK(f.labels[i].mos_class() == MosClass::dynamic);
      CHECK(f.labels[i].instance_id() == 1);
      CHECK(surface_distance(world_of(s, SensorId::ouster, f, f.cloud.points[i]), box) < 1e-6);
    }
  }
  CHECK(seen > 0);

  // outside its active frame range the mover is invisible
  s.movers[0].first_frame = 100;
  s.movers[0].last_frame = 200;
  const SensorFrame f = generate_sensor_frame(s, SensorId::ouster, 0);
  for (const auto mv : f.mover) CHECK(mv == -1);
}

TEST_CASE("mover box interpolation") {
  MoverSpec m;
  m.extent = Vec3(2, 2, 2);
  m.waypoints = {{1.0, Vec3(0, 0, 0), std::nullopt}, {3.0, Vec3(10, 0, 0), std::nullopt}};
  CHECK(m.box_at(2.0).center().isApprox(Vec3(5, 0, 1)));
  CHECK(m.box_at(0.0).center().isApprox(Vec3(0, 0, 1)));
  CHECK(m.box_at(9.0).center().isApprox(Vec3(10, 0, 1)));
}

TEST_CASE("solid-state sensors stay inside their field of view") {
  const SceneSpec s = small_scene();
  for (const SensorId id : {SensorId::aeva, SensorId::livox}) {
    const auto& prof = s.sensors[index_of(id)];
    const SensorFrame f = generate_sensor_frame(s, id, 0);
    REQUIRE(f.cloud.size() > 0);
    for (const Vec3& p : f.cloud.points) {
      const double az = std::atan2(p.y(), p.x()) * 180.0 / std::numbers::pi;
      const double el = std::asin(p.z() / p.norm()) * 180.0 / std::numbers::pi;
      CHECK(az >= prof.h_min_deg - 1e-6);
      CHECK(az <= prof.h_max_deg + 1e-6);
      CHECK(el >= prof.v_min_deg - 1e-6);
      CHECK(el <= prof.v_max_deg + 1e-6);
    }
  }
}

TEST_CASE("generation is deterministic under the seed") {
  SceneSpec s = small_scene();
  s.range_noise = 0.02;
  const auto a = generate_sensor_frame(s, SensorId::aeva, 4);
  const auto b = generate_sensor_frame(s, SensorId::aeva, 4);
  CHECK(a.cloud.points == b.cloud.points);
  s.seed = 99;
  const auto c = generate_sensor_frame(s, SensorId::aeva, 4);
  CHECK(a.cloud.points != c.cloud.points);
}

TEST_CASE("scene validation") {
  SceneSpec s = small_scene();
  s.ego.clear();
  CHECK_THROWS_AS(s.validate(), Error);
  s = small_scene();
  s.ego[1].p.x() = 1000;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK_THROWS_AS(parse_scene_spec(R"({"ego": [{"t": 0, "p": [0, 0, 1]}], "color": 1})"), Error);
  const SceneSpec parsed = parse_scene_spec(R"({"ego": [{"t": 0, "p": [0, 0, 1]}, {"t": 1, "p": [1, 0, 1]}],
                                               "sensors": {"Velodyne": {"rows": 4}}})");
  CHECK(parsed.frame_times().size() == 11);
  CHECK(parsed.sensors[index_of(SensorId::velodyne)].rows == 4);
  CHECK(parsed.planes.size() == 1);
}

TEST_CASE("pose corruption") {
  // a 50 m street, a 120-frame excursion far away, then the same street again from frame 170
  std::vector<Pose> poses;
  std::vector<double> times;
  for (int k = 0; k < 220; ++k) {
    const bool away = k >= 50 && k < 170;
    const double x = away ? k - 50 : (k < 50 ? k : k - 170);
    poses.push_back(Pose::translate(x, away ? 300 : 0, 0));
    times.push_back(k);
  }
  const PoseCorruption none = plan_corruption(poses, times, 0.0, 3);
  const auto same = corrupt_poses(poses, times, none);
  for (std::size_t k = 0; k < poses.size(); ++k) CHECK(same[k].translation == poses[k].translation);

  const PoseCorruption c = plan_corruption(poses, times, 0.4, 3);
  const std::size_t revisit = 170;
  CHECK(c.ramp_end == times[revisit]);
  CHECK(c.ramp_begin == times[revisit - 1]);
  const auto bad = corrupt_poses(poses, times, c);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const double off = (bad[k].translation - poses[k].translation).norm();
    if (k < revisit) {
      CHECK(off == 0.0);
    } else {
      CHECK(off == doctest::Approx(0.4).epsilon(1e-12));
    }
    CHECK(bad[k].rotation == poses[k].rotation);
  }
  const PoseCorruption again = plan_corruption(poses, times, 0.4, 3);
  CHECK(again.direction == c.direction);
  CHECK_THROWS_AS(plan_corruption(poses, times, -1.0, 3), Error);
}

TEST_CASE("degrading detections") {
  const auto make = [](std::size_t frame) {
    FrameDetection d;
    d.annotation.frame = frame;
    d.annotation.classes = {MosClass::dynamic, MosClass::dynamic, MosClass::static_, MosClass::static_, MosClass::static_};
    d.annotation.instance = {1, 1, 2, 3, 0};
    d.instances = {{1, {0, 1}, Vec3::Zero(), {}}, {2, {2}, Vec3::Zero(), {}}, {3, {3}, Vec3::Zero(), {}}};
    d.verdicts = {{Verdict::dynamic, 0.1, 2}, {Verdict::static_, 1.0, 2}, {Verdict::static_, 1.0, 2}};
    return d;
  };
  std::vector<FrameDetection> dets = {make(0), make(1), make(2)};
  const auto original = dets;
  CHECK(degrade_detections(dets, {}).empty());
  CHECK(dets[1].annotation.classes == original[1].annotation.classes);

  DegradeOptions opt;
  opt.drop_frames = {1};
  opt.inject_static_fp = 2;
  const auto edits = degrade_detections(dets, opt);
  std::size_t dropped = 0, injected = 0;
  for (const auto& e : edits) (e.kind == DetectionEdit::Kind::dropped ? dropped : injected)++;
  CHECK(dropped == 1);
  CHECK(injected == 2);
  CHECK(dets[1].annotation.classes[0] == MosClass::static_);
  CHECK(dets[1].annotation.classes[1] == MosClass::static_);
  std::size_t dynamic_static_ids = 0;
  for (const auto& d : dets) {
    for (std::size_t k = 1; k < 3; ++k) dynamic_static_ids += d.verdicts[k].verdict == Verdict::dynamic;
    CHECK(d.annotation.classes[4] == MosClass::static_);
  }
  CHECK(dynamic_static_ids == 2);

  DegradeOptions bad;
  bad.inject_explicit = {{0, 1}};
  CHECK_THROWS_AS(degrade_detections(dets, bad), Error);
}
