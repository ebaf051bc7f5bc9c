#include <doctest.h>

#include "../support/fixtures.hpp"
#include "moslabel/errors.hpp"
#include "moslabel/track_filter.hpp"

using namespace moslabel;

namespace {

TrackObservation obs_at(std::size_t frame, std::uint32_t instance, const Vec3& c, const Vec3& extent = Vec3(4, 2, 1.5)) {
  return {frame, instance, c, Aabb::around(c, extent)};
}

Track track_of(std::uint32_t id, const std::vector<TrackObservation>& o) {
  Track t;
  t.id = id;
  t.observations = o;
  return t;
}

}  // namespace

TEST_CASE("association follows a moving instance") {
  std::vector<FrameObservations> frames;
  for (std::size_t f = 0; f < 10; ++f) frames.push_back({f, {obs_at(f, 1, Vec3(double(f), 0, 0))}});
  const auto tracks = associate_tracks(frames);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].observations.size() == 10);
  CHECK(tracks[0].gaps().empty());
}

TEST_CASE("association gate keeps distant instances apart") {
  std::vector<FrameObservations> frames;
  for (std::size_t f = 0; f < 10; ++f) {
    frames.push_back({f, {obs_at(f, 1, Vec3(double(f), 0, 0)), obs_at(f, 2, Vec3(double(f), 20, 0))}});
  }
  const auto tracks = associate_tracks(frames);
  REQUIRE(tracks.size() == 2);
  for (const auto& t : tracks) {
    CHECK(t.observations.size() == 10);
    for (const auto& o : t.observations) CHECK(o.instance == t.observations.front().instance);
  }
}

TEST_CASE("a missed detection leaves a one-frame gap") {
  std::vector<FrameObservations> frames;
  for (std::size_t f = 0; f < 10; ++f) {
    FrameObservations fo{f, {}};
    if (f != 5) fo.detections.push_back(obs_at(f, 1, Vec3(double(f), 0, 0)));
    frames.push_back(fo);
  }
  const auto tracks = associate_tracks(frames);
  REQUIRE(tracks.size() == 1);
  REQUIRE(tracks[0].gaps().size() == 1);
  CHECK(tracks[0].gaps()[0] == IndexRange{5, 5});
}

TEST_CASE("lost tracks retire after the maximum gap") {
  TrackParams p;
  p.max_gap = 3;
  std::vector<FrameObservations> frames;
  for (std::size_t f = 0; f < 10; ++f) {
    FrameObservations fo{f, {}};
    if (f < 3 || f > 6) fo.detections.push_back(obs_at(f, 1, Vec3(0.01 * double(f), 0, 0)));
    frames.push_back(fo);
  }
  // frames 3..6 are missing: four frames, one more than allowed
  CHECK(associate_tracks(frames, p).size() == 2);
  p.max_gap = 4;
  CHECK(associate_tracks(frames, p).size() == 1);
}

TEST_CASE("judging") {
  std::vector<TrackObservation> creeping;
  for (std::size_t f = 0; f < 20; ++f) creeping.push_back(obs_at(f, 1, Vec3(0.005 * double(f), 0, 0)));
  CHECK(judge_track(track_of(1, creeping)) == TrackStatus::rejected_static);

  const std::vector<TrackObservation> two = {obs_at(0, 1, Vec3(0, 0, 0)), obs_at(1, 1, Vec3(5, 0, 0))};
  CHECK(judge_track(track_of(2, two)) == TrackStatus::rejected_static);

  std::vector<TrackObservation> fast;
  for (std::size_t f = 0; f < 10; ++f) fast.push_back(obs_at(f, 1, Vec3(15.0 * double(f) / 9.0, 0, 0)));
  CHECK(judge_track(track_of(3, fast)) == TrackStatus::confirmed_moving);
  CHECK(track_displacement(track_of(3, fast)) == doctest::Approx(15.0));
}

TEST_CASE("displacement measures the object, not its visible part") {
  // a parked car whose visible part grows as the sensor passes: centroids move, the union does not
  std::vector<TrackObservation> o;
  for (std::size_t f = 0; f < 10; ++f) {
    const double len = 1.0 + 0.35 * double(f);
    const Aabb box{Vec3(0, 0, 0), Vec3(len, 2, 1.5)};
    o.push_back({f, 1, box.center(), box});
  }
  const Track parked = track_of(1, o);
  CHECK((o.back().centroid - o.front().centroid).norm() > 1.0);
  CHECK(track_displacement(parked) == doctest::Approx(0.0));
  CHECK(judge_track(parked) == TrackStatus::rejected_static);
}

TEST_CASE("augmented boxes interpolate across gaps") {
  TrackParams p;
  const Vec3 e(4, 2, 1.5);
  auto boxes = augment_lost_boxes(track_of(7, {obs_at(4, 1, Vec3(0, 0, 0), e), obs_at(6, 1, Vec3(2, 0, 0), e)}), p);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].frame == 5);
  CHECK(boxes[0].track == 7);
  CHECK(boxes[0].lambda == doctest::Approx(0.5));
  CHECK((boxes[0].box.center() - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((boxes[0].box.extent() - (e + Vec3::Constant(2 * p.box_pad))).norm() < 1e-12);

  boxes = augment_lost_boxes(track_of(1, {obs_at(4, 1, Vec3(0, 0, 0)), obs_at(7, 1, Vec3(3, 0, 0))}), p);
  REQUIRE(boxes.size() == 2);
  CHECK((boxes[0].box.center() - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((boxes[1].box.center() - Vec3(2, 0, 0)).norm() < 1e-12);

  CHECK(augment_lost_boxes(track_of(1, {obs_at(4, 1, Vec3(0, 0, 0)), obs_at(5, 1, Vec3(1, 0, 0))}), p).empty());

  // centers stay on the segment between the bracketing observations
  const Vec3 a(3, -2, 0.5), b(-7, 4, 1.0);
  for (const auto& box : augment_lost_boxes(track_of(1, {obs_at(0, 1, a), obs_at(9, 1, b)}), p)) {
    const Vec3 c = box.box.center();
    CHECK(((c - a).norm() + (b - c).norm()) == doctest::Approx((b - a).norm()));
  }
}

TEST_CASE("filter_labels") {
  // frame 0..2, 10 points each; points 0..4 belong to instance 1, which is a parked car tracked as track 5
  std::vector<ScanAnnotation> ann(3);
  std::vector<std::vector<Vec3>> world(3);
  for (std::size_t f = 0; f < 3; ++f) {
    ann[f].frame = f;
    ann[f].classes.assign(10, MosClass::static_);
    ann[f].instance.assign(10, 0);
    for (std::size_t i = 0; i < 5; ++i) {
      ann[f].classes[i] = MosClass::dynamic;
      ann[f].instance[i] = 1;
    }
    ann[f].instance[9] = 2;  // untracked static instance
    for (std::size_t i = 0; i < 10; ++i) world[f].push_back(Vec3(double(i), 0, 0));
  }
  const WorldPointsProvider wp = [&](std::size_t f) { return world[f]; };

  SUBCASE("no tracks leaves classes alone") {
    auto copy = ann;
    filter_labels(copy, {}, {}, wp);
    for (std::size_t f = 0; f < 3; ++f) CHECK(copy[f].classes == ann[f].classes);
  }
  SUBCASE("a static track flips its points") {
    Track t = track_of(5, {obs_at(0, 1, Vec3::Zero()), obs_at(1, 1, Vec3::Zero()), obs_at(2, 1, Vec3::Zero())});
    t.status = TrackStatus::rejected_static;
    auto copy = ann;
    filter_labels(copy, std::vector<Track>{t}, {}, wp);
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(copy[f].count(MosClass::dynamic) == 0);
      CHECK(copy[f].instance[0] == 5);
      CHECK(copy[f].instance[9] == 2 + 5);
    }
  }
  SUBCASE("an augmented box recovers points") {
    Track t = track_of(5, {obs_at(0, 1, Vec3::Zero()), obs_at(2, 1, Vec3::Zero())});
    t.status = TrackStatus::confirmed_moving;
    auto copy = ann;
    for (std::size_t i = 0; i < 5; ++i) copy[1].classes[i] = MosClass::static_, copy[1].instance[i] = 0;
    const AugmentedBox box{1, Aabb{Vec3(-0.5, -1, -1), Vec3(4.5, 1, 1)}, 5, 0.5};
    filter_labels(copy, std::vector<Track>{t}, std::vector<AugmentedBox>{box}, wp);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(copy[1].classes[i] == MosClass::dynamic);
      CHECK(copy[1].instance[i] == 5);
    }
    for (std::size_t i = 5; i < 10; ++i) CHECK(copy[1].classes[i] == MosClass::static_);
  }
}

TEST_CASE("run_track_filter on a detection sequence with a dropped frame") {
  // an object moving 1 m per frame; its detection is deleted at frame 5
  const std::size_t n = 10;
  std::vector<FrameDetection> dets(n);
  std::vector<std::vector<Vec3>> world(n);
  std::size_t obj = 0;
  for (std::size_t f = 0; f < n; ++f) {
    PointCloud c;
    fixtures::add_box(c, Vec3(double(f), 0, 0.5), Vec3(double(f) + 2, 1, 1.5), 1.0);
    obj = c.size();
    for (int i = 0; i < 5; ++i) c.push_back(Vec3(-10.0 - i, 5, 0), 0.0f);  // background
    world[f] = c.points;
    FrameDetection& d = dets[f];
    d.annotation.frame = f;
    d.annotation.classes.assign(c.size(), MosClass::static_);
    d.annotation.instance.assign(c.size(), 0);
    if (f == 5) continue;
    Instance inst;
    inst.id = 1;
    for (std::uint32_t i = 0; i < obj; ++i) inst.indices.push_back(i);
    std::vector<Vec3> pts(c.points.begin(), c.points.begin() + long(obj));
    inst.box = aabb_of(pts, 0.0);
    inst.centroid = inst.box.center();
    d.instances.push_back(inst);
    d.verdicts.push_back({Verdict::dynamic, 0.1, 10});
    d.annotation = annotate_scan(f, c.size(), d.instances, std::vector<Verdict>{Verdict::dynamic});
  }
  const WorldPointsProvider wp = [&](std::size_t f) { return world[f]; };
  auto copy = dets;
  const auto result = run_track_filter(copy, wp, {}, 3);
  REQUIRE(result.tracks.size() == 1);
  CHECK(result.tracks[0].id == 3);
  CHECK(result.tracks[0].status == TrackStatus::confirmed_moving);
  CHECK(result.next_track_id == 4);
  REQUIRE(result.boxes.size() == 1);
  const auto& a5 = copy[5].annotation;
  for (std::size_t i = 0; i < obj; ++i) CHECK(a5.classes[i] == MosClass::dynamic);
  for (std::size_t i = obj; i < a5.size(); ++i) CHECK(a5.classes[i] == MosClass::static_);

  TrackParams no_aug;
  no_aug.augment = false;
  auto bare = dets;
  run_track_filter(bare, wp, no_aug);
  CHECK(bare[5].annotation.count(MosClass::dynamic) == 0);
  CHECK(track_dump(result.tracks).rfind("track_id frame cx cy cz status\n3 0 ", 0) == 0);
}
