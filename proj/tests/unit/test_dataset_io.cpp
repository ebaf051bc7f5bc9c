#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <regex>

#include "../support/fixtures.hpp"
#include "moslabel/dataset_io.hpp"
#include "moslabel/errors.hpp"

using namespace moslabel;

namespace {

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string float_record(float x, float y, float z, float i) {
  std::string s(16, '\0');
  const float v[4] = {x, y, z, i};
  std::memcpy(s.data(), v, 16);
  return s;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::stage;
}

}  // namespace

TEST_CASE("read_scan record layout") {
  fixtures::TempDir dir("scan");
  write_bytes(dir / "two.bin", float_record(1, 2, 3, 0.5f) + float_record(-4, 5, -6, 0.25f));
  const PointCloud c = read_scan(dir / "two.bin");
  REQUIRE(c.size() == 2);
  CHECK(c.points[1] == Vec3(-4, 5, -6));
  CHECK(c.intensities[0] == 0.5f);

  write_bytes(dir / "empty.bin", "");
  CHECK(read_scan(dir / "empty.bin").empty());

  write_bytes(dir / "odd.bin", std::string(17, '\0'));
  CHECK(code_of([&] { read_scan(dir / "odd.bin"); }) == Errc::format);
}

TEST_CASE("non-finite records are dropped and counted") {
  fixtures::TempDir dir("nan");
  write_bytes(dir / "s.bin", float_record(1, 2, 3, 0) + float_record(NAN, 0, 0, 0) + float_record(0, 0, 1, 0));
  ScanReadStats stats;
  CHECK(read_scan(dir / "s.bin", &stats).size() == 2);
  CHECK(stats.records == 3);
  CHECK(stats.dropped_non_finite == 1);
}

TEST_CASE("labels round trip and count checks") {
  fixtures::TempDir dir("labels");
  const std::vector<LabelValue> labels = {LabelValue{0}, LabelValue{9}, LabelValue{251}};
  write_labels(labels, dir / "a.label");
  CHECK(read_labels(dir / "a.label", 3) == labels);

  const std::string raw = read_bytes(dir / "a.label");
  REQUIRE(raw.size() == 12);
  CHECK(static_cast<unsigned char>(raw[8]) == 251);  // little-endian low byte first

  write_labels(std::vector<LabelValue>(5, LabelValue{9}), dir / "five.label");
  CHECK(code_of([&] { read_labels(dir / "five.label", 4); }) == Errc::count_mismatch);
}

TEST_CASE("scan with intensity round trips bit-exactly") {
  fixtures::TempDir dir("rt");
  PointCloud c;
  c.push_back(Vec3(1.5, -2.25, 3.125), 0.5f);
  write_scan(c, dir / "c.bin");
  const PointCloud back = read_scan(dir / "c.bin");
  CHECK(back.points == c.points);
  CHECK(back.intensities == c.intensities);
}

TEST_CASE("poses text") {
  const auto id = parse_poses("1 0 0 0 0 1 0 0 0 0 1 0\n");
  REQUIRE(id.size() == 1);
  CHECK(id[0].rotation == Mat3::Identity());
  CHECK(id[0].translation == Vec3::Zero());

  const auto t = parse_poses("1 0 0 5 0 1 0 0 0 0 1 0\n");
  CHECK(t[0].translation == Vec3(5, 0, 0));

  try {
    parse_poses("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::format);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("poses round trip exactly") {
  std::mt19937_64 rng(19);
  fixtures::TempDir dir("poses");
  std::vector<Pose> poses;
  for (int i = 0; i < 50; ++i) poses.push_back(fixtures::random_pose(rng));
  write_poses(poses, dir / "p.txt");
  const auto back = read_poses(dir / "p.txt");
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(back[i].rotation == poses[i].rotation);
    CHECK(back[i].translation == poses[i].translation);
  }
}

TEST_CASE("label word layout") {
  const LabelValue v = LabelValue::make(MosClass::dynamic, 7);
  CHECK(v.raw == (251u | (7u << 16)));
  CHECK(v.class_id() == 251);
  CHECK(v.instance_id() == 7);
  CHECK(v.is_dynamic());
  CHECK(parse_class("static") == MosClass::static_);
  CHECK(parse_class("251") == MosClass::dynamic);
  CHECK(code_of([] { parse_class("car"); }) == Errc::validation);
}

TEST_CASE("manifest round trip") {
  fixtures::TempDir dir("manifest");
  SequenceManifest m;
  m.name = "seq";
  for (const SensorId id : kAllSensors) {
    m.extrinsics[index_of(id)] = Pose::translate(0, 0, 0.1 * index_of(id));
    for (int k = 0; k < 3; ++k) {
      const fs::path scan = dir / (std::string(sensor_name(id)) + std::to_string(k) + ".bin");
      write_scan(PointCloud{}, scan);
      m.sensor(id).push_back({scan, 0.1 * k + 0.01 * index_of(id), Pose::translate(k, 0, 0), std::nullopt});
    }
  }
  write_manifest(m, dir / "manifest.json");
  const SequenceManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.name == "seq");
  CHECK(back.reference == SensorId::ouster);
  for (const SensorId id : kAllSensors) {
    REQUIRE(back.sensor(id).size() == 3);
    CHECK(fs::equivalent(back.sensor(id)[2].path, m.sensor(id)[2].path));
    CHECK(back.sensor(id)[2].timestamp == m.sensor(id)[2].timestamp);
    CHECK(back.extrinsics[index_of(id)]->translation == m.extrinsics[index_of(id)]->translation);
  }
  back.validate(true);

  SequenceManifest bad = m;
  bad.sensor(SensorId::livox)[2].timestamp = 0.0;
  CHECK(code_of([&] { bad.validate(false); }) == Errc::validation);
}

TEST_CASE("export layout") {
  fixtures::TempDir dir("export");
  SensorSequence seq;
  seq.name = "Ouster";
  seq.frame_count = 2;
  seq.load_scan = [](std::size_t f) {
    PointCloud c;
    for (std::size_t i = 0; i <= f; ++i) c.push_back(Vec3(double(i), 0, 0), 0.1f);
    return c;
  };
  seq.poses = {Pose::identity(), Pose::translate(1, 0, 0)};
  seq.calib = {{"Ouster", Pose::identity()}};
  std::vector<std::optional<std::vector<LabelValue>>> labels = {
      std::vector<LabelValue>{LabelValue::make(MosClass::static_)},
      std::vector<LabelValue>{LabelValue::make(MosClass::dynamic, 3), LabelValue::make(MosClass::static_)}};

  const ExportManifest m = export_layout(seq, labels, dir.path());
  for (const char* f : {"Ouster/velodyne/000000.bin", "Ouster/velodyne/000001.bin", "Ouster/labels/000000.label",
                        "Ouster/labels/000001.label", "Ouster/poses.txt", "Ouster/calib.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(m.files.size() == 6);
  CHECK(read_bytes(dir / "Ouster/calib.txt").rfind("Tr_Ouster: ", 0) == 0);

  const std::string first = read_bytes(dir / "Ouster/labels/000001.label");
  export_layout(seq, labels, dir.path());
  CHECK(read_bytes(dir / "Ouster/labels/000001.label") == first);

  labels[1]->pop_back();
  CHECK(code_of([&] { export_layout(seq, labels, dir.path()); }) == Errc::count_mismatch);
  labels[1].reset();
  CHECK(code_of([&] { export_layout(seq, labels, dir.path()); }) == Errc::missing_label);
}

TEST_CASE("export of an empty sequence") {
  fixtures::TempDir dir("empty");
  SensorSequence seq;
  seq.name = "Aeva";
  seq.load_scan = [](std::size_t) { return PointCloud{}; };
  export_layout(seq, {}, dir.path());
  CHECK(fs::file_size(dir / "Aeva/poses.txt") == 0);
  CHECK(fs::file_size(dir / "Aeva/calib.txt") == 0);
  CHECK_FALSE(fs::exists(dir / "Aeva/velodyne/000000.bin"));
}

TEST_CASE("splits") {
  SplitAssignment s = make_splits(100);
  CHECK(s.train.size() == 68);
  CHECK(s.val.size() == 16);
  CHECK(s.test.size() == 16);

  s = make_splits(12188);
  CHECK(s.train.size() == 8287);
  CHECK(s.val.size() == 1950);
  CHECK(s.test.size() == 1951);

  s = make_splits(100, {}, 10, 50);
  CHECK(s.val.front() == 10);
  CHECK(s.test.front() == 50);
  CHECK(code_of([] { make_splits(100, {}, 10, 20); }) == Errc::invalid_anchor);
  CHECK(code_of([] { make_splits(100, {}, 200, 20); }) == Errc::invalid_anchor);
  CHECK(code_of([] { make_splits(100, {0.5, 0.5, 0.5}); }) == Errc::invalid_parameter);
}

TEST_CASE("splits are contiguous, disjoint and exhaustive") {
  for (std::size_t n = 3; n < 400; n += 7) {
    const SplitAssignment s = make_splits(n);
    std::vector<int> seen(n, 0);
    for (const auto* block : {&s.train, &s.val, &s.test}) {
      for (const std::size_t f : *block) ++seen.at(f);
    }
    for (const int c : seen) REQUIRE(c == 1);
    for (const auto* block : {&s.val, &s.test}) {
      for (std::size_t i = 1; i < block->size(); ++i) REQUIRE((*block)[i] == (*block)[i - 1] + 1);
    }
    CHECK(s.train.size() == static_cast<std::size_t>(0.68 * n + 1e-9));
  }
}
