#include "moslabel/dataset_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "moslabel/errors.hpp"

namespace moslabel {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr std::size_t kScanRecordBytes = 16;
constexpr double kPoseOrthoTolerance = 1e-3;
constexpr double kPoseDriftTolerance = 1e-9;

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  return out;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

nlohmann::json pose_to_json(const Pose& p) {
  nlohmann::json row = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) row.push_back(p.rotation(r, c));
    row.push_back(p.translation[r]);
  }
  return row;
}

Pose pose_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != 12) throw Error(Errc::format, "manifest pose needs 12 numbers");
  return parse_pose_row(values);
}

}  // namespace

std::string_view sensor_name(SensorId id) {
  switch (id) {
    case SensorId::aeva: return "Aeva";
    case SensorId::livox: return "Livox";
    case SensorId::ouster: return "Ouster";
    case SensorId::velodyne: return "Velodyne";
  }
  return "unknown";
}

SensorId parse_sensor(std::string_view name) {
  for (auto id : kAllSensors) {
    if (sensor_name(id) == name) return id;
  }
  throw Error(Errc::configuration, "unknown sensor '" + std::string(name) + "'");
}

bool is_valid_class_id(std::uint32_t class_id) {
  return class_id == static_cast<std::uint32_t>(MosClass::unlabeled) ||
         class_id == static_cast<std::uint32_t>(MosClass::static_) ||
         class_id == static_cast<std::uint32_t>(MosClass::dynamic);
}

std::string_view class_name(MosClass c) {
  switch (c) {
    case MosClass::unlabeled: return "unlabeled";
    case MosClass::static_: return "static";
    case MosClass::dynamic: return "dynamic";
  }
  return "invalid";
}

MosClass parse_class(std::string_view text) {
  if (text == "unlabeled" || text == "0") return MosClass::unlabeled;
  if (text == "static" || text == "9") return MosClass::static_;
  if (text == "dynamic" || text == "251") return MosClass::dynamic;
  throw Error(Errc::validation, "unknown class '" + std::string(text) + "'");
}

PointCloud read_scan(const fs::path& path, ScanReadStats* stats) {
  const auto bytes = read_all(path);
  if (bytes.size() % kScanRecordBytes != 0) {
    const std::size_t offset = bytes.size() / kScanRecordBytes * kScanRecordBytes;
    throw Error(Errc::format, path.string() + ": truncated scan record at byte offset " + std::to_string(offset) +
                                  " (file length " + std::to_string(bytes.size()) + ")");
  }
  const std::size_t n = bytes.size() / kScanRecordBytes;
  PointCloud cloud;
  cloud.reserve(n);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    float rec[4];
    std::memcpy(rec, bytes.data() + i * kScanRecordBytes, kScanRecordBytes);
    if (!std::isfinite(rec[0]) || !std::isfinite(rec[1]) || !std::isfinite(rec[2])) {
      ++dropped;
      continue;
    }
    cloud.push_back(Vec3(rec[0], rec[1], rec[2]), rec[3]);
  }
  if (dropped > 0) {
    spdlog::warn("{}: dropped {} records with non-finite coordinates", path.string(), dropped);
  }
  if (stats) *stats = {n, dropped};
  return cloud;
}

void write_scan(const PointCloud& cloud, const fs::path& path) {
  if (!cloud.is_valid()) throw Error(Errc::validation, "write_scan: invalid cloud");
  std::vector<char> buf(cloud.size() * kScanRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float rec[4] = {static_cast<float>(cloud.points[i].x()), static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z()),
                          cloud.has_intensities() ? cloud.intensities[i] : 0.0f};
    std::memcpy(buf.data() + i * kScanRecordBytes, rec, kScanRecordBytes);
  }
  auto out = open_for_write(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<LabelValue> read_labels(const fs::path& path, std::size_t expected_count) {
  const auto bytes = read_all(path);
  if (bytes.size() % 4 != 0) {
    throw Error(Errc::format, path.string() + ": label file length " + std::to_string(bytes.size()) +
                                  " is not a multiple of 4");
  }
  const std::size_t n = bytes.size() / 4;
  if (n != expected_count) {
    throw Error(Errc::count_mismatch, path.string() + ": label count " + std::to_string(n) +
                                          " does not match point count " + std::to_string(expected_count));
  }
  std::vector<LabelValue> labels(n);
  std::memcpy(labels.data(), bytes.data(), bytes.size());
  return labels;
}

void write_labels(std::span<const LabelValue> labels, const fs::path& path) {
  static_assert(sizeof(LabelValue) == 4);
  auto out = open_for_write(path);
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size() * 4));
}

Pose parse_pose_row(std::span<const double> v) {
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
    p.translation[r] = v[static_cast<std::size_t>(r * 4 + 3)];
  }
  return p;
}

std::string format_pose_row(const Pose& pose) {
  std::string line;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!line.empty()) line.push_back(' ');
      append_double(line, c < 3 ? pose.rotation(r, c) : pose.translation[r]);
    }
  }
  return line;
}

std::vector<Pose> parse_poses(std::string_view text) {
  std::vector<Pose> poses;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
      if (pos >= line.size()) break;
      std::size_t tok_end = pos;
      while (tok_end < line.size() && line[tok_end] != ' ' && line[tok_end] != '\t' && line[tok_end] != '\r') ++tok_end;
      double v = 0.0;
      const auto res = std::from_chars(line.data() + pos, line.data() + tok_end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + tok_end) {
        throw Error(Errc::format, "poses line " + std::to_string(line_no) + ": bad number '" +
                                      std::string(line.substr(pos, tok_end - pos)) + "'");
      }
      values.push_back(v);
      pos = tok_end;
    }
    if (values.size() != 12) {
      throw Error(Errc::format, "poses line " + std::to_string(line_no) + ": expected 12 values, got " +
                                    std::to_string(values.size()));
    }
    Pose p = parse_pose_row(values);
    const double err = orthonormality_error(p.rotation);
    if (!p.rotation.allFinite() || err > kPoseOrthoTolerance || p.rotation.determinant() < 0.0) {
      throw Error(Errc::format, "poses line " + std::to_string(line_no) + ": rotation is not orthonormal");
    }
    if (err > kPoseDriftTolerance) p.rotation = orthonormalize(p.rotation);
    poses.push_back(p);
  }
  return poses;
}

std::vector<Pose> read_poses(const fs::path& path) {
  const auto bytes = read_all(path);
  return parse_poses(std::string_view(bytes.data(), bytes.size()));
}

void write_poses(std::span<const Pose> poses, const fs::path& path) {
  std::string text;
  for (const auto& p : poses) {
    text += format_pose_row(p);
    text.push_back('\n');
  }
  auto out = open_for_write(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void SequenceManifest::validate(bool check_files) const {
  for (auto id : kAllSensors) {
    const auto& list = sensor(id);
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (!(list[i].timestamp > list[i - 1].timestamp)) {
        throw Error(Errc::validation, std::string(sensor_name(id)) + ": timestamps not strictly increasing at frame " +
                                          std::to_string(i));
      }
    }
    if (check_files) {
      for (const auto& e : list) {
        if (!fs::exists(e.path)) throw Error(Errc::validation, "missing scan file " + e.path.string());
      }
    }
  }
}

SequenceManifest read_manifest(const fs::path& path) {
  const auto bytes = read_all(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  SequenceManifest m;
  try {
    m.name = j.value("name", std::string("sequence"));
    m.reference = parse_sensor(j.value("reference", std::string("Ouster")));
    const auto& sensors = j.at("sensors");
    if (sensors.size() != kSensorCount) {
      throw Error(Errc::validation, "manifest must list exactly four sensors");
    }
    for (const auto& [name, s] : sensors.items()) {
      const SensorId id = parse_sensor(name);
      if (s.contains("extrinsic")) m.extrinsics[index_of(id)] = pose_from_json(s.at("extrinsic"));
      for (const auto& e : s.at("scans")) {
        ScanEntry entry;
        entry.path = base / e.at("path").get<std::string>();
        entry.timestamp = e.at("timestamp").get<double>();
        entry.pose = pose_from_json(e.at("pose"));
        if (e.contains("labels")) entry.label_path = base / e.at("labels").get<std::string>();
        m.sensor(id).push_back(std::move(entry));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
  m.validate(true);
  return m;
}

void write_manifest(const SequenceManifest& m, const fs::path& path) {
  const fs::path base = path.parent_path();
  nlohmann::json j;
  j["name"] = m.name;
  j["reference"] = std::string(sensor_name(m.reference));
  nlohmann::json sensors = nlohmann::json::object();
  for (auto id : kAllSensors) {
    nlohmann::json s;
    if (const auto& e = m.extrinsics[index_of(id)]) s["extrinsic"] = pose_to_json(*e);
    nlohmann::json scans = nlohmann::json::array();
    for (const auto& e : m.sensor(id)) {
      nlohmann::json row;
      row["path"] = fs::relative(e.path, base).generic_string();
      row["timestamp"] = e.timestamp;
      row["pose"] = pose_to_json(e.pose);
      if (e.label_path) row["labels"] = fs::relative(*e.label_path, base).generic_string();
      scans.push_back(std::move(row));
    }
    s["scans"] = std::move(scans);
    sensors[std::string(sensor_name(id))] = std::move(s);
  }
  j["sensors"] = std::move(sensors);
  auto out = open_for_write(path);
  out << j.dump(1) << '\n';
}

std::string frame_file_stem(std::size_t frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", frame);
  return buf;
}

ExportManifest export_layout(const SensorSequence& seq,
                             const std::vector<std::optional<std::vector<LabelValue>>>& labels,
                             const fs::path& out_dir) {
  std::vector<std::size_t> missing;
  for (std::size_t f = 0; f < seq.frame_count; ++f) {
    if (f >= labels.size() || !labels[f]) missing.push_back(f);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      if (i) list += ", ";
      list += std::to_string(missing[i]);
    }
    if (missing.size() > 20) list += ", ...";
    throw Error(Errc::missing_label, seq.name + ": missing labels for " + std::to_string(missing.size()) +
                                         " frame(s): " + list);
  }
  if (seq.frame_count > 0 && seq.poses.size() != seq.frame_count) {
    throw Error(Errc::validation, seq.name + ": pose count does not match frame count");
  }

  ExportManifest manifest;
  const fs::path root = out_dir / seq.name;
  fs::create_directories(root);
  for (std::size_t f = 0; f < seq.frame_count; ++f) {
    const PointCloud cloud = seq.load_scan(f);
    const auto& frame_labels = *labels[f];
    if (frame_labels.size() != cloud.size()) {
      throw Error(Errc::count_mismatch, seq.name + " frame " + std::to_string(f) + ": " +
                                            std::to_string(frame_labels.size()) + " labels for " +
                                            std::to_string(cloud.size()) + " points");
    }
    for (const auto l : frame_labels) {
      if (!is_valid_class_id(l.class_id())) {
        throw Error(Errc::validation, seq.name + " frame " + std::to_string(f) + ": invalid class id " +
                                          std::to_string(l.class_id()));
      }
    }
    const std::string stem = frame_file_stem(f);
    const fs::path scan_path = root / "velodyne" / (stem + ".bin");
    const fs::path label_path = root / "labels" / (stem + ".label");
    write_scan(cloud, scan_path);
    write_labels(frame_labels, label_path);
    manifest.files.push_back(scan_path);
    manifest.files.push_back(label_path);
  }

  write_poses(seq.poses, root / "poses.txt");
  manifest.files.push_back(root / "poses.txt");

  std::string calib;
  if (seq.frame_count > 0) {
    for (const auto& c : seq.calib) {
      calib += "Tr_" + c.name + ": " + format_pose_row(c.transform) + "\n";
    }
  }
  auto out = open_for_write(root / "calib.txt");
  out.write(calib.data(), static_cast<std::streamsize>(calib.size()));
  manifest.files.push_back(root / "calib.txt");
  return manifest;
}

SplitAssignment make_splits(std::size_t n, const SplitRatios& ratios, std::optional<std::size_t> val_anchor,
                            std::optional<std::size_t> test_anchor) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw Error(Errc::invalid_parameter, "split ratios must be non-negative and sum to 1");
  }
  const auto floor_count = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  const std::size_t train_n = floor_count(ratios.train);
  const std::size_t val_n = floor_count(ratios.val);
  const std::size_t test_n = n - train_n - val_n;

  const auto place = [n](std::optional<std::size_t> anchor, std::size_t len, std::size_t fallback) {
    std::size_t start = anchor.value_or(fallback);
    if (anchor && *anchor >= n && n > 0) {
      throw Error(Errc::invalid_anchor, "split anchor " + std::to_string(*anchor) + " outside sequence");
    }
    if (start + len > n) start = n - len;
    return start;
  };
  const std::size_t val_start = place(val_anchor, val_n, n - test_n - val_n);
  const std::size_t test_start = place(test_anchor, test_n, n - test_n);
  const bool overlap = val_n > 0 && test_n > 0 && val_start < test_start + test_n && test_start < val_start + val_n;
  if (overlap) {
    throw Error(Errc::invalid_anchor, "validation block [" + std::to_string(val_start) + ", " +
                                          std::to_string(val_start + val_n) + ") overlaps test block [" +
                                          std::to_string(test_start) + ", " + std::to_string(test_start + test_n) +
                                          ")");
  }

  SplitAssignment s;
  for (std::size_t f = 0; f < n; ++f) {
    if (f >= val_start && f < val_start + val_n) {
      s.val.push_back(f);
    } else if (f >= test_start && f < test_start + test_n) {
      s.test.push_back(f);
    } else {
      s.train.push_back(f);
    }
  }
  return s;
}

}  // namespace moslabel
