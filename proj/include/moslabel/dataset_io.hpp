#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moslabel/geometry.hpp"
#include "moslabel/labels.hpp"

namespace moslabel {

namespace fs = std::filesystem;

/// The four sensors in their fixed concatenation order.
enum class SensorId : std::uint8_t { aeva = 0, livox = 1, ouster = 2, velodyne = 3 };
inline constexpr std::size_t kSensorCount = 4;
inline constexpr std::array<SensorId, kSensorCount> kAllSensors = {SensorId::aeva, SensorId::livox, SensorId::ouster,
                                                                    SensorId::velodyne};

std::string_view sensor_name(SensorId id);
SensorId parse_sensor(std::string_view name);
inline std::size_t index_of(SensorId id) { return static_cast<std::size_t>(id); }

// --- binary scans and labels -------------------------------------------------

struct ScanReadStats {
  std::size_t records = 0;
  std::size_t dropped_non_finite = 0;
};

/// Reads little-endian float32 records (x, y, z, intensity).
PointCloud read_scan(const fs::path& path, ScanReadStats* stats = nullptr);
void write_scan(const PointCloud& cloud, const fs::path& path);

std::vector<LabelValue> read_labels(const fs::path& path, std::size_t expected_count);
void write_labels(std::span<const LabelValue> labels, const fs::path& path);

// --- poses -------------------------------------------------------------------

/// One pose per line, 12 numbers: row-major 3x4 [R | t].
std::vector<Pose> read_poses(const fs::path& path);
std::vector<Pose> parse_poses(std::string_view text);
void write_poses(std::span<const Pose> poses, const fs::path& path);
std::string format_pose_row(const Pose& pose);
Pose parse_pose_row(std::span<const double> values);

// --- sequence manifest -------------------------------------------------------

struct ScanEntry {
  fs::path path;
  double timestamp = 0.0;
  /// Reference-sensor (body) pose at this scan's timestamp.
  Pose pose;
  /// Optional per-point ground truth, used by evaluation only.
  std::optional<fs::path> label_path;
};

struct SequenceManifest {
  std::string name = "sequence";
  SensorId reference = SensorId::ouster;
  std::array<std::vector<ScanEntry>, kSensorCount> scans;
  /// Sensor frame into the reference sensor frame.
  std::array<std::optional<Pose>, kSensorCount> extrinsics;

  const std::vector<ScanEntry>& sensor(SensorId id) const { return scans[index_of(id)]; }
  std::vector<ScanEntry>& sensor(SensorId id) { return scans[index_of(id)]; }
  /// Strictly increasing timestamps per sensor; optionally every scan path exists.
  void validate(bool check_files) const;
};

/// JSON manifest; relative scan paths resolve against the manifest's directory.
SequenceManifest read_manifest(const fs::path& path);
void write_manifest(const SequenceManifest& manifest, const fs::path& path);

// --- dataset layout export -----------------------------------------------------

struct CalibEntry {
  std::string name;
  Pose transform;
};

struct SensorSequence {
  std::string name;
  std::size_t frame_count = 0;
  std::function<PointCloud(std::size_t)> load_scan;
  std::vector<Pose> poses;
  std::vector<CalibEntry> calib;
};

struct ExportManifest {
  std::vector<fs::path> files;
};

std::string frame_file_stem(std::size_t frame);

/// Writes <out>/<name>/{velodyne/NNNNNN.bin, labels/NNNNNN.label, poses.txt, calib.txt}.
ExportManifest export_layout(const SensorSequence& sequence,
                             const std::vector<std::optional<std::vector<LabelValue>>>& labels,
                             const fs::path& out_dir);

// --- splits ------------------------------------------------------------------

struct SplitRatios {
  double train = 0.68;
  double val = 0.16;
  double test = 0.16;
};

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Contiguous val/test blocks starting at the anchors; train is the remainder.
/// Without anchors the blocks are placed at the end of the sequence (val, then test).
SplitAssignment make_splits(std::size_t frame_count, const SplitRatios& ratios = {},
                            std::optional<std::size_t> val_anchor = std::nullopt,
                            std::optional<std::size_t> test_anchor = std::nullopt);

}  // namespace moslabel
