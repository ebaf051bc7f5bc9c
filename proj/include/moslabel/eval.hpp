#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moslabel/geometry.hpp"
#include "moslabel/labels.hpp"
#include "moslabel/voxel.hpp"

namespace moslabel {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Dynamic is the positive class; points unlabeled in `gt` are skipped.
ConfusionCounts confusion_counts(std::span<const LabelValue> pred, std::span<const LabelValue> gt);

/// TP / (TP + FP + FN), 1.0 when nothing is dynamic in either.
double iou_mos(const ConfusionCounts& c);

/// Harmonic mean of two rates given as fractions.
double f1_score(double pr, double rr);

double dynamic_ratio(std::span<const LabelValue> labels);

struct MapEvalResult {
  double pr = 0.0;  // percent
  double rr = 0.0;  // percent
  double f1 = 0.0;
  std::size_t static_voxels = 0;
  std::size_t dynamic_voxels = 0;
  std::size_t preserved_static = 0;
  std::size_t remaining_dynamic = 0;
};

/// Naively accumulated ground-truth map; a voxel is dynamic once any gt-dynamic point falls in it.
class GroundTruthVoxelMap {
 public:
  explicit GroundTruthVoxelMap(double voxel_size);

  void add_scan(std::span<const Vec3> world_points, std::span<const LabelValue> gt);
  MapEvalResult evaluate(std::span<const Vec3> cleaned_map) const;

  std::size_t static_voxels() const;
  std::size_t dynamic_voxels() const;

 private:
  double voxel_size_;
  VoxelMap<bool> dynamic_;  // key -> tainted
};

struct GtScan {
  std::vector<Vec3> world_points;
  std::vector<LabelValue> labels;
};

MapEvalResult map_voxel_metrics(std::span<const Vec3> cleaned_map, std::span<const GtScan> scans, double voxel_size);

struct FrameRatio {
  std::size_t frame = 0;
  double predicted = 0.0;
  double ground_truth = 0.0;
};

struct EvalReport {
  std::string sequence;
  ConfusionCounts counts;
  double iou = 1.0;
  std::optional<MapEvalResult> map;
  std::vector<FrameRatio> ratios;

  /// Aligned two-column text table.
  std::string to_text() const;
  /// `metric,value` rows.
  std::string to_csv() const;
  /// `frame,predicted,ground_truth` rows.
  std::string ratios_csv() const;
};

}  // namespace moslabel
