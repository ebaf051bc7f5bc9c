#include "moslabel/eval.hpp"

#include <cstdio>

#include "moslabel/errors.hpp"

namespace moslabel {

ConfusionCounts confusion_counts(std::span<const LabelValue> pred, std::span<const LabelValue> gt) {
  if (pred.size() != gt.size()) {
    throw Error(Errc::count_mismatch, "confusion_counts: " + std::to_string(pred.size()) + " predictions vs " +
                                          std::to_string(gt.size()) + " ground-truth labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].mos_class() == MosClass::unlabeled) continue;
    const bool p = pred[i].is_dynamic();
    const bool g = gt[i].is_dynamic();
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double iou_mos(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double f1_score(double pr, double rr) {
  if (pr < 0.0 || pr > 1.0 || rr < 0.0 || rr > 1.0) throw Error(Errc::invalid_parameter, "f1_score: rates must lie in [0, 1]");
  if (pr + rr == 0.0) throw Error(Errc::undefined_metric, "f1_score: PR and RR are both zero");
  return 2.0 * pr * rr / (pr + rr);
}

double dynamic_ratio(std::span<const LabelValue> labels) {
  if (labels.empty()) throw Error(Errc::undefined_metric, "dynamic_ratio: empty scan");
  std::size_t n = 0;
  for (const LabelValue l : labels) n += l.is_dynamic() ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(labels.size());
}

GroundTruthVoxelMap::GroundTruthVoxelMap(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) throw Error(Errc::invalid_parameter, "voxel size must be positive");
}

void GroundTruthVoxelMap::add_scan(std::span<const Vec3> world_points, std::span<const LabelValue> gt) {
  if (world_points.size() != gt.size()) throw Error(Errc::count_mismatch, "gt map: points and labels differ in length");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].mos_class() == MosClass::unlabeled) continue;
    bool& tainted = dynamic_[voxel_key(world_points[i], voxel_size_)];
    tainted = tainted || gt[i].is_dynamic();
  }
}

std::size_t GroundTruthVoxelMap::static_voxels() const {
  std::size_t n = 0;
  for (const auto& [k, d] : dynamic_) n += d ? 0 : 1;
  return n;
}

std::size_t GroundTruthVoxelMap::dynamic_voxels() const { return dynamic_.size() - static_voxels(); }

MapEvalResult GroundTruthVoxelMap::evaluate(std::span<const Vec3> cleaned_map) const {
  MapEvalResult r;
  r.static_voxels = static_voxels();
  r.dynamic_voxels = dynamic_voxels();
  if (r.static_voxels == 0) throw Error(Errc::undefined_metric, "map metrics: ground truth has no static voxels");
  if (r.dynamic_voxels == 0) throw Error(Errc::undefined_metric, "map metrics: ground truth has no dynamic voxels");
  VoxelMap<char> present;
  for (const Vec3& p : cleaned_map) present[voxel_key(p, voxel_size_)] = 1;
  for (const auto& [k, d] : dynamic_) {
    if (!present.contains(k)) continue;
    if (d) {
      ++r.remaining_dynamic;
    } else {
      ++r.preserved_static;
    }
  }
  const double pr = static_cast<double>(r.preserved_static) / static_cast<double>(r.static_voxels);
  const double rr = 1.0 - static_cast<double>(r.remaining_dynamic) / static_cast<double>(r.dynamic_voxels);
  r.pr = 100.0 * pr;
  r.rr = 100.0 * rr;
  r.f1 = pr + rr == 0.0 ? 0.0 : f1_score(pr, rr);
  return r;
}

MapEvalResult map_voxel_metrics(std::span<const Vec3> cleaned_map, std::span<const GtScan> scans, double voxel_size) {
  GroundTruthVoxelMap gt(voxel_size);
  for (const GtScan& s : scans) gt.add_scan(s.world_points, s.labels);
  return gt.evaluate(cleaned_map);
}

namespace {

std::vector<std::pair<std::string, std::string>> report_rows(const EvalReport& r) {
  char buf[64];
  const auto num = [&](double v, const char* fmt) {
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> rows{
      {"sequence", r.sequence},
      {"tp", std::to_string(r.counts.tp)},
      {"fp", std::to_string(r.counts.fp)},
      {"fn", std::to_string(r.counts.fn)},
      {"tn", std::to_string(r.counts.tn)},
      {"iou_mos", num(r.iou, "%.4f")},
  };
  if (r.map) {
    rows.emplace_back("pr_percent", num(r.map->pr, "%.3f"));
    rows.emplace_back("rr_percent", num(r.map->rr, "%.3f"));
    rows.emplace_back("f1", num(r.map->f1, "%.4f"));
    rows.emplace_back("static_voxels", std::to_string(r.map->static_voxels));
    rows.emplace_back("dynamic_voxels", std::to_string(r.map->dynamic_voxels));
  }
  return rows;
}

}  // namespace

std::string EvalReport::to_text() const {
  const auto rows = report_rows(*this);
  std::size_t width = 0;
  for (const auto& [k, v] : rows) width = std::max(width, k.size());
  std::string out;
  for (const auto& [k, v] : rows) out += k + std::string(width - k.size() + 2, ' ') + v + '\n';
  return out;
}

std::string EvalReport::to_csv() const {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : report_rows(*this)) out += k + ',' + v + '\n';
  return out;
}

std::string EvalReport::ratios_csv() const {
  std::string out = "frame,predicted,ground_truth\n";
  char buf[96];
  for (const auto& r : ratios) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", r.frame, r.predicted, r.ground_truth);
    out += buf;
  }
  return out;
}

}  // namespace moslabel
