#pragma once

// Reference implementations written without the library's voxel hashing, used to cross-check metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "moslabel/eval.hpp"

namespace oracles {

using Key = std::array<long long, 3>;

inline Key floor_key(const moslabel::Vec3& p, double v) {
  return {static_cast<long long>(std::floor(p.x() / v)), static_cast<long long>(std::floor(p.y() / v)),
          static_cast<long long>(std::floor(p.z() / v))};
}

struct PointCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline PointCounts brute_counts(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt) {
  PointCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const std::uint32_t g = gt[i] & 0xFFFF, p = pred[i] & 0xFFFF;
    if (g == 0) continue;
    if (p == 251 && g == 251) c.tp++;
    if (p == 251 && g != 251) c.fp++;
    if (p != 251 && g == 251) c.fn++;
    if (p != 251 && g != 251) c.tn++;
  }
  return c;
}

inline double brute_iou(const PointCounts& c) {
  if (c.tp + c.fp + c.fn == 0) return 1.0;
  return double(c.tp) / double(c.tp + c.fp + c.fn);
}

struct MapCounts {
  std::size_t static_voxels = 0, dynamic_voxels = 0, preserved_static = 0, remaining_dynamic = 0;
  double pr = 0, rr = 0, f1 = 0;
};

/// Voxels as sorted key lists; membership by binary search.
inline MapCounts brute_map(std::span<const moslabel::Vec3> cleaned, std::span<const moslabel::Vec3> gt_points,
                           std::span<const std::uint32_t> gt_labels, double v) {
  std::vector<std::pair<Key, bool>> gt;
  for (std::size_t i = 0; i < gt_points.size(); ++i) {
    const std::uint32_t cls = gt_labels[i] & 0xFFFF;
    if (cls != 0) gt.emplace_back(floor_key(gt_points[i], v), cls == 251);
  }
  std::sort(gt.begin(), gt.end());
  std::vector<Key> map_keys;
  for (const auto& p : cleaned) map_keys.push_back(floor_key(p, v));
  std::sort(map_keys.begin(), map_keys.end());

  MapCounts m;
  for (std::size_t j = 0; j < gt.size();) {
    // (key, true) sorts after (key, false): the last entry of a run says whether any point was dynamic
    std::size_t e = j;
    while (e + 1 < gt.size() && gt[e + 1].first == gt[j].first) ++e;
    const bool dynamic = gt[e].second;
    const bool present = std::binary_search(map_keys.begin(), map_keys.end(), gt[j].first);
    if (dynamic) {
      m.dynamic_voxels++;
      if (present) m.remaining_dynamic++;
    } else {
      m.static_voxels++;
      if (present) m.preserved_static++;
    }
    j = e + 1;
  }
  const double pr = double(m.preserved_static) / double(m.static_voxels);
  const double rr = 1.0 - double(m.remaining_dynamic) / double(m.dynamic_voxels);
  m.pr = 100.0 * pr;
  m.rr = 100.0 * rr;
  m.f1 = pr + rr == 0.0 ? 0.0 : 2.0 * pr * rr / (pr + rr);
  return m;
}

/// Printed static-map-building results: PR [%], RR [%], F1.
struct PrintedRow {
  double pr, rr, f1;
};
inline constexpr std::array<PrintedRow, 9> kPrintedRows = {{
    {85.072, 47.170, 0.607},
    {95.325, 82.490, 0.884},
    {99.522, 95.339, 0.974},
    {80.581, 71.965, 0.760},
    {91.610, 84.290, 0.878},
    {99.530, 93.740, 0.965},
    {82.852, 81.301, 0.821},
    {93.969, 89.955, 0.919},
    {99.676, 97.175, 0.984},
}};

}  // namespace oracles
