#include "moslabel/mos_detect.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include <Eigen/Dense>

#include "moslabel/errors.hpp"

namespace moslabel {

namespace {

struct Plane {
  double a = 0.0, b = 0.0, c = 0.0;  // z = a x + b y + c

  double distance(const Vec3& p) const { return (p.z() - (a * p.x() + b * p.y() + c)) / std::sqrt(1.0 + a * a + b * b); }
  double tilt() const { return std::atan(std::hypot(a, b)); }
};

Plane fit_plane(const PointCloud& scan, std::span<const std::uint32_t> idx) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  double zsum = 0.0;
  for (const auto i : idx) {
    const Vec3& p = scan.points[i];
    const Eigen::Vector3d row(p.x(), p.y(), 1.0);
    A += row * row.transpose();
    rhs += row * p.z();
    zsum += p.z();
  }
  Plane plane;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
  if (lu.rank() == 3) {
    const Eigen::Vector3d x = lu.solve(rhs);
    plane = {x(0), x(1), x(2)};
  } else {
    plane.c = zsum / static_cast<double>(idx.size());
  }
  return plane;
}

using CellKey = std::pair<std::int64_t, std::int64_t>;

}  // namespace

std::vector<std::uint8_t> segment_ground(const PointCloud& scan, const GroundParams& params) {
  std::vector<std::uint8_t> mask(scan.size(), 0);
  if (scan.empty()) return mask;
  std::map<CellKey, std::vector<std::uint32_t>> cells;
  for (std::uint32_t i = 0; i < scan.size(); ++i) {
    const Vec3& p = scan.points[i];
    cells[{static_cast<std::int64_t>(std::floor(p.x() / params.cell_size)),
           static_cast<std::int64_t>(std::floor(p.y() / params.cell_size))}]
        .push_back(i);
  }

  std::map<CellKey, Plane> planes;
  for (auto& [key, idx] : cells) {
    if (idx.size() < params.min_cell_points) continue;
    std::vector<std::uint32_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end(),
              [&](std::uint32_t l, std::uint32_t r) { return scan.points[l].z() < scan.points[r].z(); });
    // lowest share of the cell, cut off half a meter above a robust minimum so walls do not lift the seed
    const double z_floor = scan.points[sorted[sorted.size() / 50]].z() + 0.5;
    std::size_t count = std::max<std::size_t>(3, static_cast<std::size_t>(params.seed_fraction * sorted.size()));
    count = std::min(count, sorted.size());
    std::vector<std::uint32_t> seeds;
    for (std::size_t k = 0; k < count && scan.points[sorted[k]].z() <= z_floor; ++k) seeds.push_back(sorted[k]);
    if (seeds.size() < 3) continue;
    Plane plane = fit_plane(scan, seeds);
    for (int it = 0; it < params.refine_iterations; ++it) {
      std::vector<std::uint32_t> inliers;
      for (const auto i : idx) {
        if (std::abs(plane.distance(scan.points[i])) <= params.distance_threshold) inliers.push_back(i);
      }
      if (inliers.size() < 3) break;
      plane = fit_plane(scan, inliers);
    }
    if (plane.tilt() > params.max_tilt) continue;
    planes[key] = plane;
  }

  for (const auto& [key, idx] : cells) {
    const Plane* plane = nullptr;
    if (const auto it = planes.find(key); it != planes.end()) {
      plane = &it->second;
    } else {
      for (int dx = -1; dx <= 1 && !plane; ++dx) {
        for (int dy = -1; dy <= 1 && !plane; ++dy) {
          if (const auto n = planes.find({key.first + dx, key.second + dy}); n != planes.end()) plane = &n->second;
        }
      }
    }
    if (!plane) continue;
    for (const auto i : idx) {
      if (std::abs(plane->distance(scan.points[i])) <= params.distance_threshold) mask[i] = 1;
    }
  }
  return mask;
}

std::vector<Instance> extract_instances(const PointCloud& scan, std::span<const std::uint8_t> ground,
                                        const InstanceParams& params) {
  if (ground.size() != scan.size()) throw Error(Errc::count_mismatch, "extract_instances: ground mask length differs");
  VoxelMap<std::vector<std::uint32_t>> voxels;
  std::vector<VoxelKey> order;
  for (std::uint32_t i = 0; i < scan.size(); ++i) {
    if (ground[i]) continue;
    const VoxelKey k = voxel_key(scan.points[i], params.voxel_size);
    auto& v = voxels[k];
    if (v.empty()) order.push_back(k);
    v.push_back(i);
  }

  VoxelMap<char> visited;
  std::vector<Instance> out;
  for (const VoxelKey& seed : order) {
    if (visited.contains(seed)) continue;
    std::vector<std::uint32_t> members;
    std::deque<VoxelKey> queue{seed};
    visited[seed] = 1;
    while (!queue.empty()) {
      const VoxelKey k = queue.front();
      queue.pop_front();
      const auto& pts = voxels.at(k);
      members.insert(members.end(), pts.begin(), pts.end());
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const VoxelKey n{k.x + dx, k.y + dy, k.z + dz};
            if (!voxels.contains(n) || visited.contains(n)) continue;
            visited[n] = 1;
            queue.push_back(n);
          }
        }
      }
    }
    if (members.size() < params.min_points) continue;
    std::sort(members.begin(), members.end());
    Instance inst;
    inst.indices = std::move(members);
    inst.box.min_corner = inst.box.max_corner = scan.points[inst.indices.front()];
    for (const auto i : inst.indices) {
      inst.centroid += scan.points[i];
      inst.box.expand(scan.points[i]);
    }
    inst.centroid /= static_cast<double>(inst.indices.size());
    if (inst.box.diagonal() > params.max_diagonal) continue;
    out.push_back(std::move(inst));
  }
  std::sort(out.begin(), out.end(), [](const Instance& a, const Instance& b) { return a.indices.front() < b.indices.front(); });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<std::uint32_t>(i + 1);
  return out;
}

StaticMapModel::StaticMapModel(const StaticMapParams& params) : params_(params) {
  if (!(params.voxel_size > 0.0) || !(params.bin_size > 0.0) || !(params.max_elevation > params.min_elevation)) {
    throw Error(Errc::invalid_parameter, "static map: voxel size, bin size and elevation span must be positive");
  }
  azimuth_bins_ = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / params.bin_size));
  elevation_bins_ = static_cast<std::size_t>(std::ceil((params.max_elevation - params.min_elevation) / params.bin_size));
}

std::size_t StaticMapModel::bin_of(double azimuth, double elevation) const {
  auto a = static_cast<std::size_t>((azimuth + std::numbers::pi) / params_.bin_size);
  auto e = static_cast<std::size_t>((elevation - params_.min_elevation) / params_.bin_size);
  a = std::min(a, azimuth_bins_ - 1);
  e = std::min(e, elevation_bins_ - 1);
  return e * azimuth_bins_ + a;
}

void StaticMapModel::add_frame(std::size_t frame, const PointCloud& scan, const Pose& pose,
                               std::span<const std::uint8_t> ground) {
  if (!frames_.empty() && frame <= frames_.back().frame) {
    throw Error(Errc::invalid_parameter, "static map frames must be added in increasing order");
  }
  if (!ground.empty() && ground.size() != scan.size()) {
    throw Error(Errc::count_mismatch, "static map: ground mask length differs from scan");
  }
  evidence_cache_.clear();
  const auto slot = static_cast<std::uint32_t>(frames_.size());
  FrameView view;
  view.frame = frame;
  view.world_to_body = invert(pose);
  if (params_.coverage == CoverageMode::visibility) view.max_range.assign(azimuth_bins_ * elevation_bins_, 0.0f);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const Vec3& p = scan.points[i];
    if (params_.coverage == CoverageMode::visibility) {
      const double el = std::atan2(p.z(), std::hypot(p.x(), p.y()));
      if (el >= params_.min_elevation && el < params_.max_elevation) {
        float& m = view.max_range[bin_of(std::atan2(p.y(), p.x()), el)];
        m = std::max(m, static_cast<float>(p.norm()));
      }
    }
    if (!ground.empty() && ground[i]) continue;
    auto& list = hits_[key_of(pose.apply(p))];
    if (list.empty() || list.back() != slot) list.push_back(slot);
  }
  frames_.push_back(std::move(view));
}

std::size_t StaticMapModel::direct_hits(const VoxelKey& key) const {
  const auto it = hits_.find(key);
  return it == hits_.end() ? 0 : it->second.size();
}

bool StaticMapModel::covers(std::size_t slot, const Vec3& world) const {
  const FrameView& view = frames_.at(slot);
  const Vec3 b = view.world_to_body.apply(world);
  const double r = b.norm();
  if (r > params_.max_range) return false;
  const double el = std::atan2(b.z(), std::hypot(b.x(), b.y()));
  if (el < params_.min_elevation || el >= params_.max_elevation) return false;
  if (params_.coverage == CoverageMode::fov) return true;

  const double needed = r - params_.visibility_tolerance;
  const std::size_t bin = bin_of(std::atan2(b.y(), b.x()), el);
  if (view.max_range[bin] > 0.0f) return view.max_range[bin] >= needed;
  // empty bin: sparse sensors leave holes, look at the surrounding bins
  const auto e0 = static_cast<std::ptrdiff_t>(bin / azimuth_bins_);
  const auto a0 = static_cast<std::ptrdiff_t>(bin % azimuth_bins_);
  const auto na = static_cast<std::ptrdiff_t>(azimuth_bins_);
  float best = 0.0f;
  for (std::ptrdiff_t de = -1; de <= 1; ++de) {
    const std::ptrdiff_t e = e0 + de;
    if (e < 0 || e >= static_cast<std::ptrdiff_t>(elevation_bins_)) continue;
    for (std::ptrdiff_t da = -1; da <= 1; ++da) {
      const std::ptrdiff_t a = (a0 + da + na) % na;
      best = std::max(best, view.max_range[static_cast<std::size_t>(e * na + a)]);
    }
  }
  return best > 0.0f && best >= needed;
}

VoxelEvidence StaticMapModel::evidence(const VoxelKey& key) const {
  if (const auto it = evidence_cache_.find(key); it != evidence_cache_.end()) return it->second;

  static const std::vector<std::uint32_t> kEmpty;
  const auto direct_it = hits_.find(key);
  const auto& direct = direct_it == hits_.end() ? kEmpty : direct_it->second;

  std::vector<std::uint32_t> dilated;
  const int h = params_.hit_neighborhood;
  for (int dx = -h; dx <= h; ++dx) {
    for (int dy = -h; dy <= h; ++dy) {
      for (int dz = -h; dz <= h; ++dz) {
        const auto it = hits_.find({key.x + dx, key.y + dy, key.z + dz});
        if (it != hits_.end()) dilated.insert(dilated.end(), it->second.begin(), it->second.end());
      }
    }
  }
  std::sort(dilated.begin(), dilated.end());
  dilated.erase(std::unique(dilated.begin(), dilated.end()), dilated.end());

  const Vec3 center = voxel_center(key, params_.voxel_size);
  VoxelEvidence ev;
  for (std::uint32_t s = 0; s < frames_.size(); ++s) {
    const bool hit_here = std::binary_search(direct.begin(), direct.end(), s);
    const bool covered = hit_here || covers(s, center);
    if (!covered) continue;
    ++ev.coverage;
    if (std::binary_search(dilated.begin(), dilated.end(), s)) ++ev.hits;
  }
  evidence_cache_.emplace(key, ev);
  return ev;
}

StaticMapModel build_static_map(std::span<const std::size_t> frames, const FrameCloudProvider& clouds,
                                std::span<const Pose> poses, const StaticMapParams& params) {
  StaticMapModel map(params);
  for (const std::size_t f : frames) {
    const PointCloud scan = clouds(f);
    map.add_frame(f, scan, poses[f], segment_ground(scan));
  }
  return map;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::static_: return "static";
    case Verdict::dynamic: return "dynamic";
    case Verdict::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

InstanceVerdict classify_instance(const Instance& instance, std::span<const Vec3> world_points,
                                  const StaticMapModel& map) {
  std::vector<VoxelKey> keys;
  keys.reserve(instance.indices.size());
  for (const auto i : instance.indices) keys.push_back(map.key_of(world_points[i]));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  InstanceVerdict out;
  double sum = 0.0;
  for (const VoxelKey& k : keys) {
    const VoxelEvidence ev = map.evidence(k);
    if (ev.coverage < map.params().min_coverage) continue;
    sum += static_cast<double>(ev.hits) / static_cast<double>(ev.coverage);
    ++out.eligible_voxels;
  }
  if (out.eligible_voxels == 0) return out;
  out.rho = sum / static_cast<double>(out.eligible_voxels);
  out.verdict = out.rho < map.params().rho_dynamic ? Verdict::dynamic : Verdict::static_;
  return out;
}

std::size_t ScanAnnotation::count(MosClass c) const { return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c)); }

std::vector<LabelValue> ScanAnnotation::to_labels() const {
  std::vector<LabelValue> out(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) out[i] = LabelValue::make(classes[i], instance[i]);
  return out;
}

ScanAnnotation ScanAnnotation::from_labels(std::size_t frame, std::span<const LabelValue> labels) {
  ScanAnnotation a;
  a.frame = frame;
  a.classes.reserve(labels.size());
  a.instance.reserve(labels.size());
  for (const LabelValue l : labels) {
    if (!is_valid_class_id(l.class_id())) throw Error(Errc::format, "unknown class id " + std::to_string(l.class_id()));
    a.classes.push_back(l.mos_class());
    a.instance.push_back(l.instance_id());
  }
  return a;
}

ScanAnnotation annotate_scan(std::size_t frame, std::size_t point_count, std::span<const Instance> instances,
                             std::span<const Verdict> verdicts) {
  if (instances.size() != verdicts.size()) throw Error(Errc::count_mismatch, "annotate_scan: one verdict per instance");
  ScanAnnotation a;
  a.frame = frame;
  a.classes.assign(point_count, MosClass::static_);
  a.instance.assign(point_count, 0);
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const MosClass c = verdicts[k] == Verdict::dynamic   ? MosClass::dynamic
                       : verdicts[k] == Verdict::static_ ? MosClass::static_
                                                         : MosClass::unlabeled;
    for (const auto i : instances[k].indices) {
      if (i >= point_count) throw Error(Errc::invalid_parameter, "annotate_scan: instance index out of range");
      a.classes[i] = c;
      a.instance[i] = instances[k].id;
    }
  }
  return a;
}

std::vector<FrameDetection> detect_cluster(std::span<const std::size_t> frames, const FrameCloudProvider& clouds,
                                           std::span<const Pose> poses, const DetectParams& params) {
  StaticMapModel map(params.map);
  std::vector<std::vector<std::uint8_t>> ground(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const PointCloud scan = clouds(frames[k]);
    ground[k] = segment_ground(scan, params.ground);
    map.add_frame(frames[k], scan, poses[frames[k]], ground[k]);
  }

  std::vector<FrameDetection> out(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const PointCloud world = transform_cloud(clouds(frames[k]), poses[frames[k]]);
    FrameDetection& d = out[k];
    d.instances = extract_instances(world, ground[k], params.instance);
    std::vector<Verdict> verdicts;
    for (const Instance& inst : d.instances) {
      d.verdicts.push_back(classify_instance(inst, world.points, map));
      verdicts.push_back(d.verdicts.back().verdict);
    }
    d.annotation = annotate_scan(frames[k], world.size(), d.instances, verdicts);
  }
  return out;
}

}  // namespace moslabel
