#include "moslabel/voxel.hpp"

#include <cmath>

#include "moslabel/errors.hpp"

namespace moslabel {

VoxelKey voxel_key(const Vec3& p, double voxel_size) {
  return {static_cast<std::int32_t>(std::floor(p.x() / voxel_size)),
          static_cast<std::int32_t>(std::floor(p.y() / voxel_size)),
          static_cast<std::int32_t>(std::floor(p.z() / voxel_size))};
}

Vec3 voxel_center(const VoxelKey& key, double voxel_size) {
  return Vec3((key.x + 0.5) * voxel_size, (key.y + 0.5) * voxel_size, (key.z + 0.5) * voxel_size);
}

VoxelGrid::VoxelGrid(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw Error(Errc::invalid_parameter, "voxel size must be positive");
  }
}

bool VoxelGrid::insert(const Vec3& p, float intensity) {
  const VoxelKey key = voxel_key(p, voxel_size_);
  const auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(order_.size()));
  if (!inserted) return false;
  order_.push_back(key);
  points_.push_back(p);
  intensities_.push_back(intensity);
  return true;
}

const Vec3& VoxelGrid::representative(const VoxelKey& key) const { return points_.at(index_.at(key)); }

PointCloud VoxelGrid::to_cloud(bool with_intensity) const {
  PointCloud out;
  out.points = points_;
  if (with_intensity) out.intensities = intensities_;
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  VoxelGrid grid(voxel_size);
  const bool with_intensity = cloud.has_intensities();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    grid.insert(cloud.points[i], with_intensity ? cloud.intensities[i] : 0.0f);
  }
  return grid.to_cloud(with_intensity);
}

}  // namespace moslabel
