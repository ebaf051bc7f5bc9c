#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "moslabel/geometry.hpp"

namespace moslabel {

struct VoxelKey {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // large primes from the usual spatial-hashing scheme
    const auto h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.x)) * 73856093ULL) ^
                   (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.y)) * 19349669ULL) ^
                   (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.z)) * 83492791ULL);
    return static_cast<std::size_t>(h);
  }
};

/// Mathematical floor division, so negative coordinates land in the lower voxel.
VoxelKey voxel_key(const Vec3& p, double voxel_size);
Vec3 voxel_center(const VoxelKey& key, double voxel_size);

template <typename T>
using VoxelMap = std::unordered_map<VoxelKey, T, VoxelKeyHash>;

/// Hashed voxel grid keeping the first point inserted into each voxel.
class VoxelGrid {
 public:
  explicit VoxelGrid(double voxel_size);

  double voxel_size() const { return voxel_size_; }
  std::size_t size() const { return order_.size(); }

  /// Returns true when the point opened a new voxel.
  bool insert(const Vec3& p, float intensity = 0.0f);
  bool contains(const VoxelKey& key) const { return index_.contains(key); }
  const Vec3& representative(const VoxelKey& key) const;

  /// Occupied keys in first-insertion order.
  const std::vector<VoxelKey>& keys() const { return order_; }
  PointCloud to_cloud(bool with_intensity) const;

 private:
  double voxel_size_;
  VoxelMap<std::uint32_t> index_;
  std::vector<VoxelKey> order_;
  std::vector<Vec3> points_;
  std::vector<float> intensities_;
};

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

}  // namespace moslabel
