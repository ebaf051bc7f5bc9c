#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "moslabel/geometry.hpp"

namespace moslabel {

struct Neighbor {
  std::uint32_t index = 0;
  double distance_sq = 0.0;
};

/// Balanced 3-d tree over a copied point set. Immutable after construction.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }

  std::optional<Neighbor> nearest(const Vec3& query,
                                  double max_distance_sq = std::numeric_limits<double>::infinity()) const;
  /// Up to k neighbours sorted by ascending distance.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

 private:
  void build(std::size_t lo, std::size_t hi);
  void search_nearest(std::size_t lo, std::size_t hi, const Vec3& q, Neighbor& best, bool& found) const;
  void search_knn(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k,
                  std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint8_t> split_dim_;
};

}  // namespace moslabel
