#include "moslabel/kdtree.hpp"

#include <algorithm>

namespace moslabel {

namespace {
bool heap_less(const Neighbor& a, const Neighbor& b) { return a.distance_sq < b.distance_sq; }
}  // namespace

KdTree::KdTree(std::span<const Vec3> points)
    : points_(points.begin(), points.end()), order_(points.size()), split_dim_(points.size(), 0) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  build(0, order_.size());
}

void KdTree::build(std::size_t lo, std::size_t hi) {
  if (hi - lo <= 1) return;
  Vec3 mn = points_[order_[lo]];
  Vec3 mx = mn;
  for (std::size_t i = lo; i < hi; ++i) {
    mn = mn.cwiseMin(points_[order_[i]]);
    mx = mx.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index dim = 0;
  (mx - mn).maxCoeff(&dim);
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(hi),
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][dim] < points_[b][dim]; });
  split_dim_[mid] = static_cast<std::uint8_t>(dim);
  build(lo, mid);
  build(mid + 1, hi);
}

std::optional<Neighbor> KdTree::nearest(const Vec3& query, double max_distance_sq) const {
  Neighbor best{0, max_distance_sq};
  bool found = false;
  search_nearest(0, order_.size(), query, best, found);
  if (!found) return std::nullopt;
  return best;
}

void KdTree::search_nearest(std::size_t lo, std::size_t hi, const Vec3& q, Neighbor& best, bool& found) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::uint32_t idx = order_[mid];
  const Vec3& p = points_[idx];
  const double d2 = (p - q).squaredNorm();
  if (d2 <= best.distance_sq) {
    best = {idx, d2};
    found = true;
  }
  if (hi - lo == 1) return;
  const int dim = split_dim_[mid];
  const double diff = q[dim] - p[dim];
  if (diff < 0.0) {
    search_nearest(lo, mid, q, best, found);
    if (diff * diff <= best.distance_sq) search_nearest(mid + 1, hi, q, best, found);
  } else {
    search_nearest(mid + 1, hi, q, best, found);
    if (diff * diff <= best.distance_sq) search_nearest(lo, mid, q, best, found);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k + 1);
  search_knn(0, order_.size(), query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), heap_less);
  return heap;
}

void KdTree::search_knn(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k,
                        std::vector<Neighbor>& heap) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const std::uint32_t idx = order_[mid];
  const Vec3& p = points_[idx];
  const double d2 = (p - q).squaredNorm();
  if (heap.size() < k) {
    heap.push_back({idx, d2});
    std::push_heap(heap.begin(), heap.end(), heap_less);
  } else if (d2 < heap.front().distance_sq) {
    std::pop_heap(heap.begin(), heap.end(), heap_less);
    heap.back() = {idx, d2};
    std::push_heap(heap.begin(), heap.end(), heap_less);
  }
  if (hi - lo == 1) return;
  const int dim = split_dim_[mid];
  const double diff = q[dim] - p[dim];
  const auto worst = [&] { return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.front().distance_sq; };
  if (diff < 0.0) {
    search_knn(lo, mid, q, k, heap);
    if (diff * diff < worst()) search_knn(mid + 1, hi, q, k, heap);
  } else {
    search_knn(mid + 1, hi, q, k, heap);
    if (diff * diff < worst()) search_knn(lo, mid, q, k, heap);
  }
}

}  // namespace moslabel
