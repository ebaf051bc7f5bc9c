#include "moslabel/traj_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "moslabel/errors.hpp"
#include "moslabel/voxel.hpp"

namespace moslabel {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Calls visit(i, j) for every pair i < j closer than radius.
template <typename Visit>
void for_each_close_pair(std::span<const TrajectoryFrame> frames, double radius, Visit&& visit) {
  VoxelMap<std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    cells[voxel_key(frames[i].position(), radius)].push_back(i);
  }
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const VoxelKey k = voxel_key(frames[i].position(), radius);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = cells.find({k.x + dx, k.y + dy, k.z + dz});
          if (it == cells.end()) continue;
          for (const std::size_t j : it->second) {
            if (j <= i) continue;
            if ((frames[i].position() - frames[j].position()).squaredNorm() <= r2) visit(i, j);
          }
        }
      }
    }
  }
}

std::vector<std::vector<std::size_t>> groups_from_pairs(std::size_t n, DisjointSets& sets,
                                                        const std::vector<bool>& member) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (member[i]) by_root[sets.find(i)].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [root, g] : by_root) groups.push_back(std::move(g));
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

}  // namespace

const char* to_string(ClusterKind kind) {
  switch (kind) {
    case ClusterKind::intersection: return "intersection";
    case ClusterKind::revisit: return "revisit";
    case ClusterKind::linear: return "linear";
  }
  return "linear";
}

std::vector<TrajectoryFrame> make_trajectory(std::span<const Pose> poses, std::span<const double> timestamps) {
  if (poses.size() != timestamps.size()) {
    throw Error(Errc::count_mismatch, "make_trajectory: pose and timestamp counts differ");
  }
  std::vector<TrajectoryFrame> frames;
  frames.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0 && !(timestamps[i] > timestamps[i - 1])) {
      throw Error(Errc::validation, "make_trajectory: timestamps not strictly increasing at " + std::to_string(i));
    }
    frames.push_back({i, poses[i], timestamps[i], yaw_of(poses[i])});
  }
  return frames;
}

std::vector<IndexRange> detect_turn_regions(std::span<const TrajectoryFrame> frames, std::size_t window,
                                            double yaw_threshold) {
  if (window < 2) throw Error(Errc::invalid_parameter, "turn window must be at least 2 frames");
  std::vector<IndexRange> ranges;
  const std::size_t n = frames.size();
  if (n < 2) return ranges;
  const std::size_t w = std::min(window, n);

  std::vector<double> step(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) step[k] = std::abs(wrap_angle(frames[k + 1].yaw - frames[k].yaw));

  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < w; ++k) acc += step[k];
  for (std::size_t start = 0; start + w <= n; ++start) {
    if (start > 0) {
      // slide: drop step[start-1], add step[start+w-2]
      acc += step[start + w - 2] - step[start - 1];
    }
    if (acc > yaw_threshold) {
      const IndexRange r{start, start + w - 1};
      if (!ranges.empty() && r.first <= ranges.back().last + 1) {
        ranges.back().last = std::max(ranges.back().last, r.last);
      } else {
        ranges.push_back(r);
      }
    }
  }
  return ranges;
}

std::vector<std::vector<std::size_t>> detect_revisits(std::span<const TrajectoryFrame> frames, double radius,
                                                      double min_time_gap) {
  if (!(radius > 0.0) || !(min_time_gap > 0.0)) {
    throw Error(Errc::invalid_parameter, "revisit radius and minimum time gap must be positive");
  }
  DisjointSets sets(frames.size());
  std::vector<bool> member(frames.size(), false);
  for_each_close_pair(frames, radius, [&](std::size_t i, std::size_t j) {
    if (std::abs(frames[i].timestamp - frames[j].timestamp) >= min_time_gap) {
      sets.unite(i, j);
      member[i] = member[j] = true;
    }
  });
  return groups_from_pairs(frames.size(), sets, member);
}

std::vector<std::vector<std::size_t>> detect_crossings(std::span<const TrajectoryFrame> frames, double radius,
                                                       double min_time_gap, double yaw_threshold) {
  DisjointSets sets(frames.size());
  std::vector<bool> member(frames.size(), false);
  for_each_close_pair(frames, radius, [&](std::size_t i, std::size_t j) {
    if (std::abs(frames[i].timestamp - frames[j].timestamp) < min_time_gap) return;
    const double d = std::abs(wrap_angle(frames[i].yaw - frames[j].yaw));
    const double line_angle = std::min(d, std::numbers::pi - d);
    if (line_angle > yaw_threshold) {
      sets.unite(i, j);
      member[i] = member[j] = true;
    }
  });
  return groups_from_pairs(frames.size(), sets, member);
}

std::vector<std::vector<std::size_t>> decompose_subclusters(std::span<const std::size_t> frames) {
  if (frames.empty()) throw Error(Errc::empty_input, "decompose_subclusters: empty cluster");
  std::vector<std::size_t> sorted(frames.begin(), frames.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::vector<std::size_t>> runs;
  for (const std::size_t f : sorted) {
    if (runs.empty() || runs.back().back() + 1 != f) runs.emplace_back();
    runs.back().push_back(f);
  }
  return runs;
}

ClusterPartition cluster_trajectory(std::span<const TrajectoryFrame> frames, const ClusterParams& params) {
  const std::size_t n = frames.size();
  if (n == 0) throw Error(Errc::empty_input, "cluster_trajectory: no frames");

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(n, kNone);
  std::vector<TrajectoryCluster> clusters;

  const auto claim = [&](ClusterKind kind, const std::vector<std::size_t>& candidates) {
    TrajectoryCluster c;
    c.kind = kind;
    for (const std::size_t f : candidates) {
      if (owner[f] == kNone) c.frames.push_back(f);
    }
    if (c.frames.empty()) return;
    std::sort(c.frames.begin(), c.frames.end());
    for (const std::size_t f : c.frames) owner[f] = clusters.size();
    clusters.push_back(std::move(c));
  };

  // Step 1: intersections, seeded by turns and by crossings of distinct passes.
  struct Area {
    std::vector<std::size_t> seeds;
    Vec3 center = Vec3::Zero();
  };
  std::vector<Area> areas;
  for (const auto& r : detect_turn_regions(frames, params.yaw_window, params.yaw_threshold)) {
    Area a;
    for (std::size_t f = r.first; f <= r.last; ++f) a.seeds.push_back(f);
    areas.push_back(std::move(a));
  }
  for (auto& g : detect_crossings(frames, params.revisit_radius, params.min_time_gap, params.yaw_threshold)) {
    areas.push_back({std::move(g), Vec3::Zero()});
  }
  for (auto& a : areas) {
    for (const std::size_t f : a.seeds) a.center += frames[f].position();
    a.center /= static_cast<double>(a.seeds.size());
  }
  DisjointSets area_sets(areas.size());
  const double merge_dist = 2.0 * params.revisit_radius;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    for (std::size_t j = i + 1; j < areas.size(); ++j) {
      if ((areas[i].center - areas[j].center).norm() <= merge_dist) area_sets.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> merged;  // root -> area ids
  for (std::size_t i = 0; i < areas.size(); ++i) merged[area_sets.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> intersections;
  for (const auto& [root, ids] : merged) {
    std::vector<std::size_t> members;
    std::vector<Vec3> centers;
    for (const std::size_t id : ids) {
      members.insert(members.end(), areas[id].seeds.begin(), areas[id].seeds.end());
      centers.push_back(areas[id].center);
    }
    const double r2 = params.revisit_radius * params.revisit_radius;
    for (std::size_t f = 0; f < n; ++f) {
      for (const auto& c : centers) {
        if ((frames[f].position() - c).squaredNorm() <= r2) {
          members.push_back(f);
          break;
        }
      }
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    intersections.push_back(std::move(members));
  }
  std::sort(intersections.begin(), intersections.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (const auto& m : intersections) claim(ClusterKind::intersection, m);

  // Step 2: revisits, then long runs without revisits.
  for (const auto& g : detect_revisits(frames, params.revisit_radius, params.min_time_gap)) {
    claim(ClusterKind::revisit, g);
  }
  {
    std::vector<std::size_t> run;
    const auto flush = [&] {
      if (run.size() >= params.min_linear_len && !run.empty()) claim(ClusterKind::linear, run);
      run.clear();
    };
    for (std::size_t f = 0; f < n; ++f) {
      if (owner[f] == kNone) {
        run.push_back(f);
      } else {
        flush();
      }
    }
    flush();
  }

  if (clusters.empty()) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    claim(ClusterKind::linear, all);
  }

  // Order clusters by their first frame so "earlier" is well defined for tie-breaks.
  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return clusters[a].frames.front() < clusters[b].frames.front(); });
  std::vector<std::size_t> rank(clusters.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  std::vector<TrajectoryCluster> sorted;
  for (const std::size_t id : order) sorted.push_back(std::move(clusters[id]));
  clusters = std::move(sorted);
  for (auto& o : owner) {
    if (o != kNone) o = rank[o];
  }

  // Step 3: leftovers join the cluster with the nearest member in frame-index distance.
  std::vector<std::size_t> left(n, kNone), right(n, kNone);
  for (std::size_t f = 0, last = kNone; f < n; ++f) {
    if (owner[f] != kNone) last = f;
    left[f] = last;
  }
  for (std::size_t f = n, last = kNone; f-- > 0;) {
    if (owner[f] != kNone) last = f;
    right[f] = last;
  }
  std::vector<std::size_t> assign = owner;
  for (std::size_t f = 0; f < n; ++f) {
    if (owner[f] != kNone) continue;
    const std::size_t dl = left[f] == kNone ? kNone : f - left[f];
    const std::size_t dr = right[f] == kNone ? kNone : right[f] - f;
    std::size_t target;
    if (dl < dr) {
      target = owner[left[f]];
    } else if (dr < dl) {
      target = owner[right[f]];
    } else {
      target = std::min(owner[left[f]], owner[right[f]]);
    }
    assign[f] = target;
  }
  for (auto& c : clusters) c.frames.clear();
  for (std::size_t f = 0; f < n; ++f) clusters[assign[f]].frames.push_back(f);

  ClusterPartition partition;
  partition.clusters = std::move(clusters);
  partition.reindex(n);
  return partition;
}

void ClusterPartition::reindex(std::size_t n) {
  cluster_of.assign(n, static_cast<std::size_t>(-1));
  subcluster_of.assign(n, static_cast<std::size_t>(-1));
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    auto& cl = clusters[c];
    std::sort(cl.frames.begin(), cl.frames.end());
    cl.subclusters = decompose_subclusters(cl.frames);
    for (std::size_t s = 0; s < cl.subclusters.size(); ++s) {
      for (const std::size_t f : cl.subclusters[s]) {
        if (f >= n) throw Error(Errc::validation, "cluster frame index out of range");
        cluster_of[f] = c;
        subcluster_of[f] = s;
      }
    }
  }
}

void ClusterPartition::validate(std::size_t n) const {
  std::vector<int> seen(n, 0);
  for (const auto& c : clusters) {
    if (c.frames.empty() || c.subclusters.empty()) throw Error(Errc::validation, "empty cluster");
    std::vector<std::size_t> flat;
    for (const auto& s : c.subclusters) {
      if (s.empty()) throw Error(Errc::validation, "empty subcluster");
      for (std::size_t k = 1; k < s.size(); ++k) {
        if (s[k] != s[k - 1] + 1) throw Error(Errc::validation, "subcluster is not a consecutive run");
      }
      flat.insert(flat.end(), s.begin(), s.end());
    }
    for (std::size_t k = 1; k < c.subclusters.size(); ++k) {
      if (c.subclusters[k].front() <= c.subclusters[k - 1].back() + 1) {
        throw Error(Errc::validation, "subclusters are not maximal or not ordered");
      }
    }
    if (flat != c.frames) throw Error(Errc::validation, "subclusters do not cover their cluster");
    for (const std::size_t f : c.frames) {
      if (f >= n) throw Error(Errc::validation, "frame index out of range");
      ++seen[f];
    }
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (seen[f] != 1) throw Error(Errc::validation, "frame " + std::to_string(f) + " is not in exactly one cluster");
  }
}

std::string ClusterPartition::to_table() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < clusters.size(); ++c) out << "# cluster " << c << ' ' << to_string(clusters[c].kind) << '\n';
  out << "# frame_index cluster_id subcluster_id\n";
  for (std::size_t f = 0; f < cluster_of.size(); ++f) out << f << ' ' << cluster_of[f] << ' ' << subcluster_of[f] << '\n';
  return out.str();
}

ClusterPartition ClusterPartition::from_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::size_t, ClusterKind> kinds;
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, word, kind;
      std::size_t id = 0;
      ls >> hash >> word;
      if (word == "cluster" && (ls >> id >> kind)) {
        kinds[id] = kind == "intersection" ? ClusterKind::intersection
                    : kind == "revisit"    ? ClusterKind::revisit
                                           : ClusterKind::linear;
      }
      continue;
    }
    std::size_t f = 0, c = 0, s = 0;
    if (!(ls >> f >> c >> s)) throw Error(Errc::format, "bad partition row: " + line);
    if (f != rows.size()) throw Error(Errc::format, "partition rows must list frames in order");
    rows.emplace_back(f, c);
  }
  ClusterPartition p;
  for (const auto& [f, c] : rows) {
    if (c >= p.clusters.size()) p.clusters.resize(c + 1);
    p.clusters[c].frames.push_back(f);
  }
  for (std::size_t c = 0; c < p.clusters.size(); ++c) {
    if (const auto it = kinds.find(c); it != kinds.end()) p.clusters[c].kind = it->second;
  }
  p.reindex(rows.size());
  p.validate(rows.size());
  return p;
}

}  // namespace moslabel
