#include "moslabel/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "moslabel/errors.hpp"

namespace moslabel {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Pose mount(double x, double y, double z, double yaw_deg) { return Pose::from_yaw(yaw_deg * kDeg, Vec3(x, y, z)); }

std::mt19937_64 frame_rng(std::uint64_t seed, SensorId sensor, std::size_t frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index_of(sensor)), static_cast<std::uint32_t>(frame),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(frame) >> 32)};
  return std::mt19937_64(seq);
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

/// Segment index k with times[k] <= t < times[k+1], clamped.
template <typename T>
std::size_t segment_of(const std::vector<T>& pts, double t) {
  std::size_t k = 0;
  while (k + 2 < pts.size() && t >= pts[k + 1].t) ++k;
  return k;
}

Vec3 position_at(const std::vector<TimedPoint>& pts, double t) {
  if (pts.size() == 1 || t <= pts.front().t) return pts.front().p;
  if (t >= pts.back().t) return pts.back().p;
  const std::size_t k = segment_of(pts, t);
  const double l = (t - pts[k].t) / (pts[k + 1].t - pts[k].t);
  return (1.0 - l) * pts[k].p + l * pts[k + 1].p;
}

bool ray_box(const Vec3& o, const Vec3& d, const Aabb& box, double& t_hit) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < box.min_corner[a] || o[a] > box.max_corner[a]) return false;
      continue;
    }
    double ta = (box.min_corner[a] - o[a]) / d[a];
    double tb = (box.max_corner[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  if (t1 < 0.0) return false;
  t_hit = t0 >= 0.0 ? t0 : t1;
  return true;
}

bool ray_plane(const Vec3& o, const Vec3& d, const ScenePlane& plane, double& t_hit) {
  const double denom = plane.normal.dot(d);
  if (std::abs(denom) < 1e-12) return false;
  const double t = plane.normal.dot(plane.point - o) / denom;
  if (t <= 0.0) return false;
  if (plane.radius && (o + t * d - plane.point).norm() > *plane.radius) return false;
  t_hit = t;
  return true;
}

Vec3 read_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::format, std::string("scene spec: ") + what + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; })) {
      throw Error(Errc::format, "scene spec: unknown key '" + k + "' in " + where);
    }
  }
}

std::vector<TimedPoint> read_waypoints(const json& j, const std::string& where) {
  std::vector<TimedPoint> out;
  for (const auto& w : j) {
    reject_unknown(w, {"t", "p", "yaw"}, where);
    TimedPoint tp{w.at("t").get<double>(), read_vec3(w.at("p"), "p"), std::nullopt};
    if (w.contains("yaw")) tp.yaw = w["yaw"].get<double>();
    out.push_back(tp);
  }
  return out;
}

}  // namespace

SensorProfile default_profile(SensorId id) {
  SensorProfile p;
  p.id = id;
  switch (id) {
    case SensorId::aeva:
      p.pattern = ScanPattern::grid;
      p.h_min_deg = -60.0, p.h_max_deg = 60.0, p.v_min_deg = -15.0, p.v_max_deg = 15.0;
      p.rows = 64, p.columns = 300, p.max_range = 150.0, p.time_offset = 0.02;
      p.extrinsic = mount(0.6, 0.25, -0.15, 10.0);
      break;
    case SensorId::livox:
      p.pattern = ScanPattern::rosette;
      p.h_min_deg = -35.2, p.h_max_deg = 35.2, p.v_min_deg = -38.6, p.v_max_deg = 38.6;
      p.rows = 1, p.columns = 10000, p.max_range = 150.0, p.time_offset = 0.03;
      p.extrinsic = mount(0.6, -0.25, -0.15, -10.0);
      break;
    case SensorId::ouster:
      p.pattern = ScanPattern::spinning;
      p.v_min_deg = -11.25, p.v_max_deg = 11.25;
      p.rows = 128, p.columns = 1024, p.max_range = 120.0, p.time_offset = 0.0;
      break;
    case SensorId::velodyne:
      p.pattern = ScanPattern::spinning;
      p.v_min_deg = -15.0, p.v_max_deg = 15.0;
      p.rows = 16, p.columns = 900, p.max_range = 100.0, p.time_offset = 0.05;
      p.extrinsic = mount(0.0, 0.0, 0.25, 0.0);
      break;
  }
  return p;
}

Aabb MoverSpec::box_at(double t) const {
  const Vec3 p = position_at(waypoints, t);
  Aabb b;
  b.min_corner = p - Vec3(0.5 * extent.x(), 0.5 * extent.y(), 0.0);
  b.max_corner = p + Vec3(0.5 * extent.x(), 0.5 * extent.y(), extent.z());
  return b;
}

SceneSpec::SceneSpec() {
  for (const SensorId id : kAllSensors) sensors[index_of(id)] = default_profile(id);
}

void SceneSpec::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(Errc::validation, "scene spec: " + msg); };
  const auto inside = [&](const Vec3& p) {
    return (p.array() >= bounds_min.array()).all() && (p.array() <= bounds_max.array()).all();
  };
  if (!(frame_rate > 0.0)) fail("frame_rate must be positive");
  if (ego.empty()) fail("ego trajectory is empty");
  for (std::size_t k = 0; k < ego.size(); ++k) {
    if (!inside(ego[k].p)) fail("ego waypoint " + std::to_string(k) + " outside bounds");
    if (k > 0 && !(ego[k].t > ego[k - 1].t)) fail("ego waypoint times must increase");
  }
  for (std::size_t m = 0; m < movers.size(); ++m) {
    const auto& mv = movers[m];
    if (mv.waypoints.empty()) fail("mover " + std::to_string(m) + " has no waypoints");
    if ((mv.extent.array() <= 0.0).any()) fail("mover " + std::to_string(m) + " has a non-positive extent");
    for (std::size_t k = 0; k < mv.waypoints.size(); ++k) {
      if (k > 0 && !(mv.waypoints[k].t > mv.waypoints[k - 1].t)) fail("mover waypoint times must increase");
      const Aabb b = mv.box_at(mv.waypoints[k].t);
      if (!inside(b.min_corner) || !inside(b.max_corner)) fail("mover " + std::to_string(m) + " leaves the world bounds");
    }
    if (mv.first_frame > mv.last_frame) fail("mover " + std::to_string(m) + " has an empty active range");
  }
  for (const auto& p : planes) {
    if (p.normal.norm() < 1e-9) fail("plane normal is zero");
  }
  for (const auto& s : sensors) {
    if (s.rows == 0 || s.columns == 0) fail("sensor with no rays");
    if (!(s.max_range > s.min_range) || s.min_range < 0.0) fail("sensor range interval is empty");
    if (!(s.h_max_deg > s.h_min_deg) || !(s.v_max_deg >= s.v_min_deg)) fail("sensor field of view is empty");
  }
  for (const auto& w : recording) {
    if (w.end < w.begin) fail("recording window ends before it begins");
  }
  if (frame_times().empty()) fail("no frames");
}

std::vector<double> SceneSpec::frame_times() const {
  std::vector<TimeWindow> windows = recording;
  if (windows.empty() && !ego.empty()) windows.push_back({ego.front().t, ego.back().t});
  std::vector<double> times;
  for (const auto& w : windows) {
    for (std::size_t k = 0;; ++k) {
      const double t = w.begin + static_cast<double>(k) / frame_rate;
      if (t > w.end + 1e-9) break;
      if (times.empty() || t > times.back() + 1e-9) times.push_back(t);
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

Pose SceneSpec::ego_pose(double t) const {
  const Vec3 p = position_at(ego, t);
  if (ego.size() == 1) return Pose::from_yaw(ego.front().yaw.value_or(0.0), p);
  const std::size_t k = segment_of(ego, std::clamp(t, ego.front().t, ego.back().t));
  const TimedPoint& a = ego[k];
  const TimedPoint& b = ego[k + 1];
  double yaw = 0.0;
  if (a.yaw && b.yaw) {
    const double l = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    double d = std::remainder(*b.yaw - *a.yaw, 2.0 * std::numbers::pi);
    yaw = *a.yaw + l * d;
  } else {
    const Vec3 dir = b.p - a.p;
    yaw = std::hypot(dir.x(), dir.y()) > 1e-9 ? std::atan2(dir.y(), dir.x()) : a.yaw.value_or(0.0);
  }
  return Pose::from_yaw(yaw, p);
}

SceneSpec parse_scene_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("scene spec: ") + e.what());
  }
  reject_unknown(j, {"name", "seed", "frame_rate", "bounds", "planes", "boxes", "movers", "ego", "recording", "sensors",
                     "range_noise"},
                 "scene");
  SceneSpec s;
  try {
    s.name = j.value("name", s.name);
    s.seed = j.value("seed", s.seed);
    s.frame_rate = j.value("frame_rate", s.frame_rate);
    s.range_noise = j.value("range_noise", s.range_noise);
    if (j.contains("bounds")) {
      s.bounds_min = read_vec3(j["bounds"].at("min"), "bounds.min");
      s.bounds_max = read_vec3(j["bounds"].at("max"), "bounds.max");
    }
    for (const auto& p : j.value("planes", json::array())) {
      reject_unknown(p, {"point", "normal", "radius"}, "plane");
      ScenePlane plane{read_vec3(p.at("point"), "plane.point"), read_vec3(p.at("normal"), "plane.normal").normalized(),
                       std::nullopt};
      if (p.contains("radius")) plane.radius = p["radius"].get<double>();
      s.planes.push_back(plane);
    }
    for (const auto& b : j.value("boxes", json::array())) {
      reject_unknown(b, {"min", "max"}, "box");
      s.boxes.push_back({read_vec3(b.at("min"), "box.min"), read_vec3(b.at("max"), "box.max")});
    }
    for (const auto& m : j.value("movers", json::array())) {
      reject_unknown(m, {"extent", "waypoints", "frames"}, "mover");
      MoverSpec mv;
      if (m.contains("extent")) mv.extent = read_vec3(m["extent"], "mover.extent");
      mv.waypoints = read_waypoints(m.at("waypoints"), "mover waypoint");
      if (m.contains("frames")) {
        mv.first_frame = m["frames"].at(0).get<std::size_t>();
        mv.last_frame = m["frames"].at(1).get<std::size_t>();
      }
      s.movers.push_back(std::move(mv));
    }
    s.ego = read_waypoints(j.at("ego"), "ego waypoint");
    for (const auto& w : j.value("recording", json::array())) s.recording.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    if (j.contains("sensors")) {
      for (const auto& [name, o] : j["sensors"].items()) {
        SensorProfile& p = s.sensors[index_of(parse_sensor(name))];
        reject_unknown(o, {"rows", "columns", "min_range", "max_range", "time_offset", "h_fov", "v_fov"}, "sensor " + name);
        p.rows = o.value("rows", p.rows);
        p.columns = o.value("columns", p.columns);
        p.min_range = o.value("min_range", p.min_range);
        p.max_range = o.value("max_range", p.max_range);
        p.time_offset = o.value("time_offset", p.time_offset);
        if (o.contains("h_fov")) p.h_min_deg = o["h_fov"].at(0), p.h_max_deg = o["h_fov"].at(1);
        if (o.contains("v_fov")) p.v_min_deg = o["v_fov"].at(0), p.v_max_deg = o["v_fov"].at(1);
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format, std::string("scene spec: ") + e.what());
  }
  if (s.planes.empty()) s.planes.push_back({Vec3::Zero(), Vec3::UnitZ(), std::nullopt});
  s.validate();
  return s;
}

SceneSpec read_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

SensorFrame generate_sensor_frame(const SceneSpec& spec, SensorId sensor, std::size_t frame) {
  const std::vector<double> times = spec.frame_times();
  if (frame >= times.size()) throw Error(Errc::invalid_parameter, "generate_sensor_frame: frame out of range");
  const SensorProfile& prof = spec.sensors[index_of(sensor)];
  std::mt19937_64 rng = frame_rng(spec.seed, sensor, frame);

  SensorFrame out;
  out.timestamp = times[frame] + prof.time_offset;
  out.body_pose = spec.ego_pose(out.timestamp);
  const Pose world_from_sensor = compose(out.body_pose, prof.extrinsic);
  const Vec3 origin = world_from_sensor.translation;

  // objects that can be reached at all this frame
  std::vector<Aabb> movers;
  std::vector<std::int32_t> mover_ids;
  for (std::size_t m = 0; m < spec.movers.size(); ++m) {
    const auto& mv = spec.movers[m];
    if (frame < mv.first_frame || frame > mv.last_frame) continue;
    movers.push_back(mv.box_at(out.timestamp));
    mover_ids.push_back(static_cast<std::int32_t>(m));
  }

  std::vector<Vec3> dirs;
  const double h0 = prof.h_min_deg * kDeg, h1 = prof.h_max_deg * kDeg;
  const double v0 = prof.v_min_deg * kDeg, v1 = prof.v_max_deg * kDeg;
  const auto dir_of = [](double az, double el) {
    return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  };
  switch (prof.pattern) {
    case ScanPattern::spinning: {
      for (std::size_t c = 0; c < prof.columns; ++c) {
        const double az = h0 + (h1 - h0) * static_cast<double>(c) / static_cast<double>(prof.columns);
        for (std::size_t r = 0; r < prof.rows; ++r) {
          const double el = prof.rows == 1 ? v0 : v0 + (v1 - v0) * static_cast<double>(r) / static_cast<double>(prof.rows - 1);
          dirs.push_back(dir_of(az, el));
        }
      }
      break;
    }
    case ScanPattern::grid: {
      std::uniform_real_distribution<double> jitter(-0.5, 0.5);
      const double da = (h1 - h0) / static_cast<double>(prof.columns);
      const double de = (v1 - v0) / static_cast<double>(prof.rows);
      for (std::size_t r = 0; r < prof.rows; ++r) {
        for (std::size_t c = 0; c < prof.columns; ++c) {
          const double az = std::clamp(h0 + (static_cast<double>(c) + 0.5 + jitter(rng)) * da, h0, h1);
          const double el = std::clamp(v0 + (static_cast<double>(r) + 0.5 + jitter(rng)) * de, v0, v1);
          dirs.push_back(dir_of(az, el));
        }
      }
      break;
    }
    case ScanPattern::rosette: {
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      const double p0 = phase(rng), p1 = phase(rng);
      const double hc = 0.5 * (h0 + h1), hr = 0.5 * (h1 - h0);
      const double vc = 0.5 * (v0 + v1), vr = 0.5 * (v1 - v0);
      for (std::size_t i = 0; i < prof.columns; ++i) {
        const double s = 2.0 * std::numbers::pi * 17.0 * static_cast<double>(i) / static_cast<double>(prof.columns);
        // petal pattern: radius oscillates faster than the rotation
        const double rad = std::sin(7.3 * s + p0);
        const double ang = s + p1;
        dirs.push_back(dir_of(hc + hr * rad * std::cos(ang), vc + vr * rad * std::sin(ang)));
      }
      break;
    }
  }

  std::normal_distribution<double> noise(0.0, spec.range_noise > 0.0 ? spec.range_noise : 1.0);
  for (const Vec3& ds : dirs) {
    const Vec3 d = world_from_sensor.rotation * ds;
    double best = std::numeric_limits<double>::infinity();
    std::int32_t hit_mover = -1;
    double t = 0.0;
    for (const auto& plane : spec.planes) {
      if (ray_plane(origin, d, plane, t) && t >= prof.min_range && t < best) best = t, hit_mover = -1;
    }
    for (const auto& box : spec.boxes) {
      if (ray_box(origin, d, box, t) && t >= prof.min_range && t < best) best = t, hit_mover = -1;
    }
    for (std::size_t m = 0; m < movers.size(); ++m) {
      if (ray_box(origin, d, movers[m], t) && t >= prof.min_range && t < best) best = t, hit_mover = mover_ids[m];
    }
    if (!(best <= prof.max_range)) continue;
    double range = best;
    if (spec.range_noise > 0.0) range = std::clamp(range + noise(rng), prof.min_range, prof.max_range);
    out.cloud.push_back(ds * range, static_cast<float>(hit_mover >= 0 ? 0.8 : 0.3));
    out.hit_range.push_back(range);
    out.mover.push_back(hit_mover);
    out.labels.push_back(hit_mover >= 0 ? LabelValue::make(MosClass::dynamic, static_cast<std::uint32_t>(hit_mover) + 1)
                                        : LabelValue::make(MosClass::static_));
  }
  return out;
}

GroundTruthBundle generate_scene(const SceneSpec& spec) {
  spec.validate();
  GroundTruthBundle b;
  b.reference_times = spec.frame_times();
  for (const double t : b.reference_times) b.reference_poses.push_back(spec.ego_pose(t));
  for (const SensorId id : kAllSensors) {
    for (std::size_t k = 0; k < b.reference_times.size(); ++k) b.frames[index_of(id)].push_back(generate_sensor_frame(spec, id, k));
  }
  return b;
}

SequenceManifest write_bundle(const SceneSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const fs::path dir = fs::absolute(out_dir);
  const std::vector<double> times = spec.frame_times();
  SequenceManifest m;
  m.name = spec.name;
  m.reference = SensorId::ouster;
  for (const SensorId id : kAllSensors) {
    const std::string name(sensor_name(id));
    fs::create_directories(dir / name);
    m.extrinsics[index_of(id)] = spec.sensors[index_of(id)].extrinsic;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const SensorFrame f = generate_sensor_frame(spec, id, k);
      const fs::path scan = dir / name / (frame_file_stem(k) + ".bin");
      const fs::path label = dir / name / (frame_file_stem(k) + ".label");
      write_scan(f.cloud, scan);
      write_labels(f.labels, label);
      m.sensor(id).push_back({scan, f.timestamp, f.body_pose, label});
    }
  }
  std::vector<Pose> gt;
  for (const double t : times) gt.push_back(spec.ego_pose(t));
  write_poses(gt, dir / "gt_poses.txt");
  write_manifest(m, dir / "manifest.json");
  return m;
}

Vec3 PoseCorruption::offset_at(double t) const {
  if (drift == 0.0) return Vec3::Zero();
  if (ramp_end <= ramp_begin) return t >= ramp_end ? Vec3(drift * direction) : Vec3::Zero();
  return drift * smoothstep((t - ramp_begin) / (ramp_end - ramp_begin)) * direction;
}

Pose PoseCorruption::apply(const Pose& pose, double t) const {
  Pose p = pose;
  p.translation += offset_at(t);
  return p;
}

PoseCorruption plan_corruption(std::span<const Pose> poses, std::span<const double> times, double drift,
                               std::uint64_t seed, const ClusterParams& clustering) {
  if (drift < 0.0) throw Error(Errc::invalid_parameter, "corrupt_poses: drift must be non-negative");
  if (poses.size() != times.size()) throw Error(Errc::count_mismatch, "corrupt_poses: poses and times differ in length");
  std::mt19937_64 rng(seed);
  const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  PoseCorruption c;
  c.direction = Vec3(std::cos(angle), std::sin(angle), 0.0);
  c.drift = drift;
  std::optional<std::size_t> onset;
  if (!poses.empty()) {
    for (const auto& cl : cluster_trajectory(make_trajectory(poses, times), clustering).clusters) {
      if (cl.subclusters.size() < 2) continue;
      const std::size_t f = cl.subclusters[1].front();
      if (!onset || f < *onset) onset = f;
    }
  }
  if (!onset) {
    spdlog::warn("corrupt_poses: trajectory never revisits, leaving poses unchanged");
    c.drift = 0.0;
    return c;
  }
  c.ramp_begin = times[*onset - 1];
  c.ramp_end = times[*onset];
  return c;
}

std::vector<Pose> corrupt_poses(std::span<const Pose> poses, std::span<const double> times,
                                const PoseCorruption& corruption) {
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) out.push_back(corruption.apply(poses[k], times[k]));
  return out;
}

void corrupt_manifest(SequenceManifest& manifest, const PoseCorruption& corruption) {
  for (auto& scans : manifest.scans) {
    for (auto& s : scans) s.pose = corruption.apply(s.pose, s.timestamp);
  }
}

std::vector<DetectionEdit> degrade_detections(std::span<FrameDetection> detections, const DegradeOptions& options) {
  std::vector<DetectionEdit> edits;
  const auto relabel = [](FrameDetection& d, std::size_t k, Verdict v) {
    d.verdicts[k].verdict = v;
    const MosClass c = v == Verdict::dynamic ? MosClass::dynamic : MosClass::static_;
    for (const auto i : d.instances[k].indices) d.annotation.classes[i] = c;
  };

  const std::set<std::size_t> drop(options.drop_frames.begin(), options.drop_frames.end());
  for (auto& d : detections) {
    if (!drop.contains(d.annotation.frame)) continue;
    for (std::size_t k = 0; k < d.instances.size(); ++k) {
      if (d.verdicts[k].verdict != Verdict::dynamic) continue;
      relabel(d, k, Verdict::static_);
      edits.push_back({DetectionEdit::Kind::dropped, d.annotation.frame, d.instances[k].id});
    }
  }

  const auto flip = [&](std::size_t frame, std::uint32_t instance) {
    for (auto& d : detections) {
      if (d.annotation.frame != frame) continue;
      for (std::size_t k = 0; k < d.instances.size(); ++k) {
        if (d.instances[k].id != instance || d.verdicts[k].verdict != Verdict::static_) continue;
        relabel(d, k, Verdict::dynamic);
        edits.push_back({DetectionEdit::Kind::injected, frame, instance});
        return true;
      }
    }
    return false;
  };
  for (const auto& [frame, instance] : options.inject_explicit) {
    if (!flip(frame, instance)) {
      throw Error(Errc::invalid_parameter, "degrade_detections: no static instance " + std::to_string(instance) +
                                               " in frame " + std::to_string(frame));
    }
  }
  if (options.inject_static_fp > 0) {
    std::vector<std::pair<std::size_t, std::uint32_t>> candidates;
    for (const auto& d : detections) {
      for (std::size_t k = 0; k < d.instances.size(); ++k) {
        if (d.verdicts[k].verdict == Verdict::static_) candidates.emplace_back(d.annotation.frame, d.instances[k].id);
      }
    }
    std::mt19937_64 rng(options.seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    if (candidates.size() < options.inject_static_fp) {
      throw Error(Errc::invalid_parameter, "degrade_detections: not enough static instances to inject");
    }
    for (std::size_t k = 0; k < options.inject_static_fp; ++k) flip(candidates[k].first, candidates[k].second);
  }
  return edits;
}

}  // namespace moslabel
