#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "moslabel/errors.hpp"
#include "moslabel/pipeline.hpp"

namespace moslabel {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Setter = std::function<void(const json&)>;

void read_section(const json& j, const std::string& section, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw Error(Errc::configuration, "section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(Errc::configuration, "unknown key '" + section + "." + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(Errc::configuration, "bad value for '" + section + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_deg(double& radians) {
  return [&radians](const json& v) { radians = v.get<double>() * kDeg; };
}

// rounded so a degree value survives the radian round trip unchanged
double to_deg(double radians) { return std::round(radians / kDeg * 1e9) / 1e9; }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::configuration, "parameter out of range: " + what);
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::sync: return "sync";
    case Stage::cluster: return "cluster";
    case Stage::correct: return "correct";
    case Stage::detect: return "detect";
    case Stage::track: return "track";
    case Stage::export_: return "export";
    case Stage::eval: return "eval";
  }
  return "sync";
}

Stage parse_stage(std::string_view name) {
  for (const Stage s : kAllStages) {
    if (name == stage_name(s)) return s;
  }
  throw Error(Errc::configuration, "unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> parse_stage_list(std::string_view list) {
  std::vector<Stage> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string_view item = list.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_stage(item));
    start = comma + 1;
  }
  return out;
}

void PipelineConfig::validate() const {
  require(sync.max_sync_gap > 0.0, "sync.max_sync_gap must be > 0");

  require(cluster.yaw_window >= 2, "traj_cluster.yaw_window must be >= 2");
  require(cluster.yaw_threshold > 0.0 && cluster.yaw_threshold < std::numbers::pi,
          "traj_cluster.yaw_threshold_deg must be in (0, 180)");
  require(cluster.revisit_radius > 0.0, "traj_cluster.revisit_radius must be > 0");
  require(cluster.min_time_gap > 0.0, "traj_cluster.min_time_gap must be > 0");
  require(cluster.min_linear_len >= 1, "traj_cluster.min_linear_len must be >= 1");

  const IcpParams& icp = correct.icp;
  require(correct.map_voxel > 0.0, "pose_correction.map_voxel must be > 0");
  require(icp.max_iterations >= 1, "pose_correction.max_iterations must be >= 1");
  require(icp.initial_gate > 0.0, "pose_correction.initial_gate must be > 0");
  require(icp.min_gate > 0.0 && icp.min_gate <= icp.initial_gate, "pose_correction.min_gate must be in (0, initial_gate]");
  require(icp.update_tolerance > 0.0, "pose_correction.update_tolerance must be > 0");
  require(icp.convergence_residual > 0.0, "pose_correction.convergence_residual must be > 0");
  require(icp.normal_neighbors >= 5, "pose_correction.normal_neighbors must be >= 5");
  require(icp.min_points >= 6, "pose_correction.min_points must be >= 6");

  const GroundParams& g = detect.ground;
  require(g.cell_size > 0.0, "mos_detect.ground_cell_size must be > 0");
  require(g.seed_fraction > 0.0 && g.seed_fraction <= 1.0, "mos_detect.ground_seed_fraction must be in (0, 1]");
  require(g.distance_threshold > 0.0, "mos_detect.ground_threshold must be > 0");
  require(g.max_tilt > 0.0 && g.max_tilt < 0.5 * std::numbers::pi, "mos_detect.ground_max_tilt_deg must be in (0, 90)");
  require(detect.instance.voxel_size > 0.0, "mos_detect.instance_voxel must be > 0");
  require(detect.instance.min_points >= 1, "mos_detect.min_instance_points must be >= 1");
  require(detect.instance.max_diagonal > 0.0, "mos_detect.max_instance_diag must be > 0");
  const StaticMapParams& m = detect.map;
  require(m.voxel_size > 0.0, "mos_detect.map_voxel must be > 0");
  require(m.min_coverage >= 1, "mos_detect.min_coverage must be >= 1");
  require(m.rho_dynamic > 0.0 && m.rho_dynamic <= 1.0, "mos_detect.rho_dyn must be in (0, 1]");
  require(m.hit_neighborhood >= 0 && m.hit_neighborhood <= 3, "mos_detect.hit_neighborhood must be in [0, 3]");
  require(m.max_range > 0.0, "mos_detect.max_range must be > 0");
  require(m.bin_size > 0.0 && m.bin_size <= 10.0 * kDeg, "mos_detect.bin_size_deg must be in (0, 10]");
  require(m.visibility_tolerance >= 0.0, "mos_detect.visibility_tolerance must be >= 0");

  require(track.max_assoc_dist > 0.0, "track_filter.max_assoc_dist must be > 0");
  require(track.min_displacement >= 0.0, "track_filter.min_displacement must be >= 0");
  require(track.min_track_len >= 1, "track_filter.min_track_len must be >= 1");
  require(track.box_pad >= 0.0, "track_filter.box_pad must be >= 0");

  const SplitRatios& r = export_.ratios;
  require(r.train >= 0.0 && r.val >= 0.0 && r.test >= 0.0, "export ratios must be non-negative");
  require(std::abs(r.train + r.val + r.test - 1.0) < 1e-9, "export ratios must sum to 1");

  require(eval.voxel_size > 0.0, "eval.voxel_size must be > 0");
}

std::string PipelineConfig::section_json(Stage s) const {
  json j;
  switch (s) {
    case Stage::sync:
      j = {{"max_sync_gap", sync.max_sync_gap}, {"compensate_ego_motion", sync.compensate_ego_motion}};
      break;
    case Stage::cluster:
      j = {{"yaw_window", cluster.yaw_window},       {"yaw_threshold_deg", to_deg(cluster.yaw_threshold)},
           {"revisit_radius", cluster.revisit_radius}, {"min_time_gap", cluster.min_time_gap},
           {"min_linear_len", cluster.min_linear_len}};
      break;
    case Stage::correct:
      j = {{"map_voxel", correct.map_voxel},
           {"max_iterations", correct.icp.max_iterations},
           {"initial_gate", correct.icp.initial_gate},
           {"min_gate", correct.icp.min_gate},
           {"update_tolerance", correct.icp.update_tolerance},
           {"convergence_residual", correct.icp.convergence_residual},
           {"normal_neighbors", correct.icp.normal_neighbors},
           {"min_points", correct.icp.min_points},
           {"max_source_points", correct.icp.max_source_points}};
      break;
    case Stage::detect:
      j = {{"ground_cell_size", detect.ground.cell_size},
           {"ground_seed_fraction", detect.ground.seed_fraction},
           {"ground_threshold", detect.ground.distance_threshold},
           {"ground_min_cell_points", detect.ground.min_cell_points},
           {"ground_max_tilt_deg", to_deg(detect.ground.max_tilt)},
           {"instance_voxel", detect.instance.voxel_size},
           {"min_instance_points", detect.instance.min_points},
           {"max_instance_diag", detect.instance.max_diagonal},
           {"map_voxel", detect.map.voxel_size},
           {"min_coverage", detect.map.min_coverage},
           {"rho_dyn", detect.map.rho_dynamic},
           {"coverage_mode", detect.map.coverage == CoverageMode::visibility ? "visibility" : "fov"},
           {"hit_neighborhood", detect.map.hit_neighborhood},
           {"max_range", detect.map.max_range},
           {"bin_size_deg", to_deg(detect.map.bin_size)},
           {"visibility_tolerance", detect.map.visibility_tolerance}};
      break;
    case Stage::track:
      j = {{"max_assoc_dist", track.max_assoc_dist}, {"max_gap", track.max_gap},
           {"min_displacement", track.min_displacement}, {"min_track_len", track.min_track_len},
           {"box_pad", track.box_pad}, {"judge", track.judge}, {"augment", track.augment}};
      break;
    case Stage::export_:
      j = {{"train", export_.ratios.train}, {"val", export_.ratios.val}, {"test", export_.ratios.test}};
      if (export_.val_anchor) j["val_anchor"] = *export_.val_anchor;
      if (export_.test_anchor) j["test_anchor"] = *export_.test_anchor;
      break;
    case Stage::eval:
      j = {{"voxel_size", eval.voxel_size}, {"map_metrics", eval.map_metrics}};
      break;
  }
  return j.dump();
}

PipelineConfig parse_config(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::configuration, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::configuration, "config must be a JSON object");
  PipelineConfig c;
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base.empty() ? fs::path(p) : base / p; };

  std::string coverage = "visibility";
  std::optional<std::size_t> val_anchor, test_anchor;
  const std::map<std::string, std::function<void(const json&)>> sections{
      {"input", [&](const json& s) { read_section(s, "input", {{"manifest", [&](const json& v) { c.manifest = resolve(v.get<std::string>()); }}}); }},
      {"output", [&](const json& s) { read_section(s, "output", {{"dir", [&](const json& v) { c.out_dir = resolve(v.get<std::string>()); }}}); }},
      {"stages",
       [&](const json& s) {
         if (s.is_string()) {
           c.stages = parse_stage_list(s.get<std::string>());
         } else {
           for (const auto& x : s) c.stages.push_back(parse_stage(x.get<std::string>()));
         }
       }},
      {"sync",
       [&](const json& s) {
         read_section(s, "sync", {{"max_sync_gap", set(c.sync.max_sync_gap)},
                                  {"compensate_ego_motion", set(c.sync.compensate_ego_motion)}});
       }},
      {"traj_cluster",
       [&](const json& s) {
         read_section(s, "traj_cluster",
                      {{"yaw_window", set(c.cluster.yaw_window)},
                       {"yaw_threshold_deg", set_deg(c.cluster.yaw_threshold)},
                       {"revisit_radius", set(c.cluster.revisit_radius)},
                       {"min_time_gap", set(c.cluster.min_time_gap)},
                       {"min_linear_len", set(c.cluster.min_linear_len)}});
       }},
      {"pose_correction",
       [&](const json& s) {
         read_section(s, "pose_correction",
                      {{"map_voxel", set(c.correct.map_voxel)},
                       {"max_iterations", set(c.correct.icp.max_iterations)},
                       {"initial_gate", set(c.correct.icp.initial_gate)},
                       {"min_gate", set(c.correct.icp.min_gate)},
                       {"update_tolerance", set(c.correct.icp.update_tolerance)},
                       {"convergence_residual", set(c.correct.icp.convergence_residual)},
                       {"normal_neighbors", set(c.correct.icp.normal_neighbors)},
                       {"min_points", set(c.correct.icp.min_points)},
                       {"max_source_points", set(c.correct.icp.max_source_points)}});
       }},
      {"mos_detect",
       [&](const json& s) {
         read_section(s, "mos_detect",
                      {{"ground_cell_size", set(c.detect.ground.cell_size)},
                       {"ground_seed_fraction", set(c.detect.ground.seed_fraction)},
                       {"ground_threshold", set(c.detect.ground.distance_threshold)},
                       {"ground_min_cell_points", set(c.detect.ground.min_cell_points)},
                       {"ground_max_tilt_deg", set_deg(c.detect.ground.max_tilt)},
                       {"instance_voxel", set(c.detect.instance.voxel_size)},
                       {"min_instance_points", set(c.detect.instance.min_points)},
                       {"max_instance_diag", set(c.detect.instance.max_diagonal)},
                       {"map_voxel", set(c.detect.map.voxel_size)},
                       {"min_coverage", set(c.detect.map.min_coverage)},
                       {"rho_dyn", set(c.detect.map.rho_dynamic)},
                       {"coverage_mode", set(coverage)},
                       {"hit_neighborhood", set(c.detect.map.hit_neighborhood)},
                       {"max_range", set(c.detect.map.max_range)},
                       {"bin_size_deg", set_deg(c.detect.map.bin_size)},
                       {"visibility_tolerance", set(c.detect.map.visibility_tolerance)}});
       }},
      {"track_filter",
       [&](const json& s) {
         read_section(s, "track_filter",
                      {{"max_assoc_dist", set(c.track.max_assoc_dist)},
                       {"max_gap", set(c.track.max_gap)},
                       {"min_displacement", set(c.track.min_displacement)},
                       {"min_track_len", set(c.track.min_track_len)},
                       {"box_pad", set(c.track.box_pad)},
                       {"judge", set(c.track.judge)},
                       {"augment", set(c.track.augment)}});
       }},
      {"export",
       [&](const json& s) {
         read_section(s, "export",
                      {{"train", set(c.export_.ratios.train)},
                       {"val", set(c.export_.ratios.val)},
                       {"test", set(c.export_.ratios.test)},
                       {"val_anchor", [&](const json& v) { val_anchor = v.get<std::size_t>(); }},
                       {"test_anchor", [&](const json& v) { test_anchor = v.get<std::size_t>(); }}});
       }},
      {"eval",
       [&](const json& s) {
         read_section(s, "eval", {{"voxel_size", set(c.eval.voxel_size)}, {"map_metrics", set(c.eval.map_metrics)}});
       }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = sections.find(key);
    if (it == sections.end()) throw Error(Errc::configuration, "unknown config section '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(Errc::configuration, "bad value in section '" + key + "': " + e.what());
    }
  }
  if (coverage == "visibility") {
    c.detect.map.coverage = CoverageMode::visibility;
  } else if (coverage == "fov") {
    c.detect.map.coverage = CoverageMode::fov;
  } else {
    throw Error(Errc::configuration, "mos_detect.coverage_mode must be 'visibility' or 'fov'");
  }
  c.export_.val_anchor = val_anchor;
  c.export_.test_anchor = test_anchor;
  c.validate();
  return c;
}

PipelineConfig read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["input"] = {{"manifest", c.manifest.string()}};
  j["output"] = {{"dir", c.out_dir.string()}};
  json stages = json::array();
  for (const Stage s : c.stages) stages.push_back(stage_name(s));
  j["stages"] = stages;
  j["sync"] = json::parse(c.section_json(Stage::sync));
  j["traj_cluster"] = json::parse(c.section_json(Stage::cluster));
  j["pose_correction"] = json::parse(c.section_json(Stage::correct));
  j["mos_detect"] = json::parse(c.section_json(Stage::detect));
  j["track_filter"] = json::parse(c.section_json(Stage::track));
  j["export"] = json::parse(c.section_json(Stage::export_));
  j["eval"] = json::parse(c.section_json(Stage::eval));
  return j.dump(2);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::stage, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

fs::path StageCache::dir(Stage s, const std::string& key) const { return root_ / stage_name(s) / key; }

bool StageCache::complete(Stage s, const std::string& key) const { return fs::exists(dir(s, key) / ".complete"); }

fs::path StageCache::begin(Stage s, const std::string& key) const {
  const fs::path d = dir(s, key);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void StageCache::commit(Stage s, const std::string& key) const {
  std::ofstream(dir(s, key) / ".complete") << key << '\n';
}

}  // namespace moslabel
