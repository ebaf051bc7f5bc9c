#include "moslabel/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "moslabel/errors.hpp"

namespace moslabel {

using nlohmann::json;

namespace {

constexpr const char* kFormatVersion = "moslabel-cache-1";

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error(Errc::io, "cannot write " + p.string());
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

Verdict parse_verdict(const std::string& s) {
  if (s == "dynamic") return Verdict::dynamic;
  if (s == "static") return Verdict::static_;
  return Verdict::unlabeled;
}

TrackStatus parse_status(const std::string& s) {
  if (s == "moving") return TrackStatus::confirmed_moving;
  if (s == "static") return TrackStatus::rejected_static;
  return TrackStatus::pending;
}

/// Fingerprint of the inputs: manifest bytes plus size and modification time of every referenced file.
std::string input_fingerprint(const fs::path& manifest_path, const SequenceManifest& m) {
  std::string data = read_text(manifest_path);
  for (const auto& scans : m.scans) {
    for (const auto& s : scans) {
      for (const fs::path* p : {&s.path, s.label_path ? &*s.label_path : nullptr}) {
        if (!p || !fs::exists(*p)) continue;
        data += p->string();
        data += std::to_string(fs::file_size(*p));
        data += std::to_string(fs::last_write_time(*p).time_since_epoch().count());
      }
    }
  }
  return sha256_hex(data);
}

/// Labels written to the dataset: instance ids only on dynamic points.
std::vector<LabelValue> export_labels(const ScanAnnotation& a) {
  std::vector<LabelValue> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = LabelValue::make(a.classes[i], a.classes[i] == MosClass::dynamic ? a.instance[i] : 0);
  }
  return out;
}

class Runner {
 public:
  explicit Runner(const PipelineConfig& config)
      : config_(config), cache_(config.out_dir / "cache"), manifest_(read_manifest(config.manifest)) {
    keys_[Stage::sync] = key_of(Stage::sync, input_fingerprint(config.manifest, manifest_));
    keys_[Stage::cluster] = key_of(Stage::cluster, keys_[Stage::sync]);
    keys_[Stage::correct] = key_of(Stage::correct, keys_[Stage::cluster]);
    keys_[Stage::detect] = key_of(Stage::detect, keys_[Stage::correct]);
    keys_[Stage::track] = key_of(Stage::track, keys_[Stage::detect]);
    const fs::path log = edit_log_path(config);
    const std::string edits = fs::exists(log) ? read_text(log) : std::string();
    keys_[Stage::export_] = key_of(Stage::export_, keys_[Stage::track] + sha256_hex(edits));
    keys_[Stage::eval] = key_of(Stage::eval, keys_[Stage::export_]);
    loader_ = disk_scan_loader(manifest_);
  }

  const std::string& key(Stage s) const { return keys_.at(s); }
  const SequenceManifest& manifest() const { return manifest_; }
  const StageCache& cache() const { return cache_; }

  /// Makes sure a stage's output exists; computes it on a cache miss.
  void ensure(Stage s) {
    if (done_.contains(s)) return;
    if (cache_.complete(s, key(s))) {
      done_.insert(s);
      if (!recorded_.contains(s)) {
        records_.push_back({s, key(s), true, 0.0, read_counts(s)});
        recorded_.insert(s);
      }
      return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::string counts;
    try {
      const fs::path dir = cache_.begin(s, key(s));
      counts = compute(s, dir);
      write_text(dir / "counts.txt", counts);
      cache_.commit(s, key(s));
    } catch (const Error& e) {
      throw Error(e.code(), std::string("stage ") + stage_name(s) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::stage, std::string("stage ") + stage_name(s) + ": " + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("stage {} computed in {:.2f} s: {}", stage_name(s), secs, counts);
    done_.insert(s);
    records_.push_back({s, key(s), false, secs, counts});
    recorded_.insert(s);
  }

  std::vector<StageRecord> records() const { return records_; }

  // --- loaders (each reads from the committed cache directory) ---------------

  const std::vector<FrameQuadruple>& quads() {
    if (!quads_) {
      ensure(Stage::sync);
      const json j = json::parse(read_text(dir(Stage::sync) / "sync.json"));
      std::vector<FrameQuadruple> q;
      for (const auto& f : j.at("frames")) {
        FrameQuadruple fq;
        fq.reference_timestamp = f.at("timestamp").get<double>();
        for (std::size_t s = 0; s < kSensorCount; ++s) {
          fq.frames[s] = f.at("frames").at(s).get<std::size_t>();
          fq.timestamps[s] = f.at("timestamps").at(s).get<double>();
        }
        q.push_back(fq);
      }
      quads_ = std::move(q);
    }
    return *quads_;
  }

  std::size_t frame_count() { return quads().size(); }

  std::vector<Pose> body_poses() {
    std::vector<Pose> out;
    const auto& ref = manifest_.sensor(manifest_.reference);
    for (const auto& q : quads()) out.push_back(ref.at(q.frames[index_of(manifest_.reference)]).pose);
    return out;
  }

  std::vector<double> timestamps() {
    std::vector<double> out;
    for (const auto& q : quads()) out.push_back(q.reference_timestamp);
    return out;
  }

  SyncedScan synced(std::size_t frame) { return merge_scans(quads().at(frame), manifest_, loader_, config_.sync); }
  FrameCloudProvider clouds() {
    return [this](std::size_t f) { return synced(f).cloud; };
  }

  const ClusterPartition& partition() {
    if (!partition_) {
      ensure(Stage::cluster);
      partition_ = ClusterPartition::from_table(read_text(dir(Stage::cluster) / "partition.txt"));
    }
    return *partition_;
  }

  const std::vector<Pose>& corrected_poses() {
    if (!corrected_) {
      ensure(Stage::correct);
      corrected_ = read_poses(dir(Stage::correct) / "poses.txt");
    }
    return *corrected_;
  }

  std::vector<Vec3> world_points(std::size_t frame) {
    return transform_cloud(synced(frame).cloud, corrected_poses().at(frame)).points;
  }

  AnnotationMap read_annotations(Stage s) {
    ensure(s);
    AnnotationMap out;
    for (std::size_t k = 0; k < frame_count(); ++k) {
      const fs::path p = dir(s) / "labels" / (frame_file_stem(k) + ".label");
      const auto bytes = fs::file_size(p);
      out.emplace(k, ScanAnnotation::from_labels(k, read_labels(p, bytes / 4)));
    }
    return out;
  }

  std::vector<FrameDetection> detections() {
    AnnotationMap ann = read_annotations(Stage::detect);
    const json j = json::parse(read_text(dir(Stage::detect) / "detections.json"));
    std::vector<FrameDetection> out(frame_count());
    for (std::size_t k = 0; k < out.size(); ++k) {
      FrameDetection& d = out[k];
      d.annotation = std::move(ann.at(k));
      std::map<std::uint32_t, std::size_t> slot;
      for (const auto& ij : j.at("frames").at(k)) {
        Instance inst;
        inst.id = ij.at("id").get<std::uint32_t>();
        inst.centroid = json_vec(ij.at("centroid"));
        inst.box.min_corner = json_vec(ij.at("min"));
        inst.box.max_corner = json_vec(ij.at("max"));
        InstanceVerdict v;
        v.verdict = parse_verdict(ij.at("verdict").get<std::string>());
        v.rho = ij.at("rho").get<double>();
        v.eligible_voxels = ij.at("eligible").get<std::size_t>();
        slot[inst.id] = d.instances.size();
        d.instances.push_back(std::move(inst));
        d.verdicts.push_back(v);
      }
      for (std::uint32_t i = 0; i < d.annotation.size(); ++i) {
        const auto it = slot.find(d.annotation.instance[i]);
        if (it != slot.end()) d.instances[it->second].indices.push_back(i);
      }
    }
    return out;
  }

  fs::path dir(Stage s) const { return cache_.dir(s, key(s)); }

 private:
  std::string key_of(Stage s, const std::string& upstream) const {
    return sha256_hex(std::string(kFormatVersion) + '\n' + stage_name(s) + '\n' + config_.section_json(s) + '\n' +
                      upstream)
        .substr(0, 24);
  }

  std::string read_counts(Stage s) const {
    const fs::path p = dir(s) / "counts.txt";
    return fs::exists(p) ? read_text(p) : std::string();
  }

  std::string compute(Stage s, const fs::path& out) {
    switch (s) {
      case Stage::sync: return compute_sync(out);
      case Stage::cluster: return compute_cluster(out);
      case Stage::correct: return compute_correct(out);
      case Stage::detect: return compute_detect(out);
      case Stage::track: return compute_track(out);
      case Stage::export_: return compute_export(out);
      case Stage::eval: return compute_eval(out);
    }
    return {};
  }

  std::string compute_sync(const fs::path& out) {
    const std::size_t n = manifest_.sensor(manifest_.reference).size();
    if (n == 0) throw Error(Errc::empty_input, "reference sensor has no scans");
    json frames = json::array();
    for (std::size_t k = 0; k < n; ++k) {
      const FrameQuadruple q = match_frames(manifest_, k, config_.sync);
      json f;
      f["timestamp"] = q.reference_timestamp;
      f["frames"] = q.frames;
      f["timestamps"] = q.timestamps;
      frames.push_back(std::move(f));
    }
    write_text(out / "sync.json", json{{"frames", frames}}.dump() + "\n");
    return "frames=" + std::to_string(n);
  }

  std::string compute_cluster(const fs::path& out) {
    const auto poses = body_poses();
    const auto times = timestamps();
    const auto traj = make_trajectory(poses, times);
    const ClusterPartition p = cluster_trajectory(traj, config_.cluster);
    p.validate(poses.size());
    write_text(out / "partition.txt", p.to_table());
    std::size_t kinds[3] = {0, 0, 0};
    for (const auto& c : p.clusters) ++kinds[static_cast<int>(c.kind)];
    return "clusters=" + std::to_string(p.clusters.size()) + " intersection=" + std::to_string(kinds[0]) +
           " revisit=" + std::to_string(kinds[1]) + " linear=" + std::to_string(kinds[2]);
  }

  std::string compute_correct(const fs::path& out) {
    const auto poses = body_poses();
    CorrectionReport report;
    const auto corrected = correct_poses(partition(), poses, clouds(), config_.correct, &report);
    write_poses(corrected, out / "poses.txt");
    write_text(out / "report.txt", report.to_table());
    std::size_t failed = 0;
    for (const auto& e : report.entries) failed += e.icp.converged ? 0 : 1;
    return "icp_calls=" + std::to_string(report.icp_calls) + " not_converged=" + std::to_string(failed);
  }

  std::string compute_detect(const fs::path& out) {
    fs::create_directories(out / "labels");
    json frames = json::array();
    for (std::size_t k = 0; k < frame_count(); ++k) frames.push_back(json::array());
    std::size_t dynamic_points = 0, instances = 0, dynamic_instances = 0;
    for (const auto& cluster : partition().clusters) {
      const auto dets = detect_cluster(cluster.frames, clouds(), corrected_poses(), config_.detect);
      for (const FrameDetection& d : dets) {
        write_labels(d.annotation.to_labels(), out / "labels" / (frame_file_stem(d.annotation.frame) + ".label"));
        json& list = frames[d.annotation.frame];
        for (std::size_t i = 0; i < d.instances.size(); ++i) {
          const Instance& inst = d.instances[i];
          list.push_back({{"id", inst.id},
                          {"centroid", vec_json(inst.centroid)},
                          {"min", vec_json(inst.box.min_corner)},
                          {"max", vec_json(inst.box.max_corner)},
                          {"verdict", to_string(d.verdicts[i].verdict)},
                          {"rho", d.verdicts[i].rho},
                          {"eligible", d.verdicts[i].eligible_voxels}});
          dynamic_instances += d.verdicts[i].verdict == Verdict::dynamic ? 1 : 0;
        }
        instances += d.instances.size();
        dynamic_points += d.annotation.count(MosClass::dynamic);
      }
    }
    write_text(out / "detections.json", json{{"frames", frames}}.dump() + "\n");
    return "instances=" + std::to_string(instances) + " dynamic_instances=" + std::to_string(dynamic_instances) +
           " dynamic_points=" + std::to_string(dynamic_points);
  }

  std::string compute_track(const fs::path& out) {
    fs::create_directories(out / "labels");
    std::vector<FrameDetection> all = detections();
    std::vector<Track> tracks;
    std::vector<AugmentedBox> boxes;
    std::uint32_t next_id = 1;
    for (const auto& cluster : partition().clusters) {
      std::vector<FrameDetection> dets;
      for (const std::size_t f : cluster.frames) dets.push_back(std::move(all[f]));
      auto result = run_track_filter(dets, [this](std::size_t f) { return world_points(f); }, config_.track, next_id);
      next_id = result.next_track_id;
      for (auto& d : dets) all[d.annotation.frame] = std::move(d);
      tracks.insert(tracks.end(), result.tracks.begin(), result.tracks.end());
      boxes.insert(boxes.end(), result.boxes.begin(), result.boxes.end());
    }
    std::size_t dynamic_points = 0;
    for (const auto& d : all) {
      write_labels(d.annotation.to_labels(), out / "labels" / (frame_file_stem(d.annotation.frame) + ".label"));
      dynamic_points += d.annotation.count(MosClass::dynamic);
    }
    write_text(out / "tracks.txt", track_dump(tracks));
    json tj = json::array();
    std::size_t moving = 0;
    for (const Track& t : tracks) {
      json obs = json::array();
      for (const auto& o : t.observations) {
        obs.push_back({{"frame", o.frame}, {"instance", o.instance}, {"centroid", vec_json(o.centroid)},
                       {"min", vec_json(o.box.min_corner)}, {"max", vec_json(o.box.max_corner)}});
      }
      tj.push_back({{"id", t.id}, {"status", to_string(t.status)}, {"observations", obs}});
      moving += t.status == TrackStatus::confirmed_moving ? 1 : 0;
    }
    json bj = json::array();
    for (const auto& b : boxes) {
      bj.push_back({{"frame", b.frame}, {"track", b.track}, {"lambda", b.lambda}, {"min", vec_json(b.box.min_corner)},
                    {"max", vec_json(b.box.max_corner)}});
    }
    write_text(out / "tracks.json", json{{"tracks", tj}, {"boxes", bj}}.dump() + "\n");
    return "tracks=" + std::to_string(tracks.size()) + " moving=" + std::to_string(moving) +
           " augmented_boxes=" + std::to_string(boxes.size()) + " dynamic_points=" + std::to_string(dynamic_points);
  }

 public:
  AnnotationMap final_annotations() {
    const AnnotationMap base = read_annotations(Stage::track);
    const auto edits = read_edit_log(edit_log_path(config_));
    return apply_edits(base, edits);
  }

  void load_tracks(std::vector<Track>& tracks, std::vector<AugmentedBox>& boxes) {
    ensure(Stage::track);
    const json j = json::parse(read_text(dir(Stage::track) / "tracks.json"));
    for (const auto& tj : j.at("tracks")) {
      Track t;
      t.id = tj.at("id").get<std::uint32_t>();
      t.status = parse_status(tj.at("status").get<std::string>());
      for (const auto& o : tj.at("observations")) {
        t.observations.push_back({o.at("frame").get<std::size_t>(), o.at("instance").get<std::uint32_t>(),
                                  json_vec(o.at("centroid")), Aabb{json_vec(o.at("min")), json_vec(o.at("max"))}});
      }
      tracks.push_back(std::move(t));
    }
    for (const auto& b : j.at("boxes")) {
      boxes.push_back({b.at("frame").get<std::size_t>(), Aabb{json_vec(b.at("min")), json_vec(b.at("max"))},
                       b.at("track").get<std::uint32_t>(), b.at("lambda").get<double>()});
    }
  }

 private:
  std::string compute_export(const fs::path& out) {
    const auto edits = read_edit_log(edit_log_path(config_));
    const AnnotationMap final = final_annotations();

    std::array<std::vector<std::optional<std::vector<LabelValue>>>, kSensorCount> per_sensor;
    for (const SensorId id : kAllSensors) per_sensor[index_of(id)].resize(manifest_.sensor(id).size());
    for (std::size_t k = 0; k < frame_count(); ++k) {
      const SyncedScan s = synced(k);
      const SplitLabels split = split_labels(s, export_labels(final.at(k)));
      for (std::size_t i = 0; i < kSensorCount; ++i) per_sensor[i][split.frames[i]] = split.labels[i];
    }

    std::size_t files = 0;
    for (const SensorId id : kAllSensors) {
      auto& labels = per_sensor[index_of(id)];
      const auto& scans = manifest_.sensor(id);
      std::vector<std::size_t> unused;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j]) continue;
        unused.push_back(j);
        labels[j] = std::vector<LabelValue>(read_scan(scans[j].path).size(), LabelValue::make(MosClass::unlabeled));
      }
      if (!unused.empty()) {
        spdlog::warn("{}: {} scans matched no reference frame, exported as unlabeled", sensor_name(id), unused.size());
      }
      SensorSequence seq;
      seq.name = std::string(sensor_name(id));
      seq.frame_count = scans.size();
      seq.load_scan = [&scans](std::size_t j) { return read_scan(scans[j].path); };
      for (const auto& e : scans) seq.poses.push_back(e.pose);
      for (const SensorId other : kAllSensors) {
        seq.calib.push_back({std::string(sensor_name(other)),
                             manifest_.extrinsics[index_of(other)].value_or(Pose::identity())});
      }
      files += export_layout(seq, labels, out / "sequences").files.size();
    }

    std::optional<std::size_t> va = config_.export_.val_anchor, ta = config_.export_.test_anchor;
    if (!va && !ta) {
      std::vector<std::size_t> revisits;
      for (const auto& c : partition().clusters) {
        if (c.kind == ClusterKind::revisit) revisits.push_back(c.frames.front());
      }
      if (revisits.size() >= 2) {
        va = revisits[revisits.size() - 2];
        ta = revisits.back();
      }
    }
    SplitAssignment splits;
    try {
      splits = make_splits(frame_count(), config_.export_.ratios, va, ta);
    } catch (const Error& e) {
      if (config_.export_.val_anchor || config_.export_.test_anchor) throw;
      spdlog::warn("split anchors unusable ({}), placing val/test at the end", e.what());
      splits = make_splits(frame_count(), config_.export_.ratios);
    }
    const auto range = [](const std::vector<std::size_t>& v) {
      return v.empty() ? json::array() : json::array({v.front(), v.back()});
    };
    write_text(out / "splits.json", json{{"frames", frame_count()},
                                         {"train", splits.train},
                                         {"val", range(splits.val)},
                                         {"test", range(splits.test)}}
                                         .dump(1) +
                                         "\n");
    return "files=" + std::to_string(files) + " edits=" + std::to_string(edits.size()) +
           " train=" + std::to_string(splits.train.size()) + " val=" + std::to_string(splits.val.size()) +
           " test=" + std::to_string(splits.test.size());
  }

  std::string compute_eval(const fs::path& out) {
    ensure(Stage::export_);
    EvalReport report;
    report.sequence = manifest_.name;
    const fs::path exported = dir(Stage::export_) / "sequences";

    bool have_gt = true;
    for (const auto& scans : manifest_.scans) {
      for (const auto& s : scans) have_gt = have_gt && s.label_path.has_value();
    }
    if (!have_gt) {
      spdlog::warn("manifest has no ground-truth labels for every scan; skipping metrics");
      write_text(out / "report.txt", report.to_text());
      write_text(out / "report.csv", report.to_csv());
      write_text(out / "dynamic_ratio.csv", report.ratios_csv());
      return "skipped=no_ground_truth";
    }

    for (const SensorId id : kAllSensors) {
      const auto& scans = manifest_.sensor(id);
      for (std::size_t j = 0; j < scans.size(); ++j) {
        const fs::path pred_path = exported / std::string(sensor_name(id)) / "labels" / (frame_file_stem(j) + ".label");
        const auto pred = read_labels(pred_path, fs::file_size(pred_path) / 4);
        const auto gt = read_labels(*scans[j].label_path, pred.size());
        report.counts += confusion_counts(pred, gt);
      }
    }
    report.iou = iou_mos(report.counts);

    const AnnotationMap final = final_annotations();
    GroundTruthVoxelMap gt_map(config_.eval.voxel_size);
    std::vector<Vec3> cleaned;
    for (std::size_t k = 0; k < frame_count(); ++k) {
      const SyncedScan s = synced(k);
      SplitLabels gt_split;
      for (const SensorId id : kAllSensors) {
        const std::size_t i = index_of(id);
        gt_split.frames[i] = s.sources[i].frame;
        gt_split.labels[i] = read_labels(*manifest_.sensor(id)[s.sources[i].frame].label_path, s.sources[i].point_count);
      }
      const auto gt = merge_labels(s, gt_split);
      const auto pred = final.at(k).to_labels();
      report.ratios.push_back({k, s.cloud.empty() ? 0.0 : dynamic_ratio(pred), s.cloud.empty() ? 0.0 : dynamic_ratio(gt)});
      if (config_.eval.map_metrics) {
        const Pose& pose = corrected_poses().at(k);
        std::vector<Vec3> world;
        world.reserve(s.cloud.size());
        for (std::size_t i = 0; i < s.cloud.size(); ++i) {
          world.push_back(pose.apply(s.cloud.points[i]));
          if (!pred[i].is_dynamic()) cleaned.push_back(world.back());
        }
        gt_map.add_scan(world, gt);
      }
    }
    if (config_.eval.map_metrics) {
      try {
        report.map = gt_map.evaluate(cleaned);
      } catch (const Error& e) {
        if (e.code() != Errc::undefined_metric) throw;
        spdlog::warn("map metrics skipped: {}", e.what());
      }
    }
    write_text(out / "report.txt", report.to_text());
    write_text(out / "report.csv", report.to_csv());
    write_text(out / "dynamic_ratio.csv", report.ratios_csv());
    char buf[64];
    std::snprintf(buf, sizeof buf, "iou_mos=%.4f", report.iou);
    return buf;
  }

  const PipelineConfig& config_;
  StageCache cache_;
  SequenceManifest manifest_;
  ScanLoader loader_;
  std::map<Stage, std::string> keys_;
  std::set<Stage> done_;
  std::set<Stage> recorded_;
  std::vector<StageRecord> records_;
  std::optional<std::vector<FrameQuadruple>> quads_;
  std::optional<ClusterPartition> partition_;
  std::optional<std::vector<Pose>> corrected_;
};

EvalReport read_eval_report(const fs::path& dir) {
  // the report is regenerated from the CSV so cached runs return the same numbers
  EvalReport r;
  std::istringstream in(read_text(dir / "report.csv"));
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma != std::string::npos) kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  r.sequence = kv["sequence"];
  if (kv.contains("tp")) {
    r.counts = {std::stoull(kv["tp"]), std::stoull(kv["fp"]), std::stoull(kv["fn"]), std::stoull(kv["tn"])};
    r.iou = iou_mos(r.counts);
  }
  if (kv.contains("pr_percent")) {
    MapEvalResult m;
    m.pr = std::stod(kv["pr_percent"]);
    m.rr = std::stod(kv["rr_percent"]);
    m.f1 = std::stod(kv["f1"]);
    m.static_voxels = std::stoull(kv["static_voxels"]);
    m.dynamic_voxels = std::stoull(kv["dynamic_voxels"]);
    r.map = m;
  }
  return r;
}

void replace_symlink(const fs::path& target, const fs::path& link) {
  std::error_code ec;
  fs::remove_all(link, ec);
  fs::create_directory_symlink(fs::absolute(target), link);
}

}  // namespace

fs::path edit_log_path(const PipelineConfig& config) { return config.out_dir / "edits.jsonl"; }

std::string RunReport::to_text() const {
  std::string out;
  char buf[256];
  for (const auto& s : stages) {
    std::snprintf(buf, sizeof buf, "%-8s %-6s %8.2fs  %s\n", stage_name(s.stage), s.cached ? "cached" : "ran", s.seconds,
                  s.counts.c_str());
    out += buf;
  }
  if (eval) out += eval->to_text();
  return out;
}

RunReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  if (config.manifest.empty()) throw Error(Errc::configuration, "no input manifest configured");
  fs::create_directories(config.out_dir);
  Runner runner(config);

  std::vector<Stage> stages = config.stages.empty() ? std::vector<Stage>(kAllStages.begin(), kAllStages.end())
                                                     : config.stages;
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  for (const Stage s : stages) runner.ensure(s);

  RunReport report;
  report.stages = runner.records();
  if (std::find(stages.begin(), stages.end(), Stage::export_) != stages.end() ||
      std::find(stages.begin(), stages.end(), Stage::eval) != stages.end()) {
    report.export_dir = config.out_dir / "export";
    replace_symlink(runner.dir(Stage::export_) / "sequences", report.export_dir);
    fs::copy_file(runner.dir(Stage::export_) / "splits.json", config.out_dir / "splits.json",
                  fs::copy_options::overwrite_existing);
  }
  if (std::find(stages.begin(), stages.end(), Stage::eval) != stages.end()) {
    for (const char* f : {"report.txt", "report.csv", "dynamic_ratio.csv"}) {
      fs::copy_file(runner.dir(Stage::eval) / f, config.out_dir / f, fs::copy_options::overwrite_existing);
    }
    report.eval = read_eval_report(runner.dir(Stage::eval));
  }
  write_text(config.out_dir / "run_summary.txt", report.to_text());
  return report;
}

ReviewState load_review_state(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  Runner runner(config);
  ReviewState st;
  st.manifest = runner.manifest();
  st.quads = runner.quads();
  st.timestamps = runner.timestamps();
  st.annotations = runner.read_annotations(Stage::track);
  runner.load_tracks(st.tracks, st.boxes);
  st.edit_log = edit_log_path(config);
  st.sync = config.sync;
  return st;
}

}  // namespace moslabel
