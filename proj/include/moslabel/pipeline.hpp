#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moslabel/dataset_io.hpp"
#include "moslabel/edits.hpp"
#include "moslabel/eval.hpp"
#include "moslabel/mos_detect.hpp"
#include "moslabel/pose_correction.hpp"
#include "moslabel/sync.hpp"
#include "moslabel/track_filter.hpp"
#include "moslabel/traj_cluster.hpp"

namespace moslabel {

enum class Stage { sync, cluster, correct, detect, track, export_, eval };
inline constexpr std::array<Stage, 7> kAllStages = {Stage::sync,  Stage::cluster, Stage::correct, Stage::detect,
                                                    Stage::track, Stage::export_, Stage::eval};
const char* stage_name(Stage s);
Stage parse_stage(std::string_view name);
/// Comma-separated stage names.
std::vector<Stage> parse_stage_list(std::string_view list);

struct ExportConfig {
  SplitRatios ratios;
  std::optional<std::size_t> val_anchor;
  std::optional<std::size_t> test_anchor;
};

struct EvalConfig {
  double voxel_size = 0.2;
  bool map_metrics = true;
};

struct PipelineConfig {
  fs::path manifest;
  fs::path out_dir = "out";
  std::vector<Stage> stages;  // empty: all
  SyncOptions sync;
  ClusterParams cluster;
  CorrectionParams correct;
  DetectParams detect;
  TrackParams track;
  ExportConfig export_;
  EvalConfig eval;

  /// Throws a configuration error naming the first out-of-range parameter.
  void validate() const;
  /// Canonical JSON of one stage's parameters, defaults included.
  std::string section_json(Stage s) const;
};

/// Parses JSON sections `input`, `output`, `stages`, `sync`, `traj_cluster`, `pose_correction`, `mos_detect`,
/// `track_filter`, `export`, `eval`; unknown keys are configuration errors. Relative paths resolve against `base`.
PipelineConfig parse_config(const std::string& json_text, const fs::path& base = {});
PipelineConfig read_config(const fs::path& path);
std::string config_to_json(const PipelineConfig& config);

std::string sha256_hex(std::string_view data);

/// Content-addressed stage outputs under `<root>/<stage>/<key>/`; a directory counts once its marker is written.
class StageCache {
 public:
  explicit StageCache(fs::path root) : root_(std::move(root)) {}

  fs::path dir(Stage s, const std::string& key) const;
  bool complete(Stage s, const std::string& key) const;
  /// Fresh, empty staging directory for `key`.
  fs::path begin(Stage s, const std::string& key) const;
  void commit(Stage s, const std::string& key) const;

 private:
  fs::path root_;
};

struct StageRecord {
  Stage stage = Stage::sync;
  std::string key;
  bool cached = false;
  double seconds = 0.0;
  std::string counts;
};

struct RunReport {
  std::vector<StageRecord> stages;
  std::optional<EvalReport> eval;
  fs::path export_dir;

  std::string to_text() const;
};

/// Runs the requested stages (and whatever they depend on) in order, reusing cached outputs.
RunReport run_pipeline(const PipelineConfig& config);

/// Output state after the track stage, shared with the review service.
struct ReviewState {
  SequenceManifest manifest;
  std::vector<FrameQuadruple> quads;
  std::vector<double> timestamps;
  AnnotationMap annotations;  // track-stage output, before edits
  std::vector<Track> tracks;
  std::vector<AugmentedBox> boxes;
  fs::path edit_log;
  SyncOptions sync;
};

ReviewState load_review_state(const PipelineConfig& config);

fs::path edit_log_path(const PipelineConfig& config);

}  // namespace moslabel
