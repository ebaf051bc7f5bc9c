#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "moslabel/errors.hpp"
#include "moslabel/pipeline.hpp"
#include "moslabel/review.hpp"
#include "moslabel/synth_oracle.hpp"

using namespace moslabel;

namespace {

ReviewService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

struct Options {
  std::string config;
  std::string stages;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string serve_addr = "127.0.0.1:8080";
  std::string scene;
  double drift = 0.0;
  std::string manifest;
  bool verbose = false;
};

PipelineConfig load_config(const Options& o) {
  PipelineConfig config = o.config.empty() ? PipelineConfig{} : read_config(o.config);
  if (!o.out.empty()) config.out_dir = o.out;
  if (!o.manifest.empty()) config.manifest = o.manifest;
  if (!o.stages.empty()) config.stages = parse_stage_list(o.stages);
  config.validate();
  return config;
}

int run_stages(const Options& o, std::vector<Stage> stages) {
  PipelineConfig config = load_config(o);
  if (o.stages.empty()) config.stages = std::move(stages);
  const RunReport report = run_pipeline(config);
  std::cout << report.to_text();
  return 0;
}

int serve(const Options& o) {
  const PipelineConfig config = load_config(o);
  const auto [host, port] = parse_address(o.serve_addr);
  ReviewService service(load_review_state(config));
  const int bound = service.bind(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  return 0;
}

int synth(const Options& o) {
  if (o.scene.empty()) throw Error(Errc::configuration, "synth needs --scene");
  SceneSpec spec = read_scene_spec(o.scene);
  if (o.seed) spec.seed = *o.seed;
  const fs::path out = o.out.empty() ? fs::path("synth") : fs::path(o.out);
  SequenceManifest manifest = write_bundle(spec, out);
  if (o.drift > 0.0) {
    std::vector<Pose> poses;
    std::vector<double> times;
    for (const auto& e : manifest.sensor(manifest.reference)) {
      poses.push_back(e.pose);
      times.push_back(e.timestamp);
    }
    const PoseCorruption c = plan_corruption(poses, times, o.drift, spec.seed);
    corrupt_manifest(manifest, c);
    write_manifest(manifest, out / "manifest.json");
    std::cout << "drift " << c.drift << " m between t=" << c.ramp_begin << " and t=" << c.ramp_end << "\n";
  }
  std::cout << "wrote " << (out / "manifest.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance-aware moving object segmentation labeling"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Pipeline configuration (JSON)");
    sub->add_option("--manifest", o.manifest, "Input manifest, overrides the configuration");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--stages", o.stages, "Comma-separated stage list");
  };

  int rc = 0;
  std::function<int()> action;
  const std::pair<const char*, Stage> stage_commands[] = {
      {"sync", Stage::sync},     {"cluster", Stage::cluster}, {"correct", Stage::correct}, {"detect", Stage::detect},
      {"track", Stage::track},   {"export", Stage::export_},  {"eval", Stage::eval},
  };
  for (const auto& [name, stage] : stage_commands) {
    auto* sub = app.add_subcommand(name, std::string("Run up to the ") + name + " stage");
    add_common(sub);
    sub->callback([&, stage = stage] { action = [&, stage] { return run_stages(o, {stage}); }; });
  }
  auto* run = app.add_subcommand("run", "Run every stage");
  add_common(run);
  run->callback([&] { action = [&] { return run_stages(o, {}); }; });

  auto* srv = app.add_subcommand("serve", "Serve the review API over the track-stage output");
  add_common(srv);
  srv->add_option("--serve-addr", o.serve_addr, "host:port")->capture_default_str();
  srv->callback([&] { action = [&] { return serve(o); }; });

  auto* syn = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  syn->add_option("--scene", o.scene, "Scene description (JSON)")->required();
  syn->add_option("--out", o.out, "Output directory");
  syn->add_option("--seed", o.seed, "Override the scene seed");
  syn->add_option("--drift", o.drift, "Inject pose drift (m) from the first revisiting subcluster on");
  syn->callback([&] { action = [&] { return synth(o); }; });

  spdlog::set_default_logger(spdlog::stderr_color_mt("moslabel"));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);
  try {
    rc = action();
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    rc = 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    rc = 1;
  }
  return rc;
}
