#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossview/fusion.hpp"
#include "crossview/inference.hpp"
#include "crossview/io.hpp"
#include "crossview/synth.hpp"

namespace crossview {

enum class Reconstruction { kTriangulate, kPsm, kRpsm };

std::string_view to_string(Reconstruction method);
/// "triangulate", "psm" or "rpsm"; throws Error(kConfig) otherwise.
Reconstruction parse_reconstruction(std::string_view text);

/// One benchmark row, named "<single|fusion>-<triangulate|psm|rpsm>".
struct MethodSpec {
  bool fused = false;
  Reconstruction reconstruction = Reconstruction::kRpsm;

  std::string name() const;
};

MethodSpec parse_method(std::string_view text);

/// Pose of one frame by the chosen reconstruction. `psm` runs the schedule
/// with zero refinement stages. `details` receives the stage history of the
/// PSM-based methods.
Pose3D reconstruct_pose(const HeatmapSet& set, const BodyGraph& graph, const LimbPriors& priors,
                        Reconstruction method, const RefinementSchedule& schedule, RpsmResult* details = nullptr);

/// Benchmark configuration, read from JSON. Every field is optional:
///
///   {
///     "seed": 0,                       // corpus seed (synthetic only)
///     "corpus": {                      // synthetic corpus, generated in memory
///       "frames": 100,
///       "rig": {"cameras": 4, "radius": 3000, "target": [0, 0, 1000],
///               "width": 320, "height": 320, "focal": 400},
///       "render": {"sigma_px": 8, "stride": 4},
///       "noise": {"jitter_px": 0, "drop_probability": 0, "distractor_probability": 0,
///                 "distractor_amplitude": 0.6, "drop_joints": ["l_wrist", "r_wrist"]}
///     },
///     "corpus_dir": "path",            // instead of "corpus": a corpus written by `synth`
///     "body": "body.json",             // default: the 17-joint human model
///     "methods": ["single-psm", "single-rpsm", "fusion-rpsm"],
///     "schedule": {"initial_edge_length": 2000, "initial_bins": 16,
///                  "refine_bins": 2, "iterations": 10},
///     "fusion": {"mode": "weighted", "kernel_sigma": 6},   // sigma default 1.5 cells
///     "jdr_threshold_px": null,        // null: half the projected head segment
///     "threads": 1,
///     "output_dir": "bench_out"
///   }
///
/// Relative paths resolve against the config file's directory.
struct BenchConfig {
  std::optional<CorpusSpec> synthetic;
  std::filesystem::path corpus_dir;
  std::filesystem::path body;
  std::vector<MethodSpec> methods;
  RefinementSchedule schedule;
  FusionMode fusion_mode = FusionMode::kWeighted;
  std::optional<double> fusion_sigma;
  std::optional<double> jdr_threshold_px;
  int threads = 1;
  std::filesystem::path output_dir;

  void validate() const;
};

BenchConfig default_bench_config();
/// Throws Error(kConfig) with the offending key on malformed input.
BenchConfig parse_bench_config(std::string_view text, const std::filesystem::path& base_dir = {});
BenchConfig load_bench_config(const std::filesystem::path& path);

struct FrameResult {
  int frame = 0;
  std::vector<double> joint_errors;  // mm
  double mpjpe = 0.0;
  std::vector<double> stage_mpjpe;   // PSM-based methods only
  std::vector<double> stage_ms;      // unary + inference per stage
  double fusion_ms = 0.0;
};

struct MethodReport {
  std::string method;
  std::vector<double> joint_mpjpe;  // mm, per joint
  double mean_mpjpe = 0.0;
  std::vector<double> joint_jdr;    // percent, per joint, on the heatmaps fed to reconstruction
  std::vector<double> stage_mpjpe;  // mean over frames, per stage
  std::vector<double> stage_ms;     // mean over frames, per stage
  double fusion_ms = 0.0;           // mean over frames
  std::vector<FrameResult> frames;
};

struct EvalReport {
  std::vector<std::string> joint_names;
  int frames = 0;
  std::string config_echo;  // canonical JSON of the settings that affect results
  std::vector<MethodReport> methods;
};

/// Runs every configured method over the corpus. Frames run on
/// `config.threads` workers; aggregation follows frame order. When
/// `output_dir` is set, writes report.json, frames_<method>.csv and
/// timing.json there.
EvalReport run_benchmark(const BenchConfig& config);

/// Deterministic JSON: everything except wall-clock figures.
std::string report_json(const EvalReport& report);
/// Per-frame dump: frame, per-joint errors, frame MPJPE.
std::string frames_csv(const EvalReport& report, const MethodReport& method);
/// Wall-clock per stage and fusion, per method.
std::string timing_json(const EvalReport& report);

}  // namespace crossview
