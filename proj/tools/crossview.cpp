#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossview/benchmark.hpp"
#include "crossview/error.hpp"
#include "crossview/fusion.hpp"
#include "crossview/io.hpp"
#include "crossview/metrics.hpp"

namespace fs = std::filesystem;
using namespace crossview;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
      return kExitConfig;
    default:
      return kExitData;
  }
}

io::BodyModel load_body(const std::string& path) {
  return path.empty() ? io::default_body_model() : io::read_body_model(path);
}

struct SynthOptions {
  std::string out;
  std::string config;
  int frames = 10;
  std::uint64_t seed = 0;
  std::optional<double> jitter, drop, distractor;
};

int run_synth(const SynthOptions& o, bool seed_given) {
  BenchConfig config = o.config.empty() ? default_bench_config() : load_bench_config(o.config);
  if (!config.synthetic) throw Error(ErrorCode::kConfig, "synth needs a synthetic 'corpus' section");
  CorpusSpec spec = *config.synthetic;
  if (o.config.empty()) spec.frames = o.frames;
  if (seed_given) spec.seed = o.seed;
  if (o.jitter) spec.noise.jitter_px = *o.jitter;
  if (o.drop) spec.noise.drop_probability = *o.drop;
  if (o.distractor) spec.noise.distractor_probability = *o.distractor;
  try {
    spec.noise.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  const io::BodyModel body = config.body.empty() ? io::default_body_model() : io::read_body_model(config.body);
  const io::CorpusManifest manifest = io::write_synthetic_corpus(o.out, spec, body);
  std::printf("wrote %zu frames to %s\n", manifest.frames.size(), o.out.c_str());
  return 0;
}

struct FuseOptions {
  std::string in, out, cameras, mode = "weighted";
  std::optional<double> sigma;
};

int run_fuse(const FuseOptions& o) {
  const FusionMode mode = parse_fusion_mode(o.mode);
  const HeatmapSet set = io::read_heatmaps(o.in, io::read_cameras(o.cameras));
  const double sigma = o.sigma.value_or(default_kernel_sigma(set.stride()));
  if (!(sigma > 0.0)) throw Error(ErrorCode::kConfig, "--sigma must be positive");
  const WeightBank bank = mode == FusionMode::kIdentity ? WeightBank{} : build_weight_bank(set, sigma);
  io::write_heatmaps(o.out, fuse_heatmaps(set, bank, mode));
  return 0;
}

struct ReconstructOptions {
  std::string heatmaps, cameras, body, truth, out, method = "rpsm";
  std::optional<int> iterations, bins;
};

int run_reconstruct(const ReconstructOptions& o) {
  const Reconstruction method = parse_reconstruction(o.method);
  RefinementSchedule schedule;
  if (o.iterations) schedule.iterations = *o.iterations;
  if (o.bins) schedule.initial_bins = *o.bins;
  try {
    schedule.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  const io::BodyModel body = load_body(o.body);
  const HeatmapSet set = io::read_heatmaps(o.heatmaps, io::read_cameras(o.cameras));
  RpsmResult details;
  const Pose3D pose = reconstruct_pose(set, body.graph, body.priors, method, schedule, &details);

  io::PoseFileHeader header;
  header.method = std::string(to_string(method));
  if (method != Reconstruction::kTriangulate) {
    header.iterations = static_cast<int>(details.stages.size()) - 1;
    header.bins = schedule.initial_bins;
    header.score = details.stages.back().psm.score;
  }
  if (!o.truth.empty()) {
    const SceneTruth truth = io::read_truth(o.truth, body.graph);
    for (const StageResult& stage : details.stages) header.stage_mpjpe.push_back(mpjpe(stage.psm.pose, truth.pose));
    std::printf("mpjpe %.3f mm\n", mpjpe(pose, truth.pose));
  }
  if (o.out.empty()) {
    for (int j = 0; j < body.graph.joints(); ++j) {
      const Vec3& p = pose.joints[static_cast<std::size_t>(j)];
      std::printf("%s %.6f %.6f %.6f\n", body.graph.name(j).c_str(), p.x(), p.y(), p.z());
    }
  } else {
    io::write_pose(o.out, body.graph, pose, header);
  }
  return 0;
}

struct EvalOptions {
  std::string pose, truth, body, json_out;
};

int run_eval(const EvalOptions& o) {
  const io::BodyModel body = load_body(o.body);
  const Pose3D pose = io::read_pose(o.pose, body.graph);
  const SceneTruth truth = io::read_truth(o.truth, body.graph);
  const std::vector<double> errors = joint_errors(pose, truth.pose);
  const double mean = mpjpe(pose, truth.pose);
  for (int j = 0; j < body.graph.joints(); ++j) {
    std::printf("%-12s %10.3f\n", body.graph.name(j).c_str(), errors[static_cast<std::size_t>(j)]);
  }
  std::printf("%-12s %10.3f\n", "mpjpe", mean);
  if (!o.json_out.empty()) {
    const nlohmann::json doc{{"joints", body.graph.names()}, {"joint_errors", errors}, {"mpjpe", mean}};
    io::write_text(o.json_out, doc.dump(2) + "\n");
  }
  return 0;
}

struct BenchOptions {
  std::string config, out;
  std::uint64_t seed = 0;
  std::optional<int> threads;
};

int run_bench(const BenchOptions& o, bool seed_given) {
  BenchConfig config = o.config.empty() ? default_bench_config() : load_bench_config(o.config);
  if (seed_given) {
    if (!config.synthetic) throw Error(ErrorCode::kConfig, "--seed applies to synthetic corpora only");
    config.synthetic->seed = o.seed;
  }
  if (o.threads) config.threads = *o.threads;
  if (!o.out.empty()) config.output_dir = o.out;
  config.validate();
  const EvalReport report = run_benchmark(config);
  std::printf("%-20s %12s\n", "method", "mpjpe_mm");
  for (const MethodReport& row : report.methods) std::printf("%-20s %12.3f\n", row.method.c_str(), row.mean_mpjpe);
  if (!config.output_dir.empty()) std::printf("report written to %s\n", config.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view 3D human pose: heatmap fusion and recursive pictorial structures"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-view corpus");
  synth_cmd->add_option("--out", synth.out, "Output corpus directory")->required();
  synth_cmd->add_option("--config", synth.config, "Benchmark config whose 'corpus' section is used");
  synth_cmd->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
  synth_cmd->add_option("--jitter", synth.jitter, "Peak jitter (px)");
  synth_cmd->add_option("--drop", synth.drop, "Peak drop probability");
  synth_cmd->add_option("--distractor", synth.distractor, "Distractor probability");
  auto* synth_seed = synth_cmd->add_option("--seed", synth.seed, "Corpus seed");

  FuseOptions fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse a heatmap dump across views");
  fuse_cmd->add_option("--in", fuse.in, "Input heatmap manifest")->required();
  fuse_cmd->add_option("--cameras", fuse.cameras, "Camera file")->required();
  fuse_cmd->add_option("--out", fuse.out, "Output heatmap manifest")->required();
  fuse_cmd->add_option("--mode", fuse.mode, "weighted | line-sum | line-max | identity")->capture_default_str();
  fuse_cmd->add_option("--sigma", fuse.sigma, "Epipolar kernel width (px); default 1.5 cells");
  fuse_cmd->add_option("--seed", seed, "Unused; accepted for uniformity");

  ReconstructOptions rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Reconstruct a 3D pose from a heatmap dump");
  rec_cmd->add_option("--heatmaps", rec.heatmaps, "Heatmap manifest")->required();
  rec_cmd->add_option("--cameras", rec.cameras, "Camera file")->required();
  rec_cmd->add_option("--method", rec.method, "triangulate | psm | rpsm")->capture_default_str();
  rec_cmd->add_option("--iterations", rec.iterations, "Refinement stages T (default 10)");
  rec_cmd->add_option("--bins", rec.bins, "Bins per axis of the coarse grid N0 (default 16)");
  rec_cmd->add_option("--body", rec.body, "Body model file (default: 17-joint human)");
  rec_cmd->add_option("--truth", rec.truth, "Truth file; adds per-stage errors to the header");
  rec_cmd->add_option("--out", rec.out, "Pose file (default: stdout)");
  rec_cmd->add_option("--seed", seed, "Unused; accepted for uniformity");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a pose file with the truth");
  eval_cmd->add_option("--pose", eval.pose, "Pose file")->required();
  eval_cmd->add_option("--truth", eval.truth, "Truth file")->required();
  eval_cmd->add_option("--body", eval.body, "Body model file (default: 17-joint human)");
  eval_cmd->add_option("--json", eval.json_out, "Also write the errors as JSON");
  eval_cmd->add_option("--seed", seed, "Unused; accepted for uniformity");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark and write its report");
  bench_cmd->add_option("--config", bench.config, "Benchmark config (JSON); defaults documented in README");
  bench_cmd->add_option("--out", bench.out, "Output directory (overrides output_dir)");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (overrides threads)");
  auto* bench_seed = bench_cmd->add_option("--seed", bench.seed, "Corpus seed (overrides seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth_cmd) return run_synth(synth, synth_seed->count() > 0);
    if (*fuse_cmd) return run_fuse(fuse);
    if (*rec_cmd) return run_reconstruct(rec);
    if (*eval_cmd) return run_eval(eval);
    if (*bench_cmd) return run_bench(bench, bench_seed->count() > 0);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
