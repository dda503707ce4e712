#include "crossview/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "crossview/error.hpp"
#include "crossview/metrics.hpp"

namespace crossview {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Reconstruction method) {
  switch (method) {
    case Reconstruction::kTriangulate: return "triangulate";
    case Reconstruction::kPsm: return "psm";
    case Reconstruction::kRpsm: return "rpsm";
  }
  return "unknown";
}

Reconstruction parse_reconstruction(std::string_view text) {
  if (text == "triangulate") return Reconstruction::kTriangulate;
  if (text == "psm") return Reconstruction::kPsm;
  if (text == "rpsm") return Reconstruction::kRpsm;
  throw Error(ErrorCode::kConfig, "unknown reconstruction method '" + std::string(text) +
                                      "' (expected triangulate, psm or rpsm)");
}

std::string MethodSpec::name() const {
  return std::string(fused ? "fusion-" : "single-") + std::string(to_string(reconstruction));
}

MethodSpec parse_method(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) {
    throw Error(ErrorCode::kConfig, "method '" + std::string(text) + "' must look like single-rpsm or fusion-psm");
  }
  const std::string_view input = text.substr(0, dash);
  MethodSpec spec;
  if (input == "fusion") {
    spec.fused = true;
  } else if (input != "single") {
    throw Error(ErrorCode::kConfig, "method '" + std::string(text) + "': input must be 'single' or 'fusion'");
  }
  spec.reconstruction = parse_reconstruction(text.substr(dash + 1));
  return spec;
}

Pose3D reconstruct_pose(const HeatmapSet& set, const BodyGraph& graph, const LimbPriors& priors,
                        Reconstruction method, const RefinementSchedule& schedule, RpsmResult* details) {
  if (method == Reconstruction::kTriangulate) {
    if (set.joints() != graph.joints()) {
      throw Error(ErrorCode::kJointCountMismatch, "heatmap set and body graph differ in joint count");
    }
    return triangulate_pose(set);
  }
  RefinementSchedule effective = schedule;
  if (method == Reconstruction::kPsm) effective.iterations = 0;
  RpsmResult result = rpsm_reconstruct(set, graph, priors, effective);
  Pose3D pose = result.pose;
  if (details != nullptr) *details = std::move(result);
  return pose;
}

void BenchConfig::validate() const {
  if (synthetic.has_value() == !corpus_dir.empty()) {
    throw Error(ErrorCode::kConfig, "exactly one of 'corpus' and 'corpus_dir' must be given");
  }
  if (synthetic) {
    if (synthetic->frames <= 0) throw Error(ErrorCode::kConfig, "corpus.frames must be positive");
    try {
      synthetic->noise.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, std::string("corpus.noise: ") + e.what());
    }
  }
  if (methods.empty()) throw Error(ErrorCode::kConfig, "'methods' must list at least one method");
  try {
    schedule.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("schedule: ") + e.what());
  }
  if (fusion_sigma && !(*fusion_sigma > 0.0)) throw Error(ErrorCode::kConfig, "fusion.kernel_sigma must be positive");
  if (jdr_threshold_px && !(*jdr_threshold_px > 0.0)) throw Error(ErrorCode::kConfig, "jdr_threshold_px must be positive");
  if (threads < 1) throw Error(ErrorCode::kConfig, "threads must be at least 1");
}

BenchConfig default_bench_config() {
  BenchConfig config;
  config.synthetic = CorpusSpec{};
  config.methods = {parse_method("single-psm"), parse_method("single-rpsm"), parse_method("fusion-rpsm")};
  return config;
}

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::kConfig, message); }

void check_keys(const json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) config_error(std::string(where) + " must be an object");
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      config_error("unknown key '" + std::string(where.empty() ? "" : std::string(where) + ".") + item.key() + "'");
    }
  }
}

template <typename T>
T field(const json& object, const char* key, T fallback, std::string_view where) {
  if (!object.contains(key) || object[key].is_null()) return fallback;
  try {
    return object[key].get<T>();
  } catch (const json::exception&) {
    config_error("'" + std::string(where) + key + "' has the wrong type");
  }
}

// Empty stays empty so a null path field means "not given".
fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return value.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<int> parse_joint_list(const json& list, const BodyGraph& graph) {
  if (!list.is_array()) config_error("'corpus.noise.drop_joints' must be an array");
  std::vector<int> joints;
  for (const json& item : list) {
    if (item.is_string()) {
      const int j = graph.find(item.get<std::string>());
      if (j < 0) config_error("corpus.noise.drop_joints: unknown joint '" + item.get<std::string>() + "'");
      joints.push_back(j);
    } else if (item.is_number_integer()) {
      joints.push_back(item.get<int>());
    } else {
      config_error("corpus.noise.drop_joints entries must be joint names or indices");
    }
  }
  return joints;
}

CorpusSpec parse_corpus(const json& c, const BodyGraph& graph) {
  check_keys(c, "corpus", {"frames", "seed", "rig", "render", "noise"});
  CorpusSpec spec;
  spec.frames = field(c, "frames", spec.frames, "corpus.");
  spec.seed = field(c, "seed", spec.seed, "corpus.");
  if (c.contains("rig")) {
    const json& r = c["rig"];
    check_keys(r, "corpus.rig", {"cameras", "radius", "target", "width", "height", "focal"});
    spec.rig.cameras = field(r, "cameras", spec.rig.cameras, "corpus.rig.");
    spec.rig.radius = field(r, "radius", spec.rig.radius, "corpus.rig.");
    if (r.contains("target")) {
      const auto t = field(r, "target", std::vector<double>{}, "corpus.rig.");
      if (t.size() != 3) config_error("'corpus.rig.target' must have three entries");
      spec.rig.target = Vec3(t[0], t[1], t[2]);
    }
    spec.rig.width = field(r, "width", spec.rig.width, "corpus.rig.");
    spec.rig.height = field(r, "height", spec.rig.height, "corpus.rig.");
    spec.rig.focal = field(r, "focal", spec.rig.focal, "corpus.rig.");
    if (spec.rig.cameras < 2 || !(spec.rig.radius > 0.0) || spec.rig.width <= 0 || spec.rig.height <= 0 ||
        !(spec.rig.focal > 0.0)) {
      config_error("corpus.rig needs at least two cameras and positive radius, size and focal length");
    }
  }
  if (c.contains("render")) {
    const json& r = c["render"];
    check_keys(r, "corpus.render", {"sigma_px", "stride"});
    spec.render.sigma_px = field(r, "sigma_px", spec.render.sigma_px, "corpus.render.");
    spec.render.stride = field(r, "stride", spec.render.stride, "corpus.render.");
    if (!(spec.render.sigma_px > 0.0) || !(spec.render.stride >= 1.0)) {
      config_error("corpus.render needs sigma_px > 0 and stride >= 1");
    }
  }
  if (c.contains("noise")) {
    const json& n = c["noise"];
    check_keys(n, "corpus.noise",
               {"jitter_px", "drop_probability", "distractor_probability", "distractor_amplitude", "drop_joints"});
    spec.noise.jitter_px = field(n, "jitter_px", 0.0, "corpus.noise.");
    spec.noise.drop_probability = field(n, "drop_probability", 0.0, "corpus.noise.");
    spec.noise.distractor_probability = field(n, "distractor_probability", 0.0, "corpus.noise.");
    spec.noise.distractor_amplitude = field(n, "distractor_amplitude", spec.noise.distractor_amplitude, "corpus.noise.");
    if (n.contains("drop_joints")) spec.noise.drop_joints = parse_joint_list(n["drop_joints"], graph);
  }
  return spec;
}

json corpus_to_json(const CorpusSpec& spec, const BodyGraph& graph) {
  json drop = json::array();
  for (int j : spec.noise.drop_joints) drop.push_back(graph.name(j));
  return json{{"frames", spec.frames},
              {"seed", spec.seed},
              {"rig",
               {{"cameras", spec.rig.cameras},
                {"radius", spec.rig.radius},
                {"target", {spec.rig.target.x(), spec.rig.target.y(), spec.rig.target.z()}},
                {"width", spec.rig.width},
                {"height", spec.rig.height},
                {"focal", spec.rig.focal}}},
              {"render", {{"sigma_px", spec.render.sigma_px}, {"stride", spec.render.stride}}},
              {"noise",
               {{"jitter_px", spec.noise.jitter_px},
                {"drop_probability", spec.noise.drop_probability},
                {"distractor_probability", spec.noise.distractor_probability},
                {"distractor_amplitude", spec.noise.distractor_amplitude},
                {"drop_joints", drop}}}};
}

}  // namespace

BenchConfig parse_bench_config(std::string_view text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "", {"seed", "corpus", "corpus_dir", "body", "methods", "schedule", "fusion", "jdr_threshold_px",
                       "threads", "output_dir"});
  BenchConfig config;
  const BodyGraph graph = [&] {
    config.body = resolve(base_dir, field(doc, "body", std::string(), ""));
    if (config.body.empty()) return BodyGraph::human17();
    return io::read_body_model(config.body).graph;
  }();

  if (doc.contains("corpus_dir")) config.corpus_dir = resolve(base_dir, field(doc, "corpus_dir", std::string(), ""));
  if (doc.contains("corpus")) {
    config.synthetic = parse_corpus(doc["corpus"], graph);
  } else if (config.corpus_dir.empty()) {
    config.synthetic = CorpusSpec{};
  }
  if (doc.contains("seed")) {
    if (!config.synthetic) config_error("'seed' applies to synthetic corpora only");
    config.synthetic->seed = field(doc, "seed", std::uint64_t{0}, "");
  }

  if (doc.contains("methods")) {
    for (const std::string& m : field(doc, "methods", std::vector<std::string>{}, "")) {
      config.methods.push_back(parse_method(m));
    }
  } else {
    config.methods = default_bench_config().methods;
  }
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    check_keys(s, "schedule", {"initial_edge_length", "initial_bins", "refine_bins", "iterations"});
    config.schedule.initial_edge_length = field(s, "initial_edge_length", config.schedule.initial_edge_length, "schedule.");
    config.schedule.initial_bins = field(s, "initial_bins", config.schedule.initial_bins, "schedule.");
    config.schedule.refine_bins = field(s, "refine_bins", config.schedule.refine_bins, "schedule.");
    config.schedule.iterations = field(s, "iterations", config.schedule.iterations, "schedule.");
  }
  if (doc.contains("fusion")) {
    const json& f = doc["fusion"];
    check_keys(f, "fusion", {"mode", "kernel_sigma"});
    config.fusion_mode = parse_fusion_mode(field(f, "mode", std::string("weighted"), "fusion."));
    if (f.contains("kernel_sigma") && !f["kernel_sigma"].is_null()) {
      config.fusion_sigma = field(f, "kernel_sigma", 0.0, "fusion.");
    }
  }
  if (doc.contains("jdr_threshold_px") && !doc["jdr_threshold_px"].is_null()) {
    config.jdr_threshold_px = field(doc, "jdr_threshold_px", 0.0, "");
  }
  config.threads = field(doc, "threads", config.threads, "");
  if (doc.contains("output_dir")) config.output_dir = resolve(base_dir, field(doc, "output_dir", std::string(), ""));
  config.validate();
  return config;
}

BenchConfig load_bench_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    config_error(std::string("cannot read config: ") + e.what());
  }
  return parse_bench_config(text, path.parent_path());
}

namespace {

// Frames come either from the in-memory generator or from a corpus on disk.
class FrameSource {
 public:
  explicit FrameSource(const BenchConfig& config) : config_(config) {
    if (config.synthetic) {
      body_ = config.body.empty() ? io::default_body_model() : io::read_body_model(config.body);
      cameras_ = generate_rig(config.synthetic->rig);
      frames_ = config.synthetic->frames;
    } else {
      manifest_ = io::read_corpus(config.corpus_dir);
      cameras_ = io::read_cameras(config.corpus_dir / manifest_.cameras);
      body_ = config.body.empty() ? io::read_body_model(config.corpus_dir / manifest_.body)
                                  : io::read_body_model(config.body);
      frames_ = static_cast<int>(manifest_.frames.size());
    }
  }

  int frames() const { return frames_; }
  const io::BodyModel& body() const { return body_; }
  const std::vector<CameraParams>& cameras() const { return cameras_; }
  double stride() const { return config_.synthetic ? config_.synthetic->render.stride : manifest_.render.stride; }

  SyntheticFrame load(int index) const {
    if (config_.synthetic) return generate_frame(*config_.synthetic, body_.graph, body_.priors, cameras_, index);
    const io::CorpusFrame& entry = manifest_.frames.at(static_cast<std::size_t>(index));
    return SyntheticFrame{io::read_heatmaps(config_.corpus_dir / entry.heatmaps, cameras_),
                          io::read_truth(config_.corpus_dir / entry.truth, body_.graph)};
  }

 private:
  const BenchConfig& config_;
  io::BodyModel body_{BodyGraph::human17(), {}};
  std::vector<CameraParams> cameras_;
  io::CorpusManifest manifest_;
  int frames_ = 0;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

struct FrameOutput {
  std::vector<FrameResult> methods;
  Keypoints2D truth2d;
  std::vector<double> thresholds;
  Keypoints2D single2d;
  Keypoints2D fused2d;
};

std::string config_echo(const BenchConfig& config, const FrameSource& source, double sigma) {
  json methods = json::array();
  for (const MethodSpec& m : config.methods) methods.push_back(m.name());
  json echo{{"methods", methods},
            {"joints", source.body().graph.names()},
            {"limb_epsilon", source.body().priors.epsilon},
            {"schedule",
             {{"initial_edge_length", config.schedule.initial_edge_length},
              {"initial_bins", config.schedule.initial_bins},
              {"refine_bins", config.schedule.refine_bins},
              {"iterations", config.schedule.iterations}}},
            {"fusion", {{"mode", std::string(to_string(config.fusion_mode))}, {"kernel_sigma", sigma}}},
            {"jdr_threshold_px", config.jdr_threshold_px ? json(*config.jdr_threshold_px) : json(nullptr)}};
  if (config.synthetic) {
    echo["corpus"] = corpus_to_json(*config.synthetic, source.body().graph);
  } else {
    echo["corpus_dir"] = config.corpus_dir.generic_string();
  }
  return echo.dump();
}

std::vector<double> mean_columns(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  std::vector<double> sum(width, 0.0);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) sum[k] += r[k];
  }
  for (double& s : sum) s /= static_cast<double>(rows.size());
  return sum;
}

}  // namespace

EvalReport run_benchmark(const BenchConfig& config) {
  config.validate();
  const FrameSource source(config);
  const BodyGraph& graph = source.body().graph;
  const LimbPriors& priors = source.body().priors;
  const double sigma = config.fusion_sigma.value_or(default_kernel_sigma(source.stride()));

  const bool need_fusion = std::any_of(config.methods.begin(), config.methods.end(),
                                       [](const MethodSpec& m) { return m.fused; });
  WeightBank bank;
  if (need_fusion && config.fusion_mode != FusionMode::kIdentity) {
    std::vector<GridDims> dims;
    for (const CameraParams& cam : source.cameras()) dims.push_back(heatmap_dims(cam, source.stride()));
    bank = build_weight_bank(HeatmapSet(source.cameras(), 1, dims, source.stride()), sigma);
  }

  const int frames = source.frames();
  std::vector<FrameOutput> outputs(static_cast<std::size_t>(frames));

  auto process = [&](int f) {
    const SyntheticFrame frame = source.load(f);
    if (frame.heatmaps.joints() != graph.joints() || frame.truth.pose.size() != graph.joints()) {
      throw Error(ErrorCode::kData, "frame " + std::to_string(f) + " does not match the body model");
    }
    FrameOutput& out = outputs[static_cast<std::size_t>(f)];
    out.truth2d = frame.truth.projections;
    const double fallback = config.jdr_threshold_px.value_or(2.0 * source.stride());
    out.thresholds = config.jdr_threshold_px
                         ? std::vector<double>(out.truth2d.size(), *config.jdr_threshold_px)
                         : head_thresholds(out.truth2d, graph, fallback);
    out.single2d = detect_keypoints(frame.heatmaps);

    std::optional<HeatmapSet> fused;
    double fusion_ms = 0.0;
    if (need_fusion) {
      const auto start = std::chrono::steady_clock::now();
      fused = fuse_heatmaps(frame.heatmaps, bank, config.fusion_mode);
      fusion_ms = elapsed_ms(start);
      out.fused2d = detect_keypoints(*fused);
    }

    for (const MethodSpec& method : config.methods) {
      const HeatmapSet& input = method.fused ? *fused : frame.heatmaps;
      RpsmResult details;
      FrameResult result;
      result.frame = f;
      const Pose3D pose = reconstruct_pose(input, graph, priors, method.reconstruction, config.schedule, &details);
      result.joint_errors = joint_errors(pose, frame.truth.pose);
      result.mpjpe = mpjpe(pose, frame.truth.pose);
      if (method.reconstruction != Reconstruction::kTriangulate) {
        for (const StageResult& stage : details.stages) {
          result.stage_mpjpe.push_back(mpjpe(stage.psm.pose, frame.truth.pose));
          result.stage_ms.push_back(stage.unary_ms + stage.inference_ms);
        }
      }
      result.fusion_ms = method.fused ? fusion_ms : 0.0;
      out.methods.push_back(std::move(result));
    }
  };

  const int workers = std::min(config.threads, std::max(frames, 1));
  if (workers <= 1) {
    for (int f = 0; f < frames; ++f) process(f);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int f = next++; f < frames; f = next++) {
          try {
            process(f);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = frames;
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvalReport report;
  report.joint_names = graph.names();
  report.frames = frames;
  report.config_echo = config_echo(config, source, sigma);

  std::vector<Keypoints2D> truth2d, single2d, fused2d;
  std::vector<std::vector<double>> thresholds;
  for (const FrameOutput& out : outputs) {
    truth2d.push_back(out.truth2d);
    thresholds.push_back(out.thresholds);
    single2d.push_back(out.single2d);
    if (need_fusion) fused2d.push_back(out.fused2d);
  }
  const std::vector<double> single_jdr = jdr(single2d, truth2d, thresholds);
  const std::vector<double> fused_jdr = need_fusion ? jdr(fused2d, truth2d, thresholds) : std::vector<double>{};

  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    MethodReport row;
    row.method = config.methods[k].name();
    row.joint_jdr = config.methods[k].fused ? fused_jdr : single_jdr;
    std::vector<std::vector<double>> errors, stages, stage_ms;
    double fusion_ms = 0.0;
    for (const FrameOutput& out : outputs) {
      const FrameResult& r = out.methods[k];
      errors.push_back(r.joint_errors);
      if (!r.stage_mpjpe.empty()) {
        stages.push_back(r.stage_mpjpe);
        stage_ms.push_back(r.stage_ms);
      }
      fusion_ms += r.fusion_ms;
      row.frames.push_back(r);
    }
    row.joint_mpjpe = mean_columns(errors);
    double sum = 0.0;
    for (double e : row.joint_mpjpe) sum += e;
    row.mean_mpjpe = row.joint_mpjpe.empty() ? 0.0 : sum / static_cast<double>(row.joint_mpjpe.size());
    row.stage_mpjpe = mean_columns(stages);
    row.stage_ms = mean_columns(stage_ms);
    row.fusion_ms = frames > 0 ? fusion_ms / frames : 0.0;
    report.methods.push_back(std::move(row));
  }

  if (!config.output_dir.empty()) {
    io::write_text(config.output_dir / "report.json", report_json(report));
    io::write_text(config.output_dir / "timing.json", timing_json(report));
    for (const MethodReport& row : report.methods) {
      io::write_text(config.output_dir / ("frames_" + row.method + ".csv"), frames_csv(report, row));
    }
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  json methods = json::array();
  for (const MethodReport& row : report.methods) {
    methods.push_back({{"method", row.method},
                       {"mean_mpjpe", row.mean_mpjpe},
                       {"joint_mpjpe", row.joint_mpjpe},
                       {"joint_jdr", row.joint_jdr},
                       {"stage_mpjpe", row.stage_mpjpe}});
  }
  const json doc{{"format", "crossview-report"},
                 {"version", 1},
                 {"frames", report.frames},
                 {"joints", report.joint_names},
                 {"config", json::parse(report.config_echo)},
                 {"methods", methods}};
  return doc.dump(2) + "\n";
}

std::string frames_csv(const EvalReport& report, const MethodReport& method) {
  std::string out = "frame";
  for (const std::string& name : report.joint_names) out += "," + name;
  out += ",mpjpe\n";
  char cell[40];
  for (const FrameResult& r : method.frames) {
    out += std::to_string(r.frame);
    for (double e : r.joint_errors) {
      std::snprintf(cell, sizeof(cell), ",%.17g", e);
      out += cell;
    }
    std::snprintf(cell, sizeof(cell), ",%.17g\n", r.mpjpe);
    out += cell;
  }
  return out;
}

std::string timing_json(const EvalReport& report) {
  json methods = json::array();
  for (const MethodReport& row : report.methods) {
    methods.push_back({{"method", row.method}, {"fusion_ms", row.fusion_ms}, {"stage_ms", row.stage_ms}});
  }
  return json{{"format", "crossview-timing"}, {"version", 1}, {"methods", methods}}.dump(2) + "\n";
}

}  // namespace crossview
