#include "crossview/inference.hpp"

#include <chrono>
#include <string>

#include "crossview/error.hpp"

namespace crossview {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void run_stage(const HeatmapSet& set, const BodyGraph& graph, const LimbPriors& priors, StageResult& stage) {
  auto start = std::chrono::steady_clock::now();
  const std::vector<UnaryTable> unaries = unary_potentials(stage.grids, set);
  stage.unary_ms = elapsed_ms(start);
  start = std::chrono::steady_clock::now();
  stage.psm = psm_infer(graph, stage.grids, unaries, priors);
  stage.inference_ms = elapsed_ms(start);
}

// Root peak triangulation, or the centroid of the triangulable joints when the
// root itself is seen in fewer than two views.
Vec3 stage_anchor(const HeatmapSet& set, int root_joint) {
  try {
    return triangulate_root(set, root_joint);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIllConditioned) throw;
    const Pose3D pose = triangulate_pose(set);
    Vec3 sum = Vec3::Zero();
    int count = 0;
    for (int j = 0; j < pose.size(); ++j) {
      if (pose.confidence[static_cast<std::size_t>(j)] > 0.0) {
        sum += pose.joints[static_cast<std::size_t>(j)];
        ++count;
      }
    }
    if (count == 0) throw;
    return sum / count;
  }
}

}  // namespace

Vec3 triangulate_root(const HeatmapSet& set, int root_joint) {
  if (root_joint < 0 || root_joint >= set.joints()) {
    throw Error(ErrorCode::kInvalidArgument, "root joint index out of range");
  }
  std::vector<Observation> observations;
  for (int v = 0; v < set.views(); ++v) {
    const Peak peak = argmax_location(set.map(v, root_joint));
    if (!peak.degenerate) observations.push_back({set.camera(v), peak.pixel});
  }
  if (observations.size() < 2) {
    throw Error(ErrorCode::kIllConditioned,
                "root joint has " + std::to_string(observations.size()) + " usable view(s); two are required");
  }
  return triangulate(observations).point;
}

RpsmResult rpsm_reconstruct(const HeatmapSet& set, const BodyGraph& graph, const LimbPriors& priors,
                            const RefinementSchedule& schedule) {
  schedule.validate();
  priors.validate(graph);
  if (set.joints() != graph.joints()) {
    throw Error(ErrorCode::kJointCountMismatch, "heatmap set has " + std::to_string(set.joints()) +
                                                    " joints, body graph has " + std::to_string(graph.joints()));
  }
  const auto m = static_cast<std::size_t>(graph.joints());

  RpsmResult result;
  result.root = stage_anchor(set, graph.root());
  result.stages.reserve(static_cast<std::size_t>(schedule.iterations) + 1);

  StageResult coarse;
  coarse.stage = 0;
  coarse.edge_length = schedule.edge_length(0);
  coarse.bins = schedule.bins(0);
  coarse.grids.assign(m, build_grid(result.root, coarse.edge_length, coarse.bins));
  run_stage(set, graph, priors, coarse);
  result.stages.push_back(std::move(coarse));

  for (int t = 1; t <= schedule.iterations; ++t) {
    const Pose3D& previous = result.stages.back().psm.pose;
    StageResult stage;
    stage.stage = t;
    stage.edge_length = schedule.edge_length(t);
    stage.bins = schedule.bins(t);
    stage.grids.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      stage.grids.push_back(build_grid(previous.joints[j], stage.edge_length, stage.bins));
    }
    run_stage(set, graph, priors, stage);
    result.stages.push_back(std::move(stage));
  }
  result.pose = result.stages.back().psm.pose;
  return result;
}

Pose3D triangulate_pose(const HeatmapSet& set) {
  if (set.views() < 2) throw Error(ErrorCode::kIllConditioned, "triangulation needs at least two views");
  const auto m = static_cast<std::size_t>(set.joints());
  Pose3D pose;
  pose.joints.assign(m, Vec3::Zero());
  pose.confidence.assign(m, 0.0);
  std::vector<bool> solved(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<Observation> observations;
    double peak_sum = 0.0;
    for (int v = 0; v < set.views(); ++v) {
      const Peak peak = argmax_location(set.map(v, static_cast<int>(j)));
      observations.push_back({set.camera(v), peak.pixel});
      peak_sum += peak.confidence;
    }
    if (observations.size() < 2) continue;
    try {
      pose.joints[j] = triangulate(observations).point;
      pose.confidence[j] = peak_sum / static_cast<double>(observations.size());
      solved[j] = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kIllConditioned) throw;
    }
  }
  Vec3 centroid = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (solved[j]) {
      centroid += pose.joints[j];
      ++count;
    }
  }
  if (count > 0) centroid /= static_cast<double>(count);
  for (std::size_t j = 0; j < m; ++j) {
    if (!solved[j]) pose.joints[j] = centroid;
  }
  return pose;
}

}  // namespace crossview
