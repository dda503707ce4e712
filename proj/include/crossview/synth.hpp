#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "crossview/heatmap.hpp"
#include "crossview/inference.hpp"
#include "crossview/skeleton.hpp"

namespace crossview {

/// Corruptions applied to rendered heatmaps. Every (view, joint) consumes the
/// same number of random draws whatever the settings, so changing one
/// probability leaves the other draws untouched.
struct NoiseModel {
  double jitter_px = 0.0;               // Gaussian noise on the rendered centre
  double drop_probability = 0.0;        // map zeroed (occlusion)
  double distractor_probability = 0.0;  // spurious peak added
  double distractor_amplitude = 0.6;
  std::vector<int> drop_joints;         // joints eligible for dropping; empty = all
  std::uint64_t seed = 0;

  void validate() const;
};

struct RenderSettings {
  double sigma_px = 8.0;
  double stride = kDefaultStride;
};

struct RigConfig {
  int cameras = 4;
  double radius = 3000.0;
  Vec3 target = Vec3(0.0, 0.0, 1000.0);
  int width = 320;
  int height = 320;
  double focal = 400.0;
};

struct SceneTruth {
  Pose3D pose;
  std::vector<std::vector<Vec2>> projections;  // [view][joint], unjittered; NaN if behind the camera
  std::vector<std::vector<bool>> occluded;     // [view][joint] map dropped
};

/// splitmix64 over (base, frame, stream); stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t frame, std::uint64_t stream);

/// Random articulated pose: root within `root_spread` mm (horizontal) of
/// `anchor`, random heading, each limb drawn from [l - eps/2, l + eps/2]
/// along a direction inside a per-joint cone around a neutral stance.
Pose3D sample_pose(const LimbPriors& priors, const BodyGraph& graph, std::uint64_t seed,
                   const Vec3& anchor = Vec3(0.0, 0.0, 1000.0), double root_spread = 150.0);

/// Cameras evenly spaced on a horizontal circle around `target`, all looking
/// at it. Principal point at the image centre.
std::vector<CameraParams> generate_rig(int num_cameras, double radius, const Vec3& target, int width,
                                       int height, double focal);
std::vector<CameraParams> generate_rig(const RigConfig& config);

/// Heatmap grid for a camera at the given stride (ceil(size / stride)).
GridDims heatmap_dims(const CameraParams& camera, double stride);

std::pair<HeatmapSet, SceneTruth> render_views(const Pose3D& pose, std::span<const CameraParams> cameras,
                                               const RenderSettings& render, const NoiseModel& noise);

struct SyntheticFrame {
  HeatmapSet heatmaps;
  SceneTruth truth;
};

struct CorpusSpec {
  int frames = 100;
  std::uint64_t seed = 0;
  RigConfig rig;
  RenderSettings render;
  NoiseModel noise;  // its seed is replaced per frame
};

/// Frame `index` of a synthetic corpus. Pose and noise use independent seeds
/// derived from (spec.seed, index), so frames can be generated in any order.
SyntheticFrame generate_frame(const CorpusSpec& spec, const BodyGraph& graph, const LimbPriors& priors,
                              std::span<const CameraParams> cameras, int index);

}  // namespace crossview
