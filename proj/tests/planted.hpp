#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "crossview/fusion.hpp"

namespace crossview::testing {

inline constexpr GridDims kPlantedDims{12, 12};

// Small two-camera rig with 12x12 maps at unit stride, cheap enough to fit.
inline std::vector<CameraParams> tiny_rig() {
  const Vec3 target(0.0, 0.0, 1000.0);
  return {look_at_camera(0, Vec3(3000.0, 0.0, 1400.0), target, Vec3::UnitZ(), 8.0, 12, 12),
          look_at_camera(1, Vec3(0.0, 3000.0, 700.0), target, Vec3::UnitZ(), 8.0, 12, 12)};
}

inline HeatmapSet random_set(const std::vector<CameraParams>& cams, int joints, GridDims dims, double stride,
                             std::mt19937_64& rng) {
  HeatmapSet set(cams, joints, std::vector<GridDims>(cams.size(), dims), stride);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (int v = 0; v < set.views(); ++v) {
    for (int j = 0; j < joints; ++j) {
      for (float& x : set.map(v, j).values()) x = unit(rng);
    }
  }
  return set;
}

/// Geometric weights of the tiny rig, target view 0, source view 1.
inline FusionWeights planted_support() {
  const auto cams = tiny_rig();
  return build_epipolar_weights(cams[0], cams[1], kPlantedDims, kPlantedDims, 1.0, 1.5, 0, 1);
}

/// Same sparsity as `support`, weights drawn uniformly from [0.05, 1].
inline FusionWeights randomized_weights(FusionWeights support, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (std::size_t i = 0; i < support.rows(); ++i) {
    for (auto& e : support.row(i)) e.weight = unit(rng);
  }
  return support;
}

/// Random inputs paired with their fusion under `planted` (view 0 from view 1).
inline std::vector<FusionTrainingPair> planted_pairs(const FusionWeights& planted, int count, std::mt19937_64& rng) {
  const auto cams = tiny_rig();
  WeightBank bank{{{0, 1}, planted}};
  bank[{1, 0}] = build_epipolar_weights(cams[1], cams[0], kPlantedDims, kPlantedDims, 1.0, 1.5, 1, 0);
  std::vector<FusionTrainingPair> pairs;
  for (int k = 0; k < count; ++k) {
    HeatmapSet input = random_set(cams, 8, kPlantedDims, 1.0, rng);
    HeatmapSet target = fuse_heatmaps(input, bank, FusionMode::kWeighted);
    pairs.push_back({std::move(input), std::move(target)});
  }
  return pairs;
}

/// RMS difference over matching entries; NaN when the sparsity differs.
inline double weight_rms(const FusionWeights& a, const FusionWeights& b) {
  if (a.rows() != b.rows() || a.nonzeros() != b.nonzeros()) return std::numeric_limits<double>::quiet_NaN();
  double sq = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ra = a.row(i);
    const auto rb = b.row(i);
    if (ra.size() != rb.size()) return std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < ra.size(); ++k) {
      if (ra[k].col != rb[k].col) return std::numeric_limits<double>::quiet_NaN();
      sq += (ra[k].weight - rb[k].weight) * (ra[k].weight - rb[k].weight);
    }
  }
  return a.nonzeros() > 0 ? std::sqrt(sq / static_cast<double>(a.nonzeros())) : 0.0;
}

}  // namespace crossview::testing
