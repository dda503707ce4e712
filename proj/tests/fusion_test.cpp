#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "crossview/fusion.hpp"
#include "crossview/synth.hpp"
#include "planted.hpp"
#include "support.hpp"

namespace crossview {
namespace {

using testing::error_code_of;
using testing::planted_pairs;
using testing::planted_support;
using testing::random_set;
using testing::ring_rig;
using testing::tiny_rig;
using testing::weight_rms;

constexpr double kStride = 4.0;
constexpr double kSigma = 6.0;
const GridDims kDims{80, 80};

HeatmapSet empty_set(const std::vector<CameraParams>& cams, int joints) {
  return HeatmapSet(cams, joints, std::vector<GridDims>(cams.size(), kDims), kStride);
}

TEST(FusionMode, ParsesNames) {
  EXPECT_EQ(parse_fusion_mode("weighted"), FusionMode::kWeighted);
  EXPECT_EQ(parse_fusion_mode("line-sum"), FusionMode::kLineSum);
  EXPECT_EQ(parse_fusion_mode("line_max"), FusionMode::kLineMax);
  EXPECT_EQ(parse_fusion_mode("identity"), FusionMode::kIdentity);
  EXPECT_EQ(to_string(FusionMode::kLineSum), "line-sum");
  EXPECT_EQ(error_code_of([] { parse_fusion_mode("median"); }), ErrorCode::kConfig);
}

TEST(EpipolarWeights, SupportRowsAndNormalisation) {
  const auto rig = ring_rig();
  for (auto [u, v] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{3, 1}}) {
    const FusionWeights w = build_epipolar_weights(rig[u], rig[v], kDims, kDims, kStride, kSigma, u, v);
    ASSERT_TRUE(w.complete());
    EXPECT_EQ(w.rows(), kDims.cells());
    EXPECT_GT(w.nonzeros(), 0u);
    const Heatmap probe(kDims, kStride);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const auto row = w.row(i);
      if (row.empty()) continue;
      const auto line = epipolar_line(fundamental_matrix(rig[u], rig[v]), probe.cell_center(i));
      ASSERT_TRUE(line.has_value());
      double sum = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) {
        EXPECT_GE(row[k].weight, 0.0);
        EXPECT_LE(line->distance(probe.cell_center(row[k].col)), 3.0 * kSigma + 1e-9);
        if (k > 0) {
          EXPECT_LT(row[k - 1].col, row[k].col);
        }
        sum += row[k].weight;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(EpipolarWeights, KernelShapeBeforeNormalisation) {
  const auto rig = ring_rig();
  const FusionWeights w = build_epipolar_weights(rig[0], rig[1], kDims, kDims, kStride, kSigma);
  const Heatmap probe(kDims, kStride);
  const Mat3 f = fundamental_matrix(rig[0], rig[1]);
  // Within a row, weight ratios follow exp(-(d1^2 - d2^2) / (2 sigma^2)).
  const std::size_t i = kDims.cells() / 2 + 17;
  const auto row = w.row(i);
  ASSERT_GE(row.size(), 2u);
  const auto line = *epipolar_line(f, probe.cell_center(i));
  const double d0 = line.distance(probe.cell_center(row[0].col));
  const double d1 = line.distance(probe.cell_center(row[1].col));
  EXPECT_NEAR(row[0].weight / row[1].weight, std::exp(-(d0 * d0 - d1 * d1) / (2.0 * kSigma * kSigma)), 1e-9);
}

TEST(EpipolarWeights, CoincidentCamerasRejected) {
  const auto rig = ring_rig();
  EXPECT_EQ(error_code_of([&] { build_epipolar_weights(rig[0], rig[0], kDims, kDims, kStride, kSigma); }),
            ErrorCode::kCoincidentCameras);
}

TEST(EpipolarWeights, OneHotGeometricOracle) {
  const auto rig = ring_rig();
  const WeightBank bank = build_weight_bank(empty_set(rig, 1), kSigma);
  const Vec3 p(150.0, -220.0, 1450.0);
  for (int u = 0; u < 4; ++u) {
    for (int v = 0; v < 4; ++v) {
      if (u == v) continue;
      HeatmapSet set = empty_set(rig, 1);
      Heatmap& source = set.map(v, 0);
      const Vec2 cell = source.to_cell(project(p, rig[v]));
      const int hot_r = static_cast<int>(std::lround(cell.y()));
      const int hot_c = static_cast<int>(std::lround(cell.x()));
      source.at(hot_r, hot_c) = 1.0f;
      const HeatmapSet fused = fuse_heatmaps(set, bank, FusionMode::kWeighted);
      const Heatmap& out = fused.map(u, 0);
      const Vec2 target_cell = out.to_cell(project(p, rig[u]));
      const float at_truth = out.at(static_cast<int>(std::lround(target_cell.y())),
                                    static_cast<int>(std::lround(target_cell.x())));
      EXPECT_GT(at_truth, 0.0f);
      // Line in view u through which the hot source cell's ray passes.
      const EpipolarLine line = epipolar_line(source.cell_center(hot_r, hot_c), rig[v], rig[u]);
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (line.distance(out.cell_center(i)) > 3.0 * kSigma) {
          EXPECT_LT(out.values()[i], at_truth) << "u=" << u << " v=" << v << " cell " << i;
        }
      }
    }
  }
}

TEST(Fuse, IdentityAndSingleViewReturnInput) {
  std::mt19937_64 rng(21);
  const auto rig = ring_rig();
  const HeatmapSet set = random_set(rig, 2, kDims, kStride, rng);
  EXPECT_TRUE(fuse_heatmaps(set, {}, FusionMode::kIdentity) == set);
  const HeatmapSet one = random_set({rig[0]}, 2, kDims, kStride, rng);
  EXPECT_TRUE(fuse_heatmaps(one, {}, FusionMode::kWeighted) == one);
}

TEST(Fuse, MissingAndMismatchedWeights) {
  std::mt19937_64 rng(22);
  const auto rig = ring_rig(3);
  const HeatmapSet set = random_set(rig, 1, kDims, kStride, rng);
  WeightBank bank = build_weight_bank(set, kSigma);
  bank.erase({2, 0});
  EXPECT_EQ(error_code_of([&] { fuse_heatmaps(set, bank, FusionMode::kWeighted); }), ErrorCode::kMissingWeights);
  bank[{2, 0}] = build_epipolar_weights(rig[2], rig[0], GridDims{40, 40}, kDims, kStride, kSigma, 2, 0);
  EXPECT_EQ(error_code_of([&] { fuse_heatmaps(set, bank, FusionMode::kLineSum); }), ErrorCode::kDimensionMismatch);
}

TEST(Fuse, DoesNotMutateInputAndAddsToIt) {
  std::mt19937_64 rng(23);
  const auto rig = ring_rig();
  const HeatmapSet set = random_set(rig, 1, kDims, kStride, rng);
  const HeatmapSet copy = set;
  const HeatmapSet fused = fuse_heatmaps(set, build_weight_bank(set, kSigma), FusionMode::kWeighted);
  EXPECT_TRUE(set == copy);
  for (int v = 0; v < 4; ++v) {
    for (std::size_t i = 0; i < set.map(v, 0).size(); ++i) {
      EXPECT_GE(fused.map(v, 0).values()[i], set.map(v, 0).values()[i]);
    }
  }
}

TEST(Fuse, MatchesDirectSum) {
  std::mt19937_64 rng(24);
  const auto rig = ring_rig(3);
  const HeatmapSet set = random_set(rig, 2, kDims, kStride, rng);
  const WeightBank bank = build_weight_bank(set, kSigma);
  const HeatmapSet fused = fuse_heatmaps(set, bank, FusionMode::kWeighted);
  for (int u = 0; u < 3; ++u) {
    for (std::size_t i : {std::size_t{0}, std::size_t{3240}, std::size_t{6399}}) {
      double expected = set.map(u, 1).values()[i];
      for (int v = 0; v < 3; ++v) {
        if (v == u) continue;
        for (const auto& e : bank.at({u, v}).row(i)) expected += e.weight * set.map(v, 1).values()[e.col];
      }
      EXPECT_NEAR(fused.map(u, 1).values()[i], expected, 1e-5);
    }
  }
}

TEST(Fuse, ChannelSharing) {
  std::mt19937_64 rng(25);
  const auto rig = ring_rig();
  HeatmapSet set = random_set(rig, 3, kDims, kStride, rng);
  for (int v = 0; v < 4; ++v) {
    const auto src = set.map(v, 0).values();
    std::copy(src.begin(), src.end(), set.map(v, 2).values().begin());
  }
  const WeightBank bank = build_weight_bank(set, kSigma);
  for (FusionMode mode : {FusionMode::kWeighted, FusionMode::kLineSum, FusionMode::kLineMax}) {
    const HeatmapSet fused = fuse_heatmaps(set, bank, mode);
    for (int v = 0; v < 4; ++v) {
      const auto a = fused.map(v, 0).values();
      const auto b = fused.map(v, 2).values();
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(Fuse, Locality) {
  std::mt19937_64 rng(26);
  const auto rig = ring_rig(2);
  const HeatmapSet set = random_set(rig, 1, kDims, kStride, rng);
  const WeightBank bank = build_weight_bank(set, kSigma);
  const HeatmapSet fused = fuse_heatmaps(set, bank, FusionMode::kWeighted);
  const Mat3 f = fundamental_matrix(rig[0], rig[1]);
  for (std::size_t i : {std::size_t{123}, std::size_t{3240}, std::size_t{5001}}) {
    const auto line = *epipolar_line(f, set.map(0, 0).cell_center(i));
    HeatmapSet pruned = set;
    Heatmap& source = pruned.map(1, 0);
    for (std::size_t j = 0; j < source.size(); ++j) {
      if (line.distance(source.cell_center(j)) > 3.0 * kSigma) source.values()[j] = 0.0f;
    }
    EXPECT_EQ(fuse_heatmaps(pruned, bank, FusionMode::kWeighted).map(0, 0).values()[i], fused.map(0, 0).values()[i]);
  }
}

TEST(Fuse, MonotoneInEvidence) {
  std::mt19937_64 rng(27);
  const auto rig = ring_rig(3);
  const HeatmapSet set = random_set(rig, 1, kDims, kStride, rng);
  const WeightBank bank = build_weight_bank(set, kSigma);
  const HeatmapSet base = fuse_heatmaps(set, bank, FusionMode::kWeighted);
  HeatmapSet bumped = set;
  bumped.map(1, 0).values()[4321] += 2.0f;
  const HeatmapSet after = fuse_heatmaps(bumped, bank, FusionMode::kWeighted);
  int increased = 0;
  for (int v = 0; v < 3; ++v) {
    for (std::size_t i = 0; i < base.map(v, 0).size(); ++i) {
      EXPECT_GE(after.map(v, 0).values()[i], base.map(v, 0).values()[i]);
      increased += after.map(v, 0).values()[i] > base.map(v, 0).values()[i];
    }
  }
  EXPECT_GT(increased, 1);
}

TEST(Fuse, LineModesPeakOnEpipolarBand) {
  const auto rig = ring_rig(2);
  HeatmapSet set = empty_set(rig, 1);
  const std::size_t hot = 40 * 80 + 37;
  set.map(1, 0).values()[hot] = 1.0f;
  const WeightBank bank = build_weight_bank(set, kSigma);
  const FusionWeights& w = bank.at({0, 1});
  for (FusionMode mode : {FusionMode::kLineSum, FusionMode::kLineMax}) {
    const HeatmapSet fused = fuse_heatmaps(set, bank, mode);
    const Heatmap& out = fused.map(0, 0);
    int band = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto row = w.row(i);
      const bool on_line = std::any_of(row.begin(), row.end(), [&](const auto& e) { return e.col == hot; });
      EXPECT_EQ(out.values()[i], on_line ? 1.0f : 0.0f) << to_string(mode) << " cell " << i;
      band += on_line;
    }
    EXPECT_GT(band, 0);
  }
}

TEST(Fuse, RecoversFullyOccludedView) {
  const auto rig = ring_rig();
  const Vec3 joints[] = {Vec3(120.0, -90.0, 1500.0), Vec3(-200.0, 150.0, 450.0), Vec3(30.0, 260.0, 1750.0)};
  const WeightBank bank = build_weight_bank(empty_set(rig, 1), kSigma);
  for (const Vec3& p : joints) {
    std::vector<Heatmap> maps;
    for (const CameraParams& cam : rig) {
      const Vec2 c[] = {project(p, cam)};
      maps.push_back(render_gaussian(c, 8.0, kDims, kStride).front());
    }
    for (int target = 0; target < 4; ++target) {
      std::vector<Heatmap> occluded = maps;
      std::fill(occluded[target].values().begin(), occluded[target].values().end(), 0.0f);
      const HeatmapSet set(rig, 1, occluded);
      const HeatmapSet fused = fuse_heatmaps(set, bank, FusionMode::kWeighted);
      const Peak peak = argmax_location(fused.map(target, 0));
      const Vec2 truth = project(p, rig[target]);
      EXPECT_LE((peak.pixel - truth).norm(), 2.0 * kStride) << "view " << target;
    }
  }
}

TEST(FitWeights, RecoversPlantedWeights) {
  std::mt19937_64 rng(31);
  const FusionWeights support = planted_support();
  ASSERT_GT(support.nonzeros(), 0u);
  for (const FusionWeights& planted : {support, testing::randomized_weights(support, rng)}) {
    const auto pairs = planted_pairs(planted, 20, rng);
    const FusionWeights fitted = fit_fusion_weights(pairs, support, 1e-8);
    EXPECT_LT(weight_rms(fitted, planted), 1e-4);
  }
}

TEST(FitWeights, RidgeLimitDrivesWeightsToZero) {
  std::mt19937_64 rng(32);
  const FusionWeights support = planted_support();
  const auto pairs = planted_pairs(support, 2, rng);
  const FusionWeights fitted = fit_fusion_weights(pairs, support, 1e12);
  for (std::size_t i = 0; i < fitted.rows(); ++i) {
    for (const auto& e : fitted.row(i)) EXPECT_LT(std::abs(e.weight), 1e-8);
  }
}

TEST(FitWeights, NeverWorseThanGeometricWeights) {
  std::mt19937_64 rng(33);
  const FusionWeights support = planted_support();
  // Noisy targets: fused truth plus independent noise.
  auto pairs = planted_pairs(support, 20, rng);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  for (auto& pair : pairs) {
    for (float& x : pair.target.map(0, 3).values()) x += noise(rng);
  }
  const FusionWeights fitted = fit_fusion_weights(pairs, support, 0.0);
  EXPECT_LE(fusion_training_error(pairs, fitted), fusion_training_error(pairs, support) * (1.0 + 1e-12));
}

TEST(FitWeights, SingularWithoutRidge) {
  std::mt19937_64 rng(34);
  const FusionWeights support = planted_support();
  auto pairs = planted_pairs(support, 1, rng);
  // Identical source channels make every non-trivial row rank one.
  for (int k = 1; k < 8; ++k) {
    const auto src = pairs[0].input.map(1, 0).values();
    std::copy(src.begin(), src.end(), pairs[0].input.map(1, k).values().begin());
  }
  EXPECT_EQ(error_code_of([&] { fit_fusion_weights(pairs, support, 0.0); }), ErrorCode::kSingularSystem);
  EXPECT_NO_THROW(fit_fusion_weights(pairs, support, 1e-3));
}

TEST(FitWeights, InvalidArguments) {
  const FusionWeights support = planted_support();
  EXPECT_EQ(error_code_of([&] { fit_fusion_weights({}, support, 1.0); }), ErrorCode::kInvalidArgument);
  std::mt19937_64 rng(35);
  const auto pairs = planted_pairs(support, 1, rng);
  EXPECT_EQ(error_code_of([&] { fit_fusion_weights(pairs, support, -1.0); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace crossview
