#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "crossview/heatmap.hpp"
#include "support.hpp"

namespace crossview {
namespace {

using testing::error_code_of;
using testing::ring_rig;

TEST(Heatmap, CellCentreConvention) {
  const Heatmap map(GridDims{80, 80}, 4.0);
  EXPECT_EQ(map.cell_center(0, 0), Vec2(1.5, 1.5));
  EXPECT_EQ(map.cell_center(2, 3), Vec2(13.5, 9.5));
  EXPECT_EQ(map.cell_center(map.index(2, 3)), Vec2(13.5, 9.5));
  EXPECT_EQ(map.to_cell(Vec2(13.5, 9.5)), Vec2(3.0, 2.0));
  const Heatmap unit(GridDims{5, 5}, 1.0);
  EXPECT_EQ(unit.cell_center(4, 2), Vec2(2.0, 4.0));
}

TEST(Heatmap, RejectsEmptyDims) {
  EXPECT_EQ(error_code_of([] { Heatmap(GridDims{0, 4}, 4.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { Heatmap(GridDims{4, 4}, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(Render, CentreOnCellHoldsOne) {
  const Vec2 centre[] = {Vec2(13.5, 9.5)};
  const Heatmap map = render_gaussian(centre, 8.0, GridDims{80, 80}, 4.0).front();
  EXPECT_EQ(map.at(2, 3), 1.0f);
}

TEST(Render, ClosedFormValue) {
  // Unit stride: cell (r, c) sits at pixel (c, r).
  const Vec2 centre[] = {Vec2(40.0, 40.0)};
  const Heatmap map = render_gaussian(centre, 2.0, GridDims{80, 80}, 1.0).front();
  EXPECT_NEAR(map.at(40, 43), std::exp(-9.0 / 8.0), 1e-7);
  EXPECT_NEAR(map.at(40, 43), 0.3247, 1e-4);
  EXPECT_EQ(map.at(40, 40), 1.0f);
}

TEST(Render, FarOutsideIsAllZero) {
  const Vec2 centres[] = {Vec2(-100.0, 50.0), Vec2(50.0, 1000.0), Vec2(std::nan(""), 0.0)};
  for (const Heatmap& map : render_gaussian(centres, 2.0, GridDims{20, 20}, 4.0)) {
    for (float v : map.values()) EXPECT_EQ(v, 0.0f);
  }
  // Just outside the image but within 3 sigma still leaves a tail.
  const Vec2 near[] = {Vec2(-3.0, 40.0)};
  const Heatmap tail = render_gaussian(near, 2.0, GridDims{20, 20}, 4.0).front();
  EXPECT_GT(tail.at(9, 0), 0.0f);
}

TEST(Render, InvariantUnderJointRelabeling) {
  const Vec2 a[] = {Vec2(30.2, 40.7), Vec2(100.0, 20.0)};
  const Vec2 b[] = {Vec2(100.0, 20.0), Vec2(30.2, 40.7)};
  const auto ma = render_gaussian(a, 6.0, GridDims{40, 40}, 4.0);
  const auto mb = render_gaussian(b, 6.0, GridDims{40, 40}, 4.0);
  EXPECT_TRUE(std::equal(ma[0].values().begin(), ma[0].values().end(), mb[1].values().begin()));
  EXPECT_TRUE(std::equal(ma[1].values().begin(), ma[1].values().end(), mb[0].values().begin()));
}

TEST(Render, ArgmaxRoundTripWithinHalfStride) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 319.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec2 c[] = {Vec2(pos(rng), pos(rng))};
    const Peak peak = argmax_location(render_gaussian(c, 8.0, GridDims{80, 80}, 4.0).front());
    EXPECT_LE((peak.pixel - c[0]).cwiseAbs().maxCoeff(), 2.0 + 1e-9);
    EXPECT_FALSE(peak.degenerate);
  }
}

TEST(Bilinear, ExactAtCentresAndMidway) {
  Heatmap map(GridDims{4, 4}, 4.0);
  map.at(1, 1) = 0.0f;
  map.at(1, 2) = 1.0f;
  map.at(2, 2) = 0.25f;
  EXPECT_EQ(sample_bilinear(map, map.cell_center(1, 2)), 1.0);
  EXPECT_EQ(sample_bilinear(map, map.cell_center(2, 2)), 0.25);
  EXPECT_DOUBLE_EQ(sample_bilinear(map, 0.5 * (map.cell_center(1, 1) + map.cell_center(1, 2))), 0.5);
}

TEST(Bilinear, ZeroPaddingOutside) {
  Heatmap map(GridDims{4, 4}, 4.0);
  for (float& v : map.values()) v = 1.0f;
  EXPECT_EQ(sample_bilinear(map, Vec2(-100.0, 5.0)), 0.0);
  EXPECT_EQ(sample_bilinear(map, Vec2(5.0, 400.0)), 0.0);
  // Half a cell beyond the last centre blends with the zero padding.
  EXPECT_DOUBLE_EQ(sample_bilinear(map, Vec2(map.cell_center(0, 3).x() + 2.0, map.cell_center(0, 3).y())), 0.5);
  EXPECT_DOUBLE_EQ(sample_bilinear(map, Vec2(map.cell_center(0, 0).x() - 2.0, map.cell_center(0, 0).y())), 0.5);
}

TEST(Bilinear, ContinuousOnRenderedMaps) {
  const Vec2 c[] = {Vec2(150.3, 97.8)};
  const Heatmap map = render_gaussian(c, 8.0, GridDims{80, 80}, 4.0).front();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(-5.0, 325.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec2 p(pos(rng), pos(rng));
    EXPECT_LT(std::abs(sample_bilinear(map, p) - sample_bilinear(map, p + Vec2(1e-6, 0.0))), 1e-4);
    EXPECT_LT(std::abs(sample_bilinear(map, p) - sample_bilinear(map, p + Vec2(0.0, 1e-6))), 1e-4);
  }
  // Across cell boundaries, including the boundary of the grid.
  for (double x : {1.5, 5.5, 317.5, 319.5, -2.5}) {
    EXPECT_LT(std::abs(sample_bilinear(map, Vec2(x - 1e-6, 97.0)) - sample_bilinear(map, Vec2(x + 1e-6, 97.0))), 1e-4);
  }
}

TEST(Argmax, TieBreaksToSmallestIndex) {
  Heatmap map(GridDims{4, 4}, 4.0);
  map.values()[9] = 0.7f;
  map.values()[5] = 0.7f;
  const Peak peak = argmax_location(map);
  EXPECT_EQ(peak.index, 5u);
  EXPECT_EQ(peak.pixel, map.cell_center(5));
  EXPECT_FLOAT_EQ(static_cast<float>(peak.confidence), 0.7f);
  EXPECT_FALSE(peak.degenerate);
}

TEST(Argmax, UniformMapIsDegenerate) {
  Heatmap map(GridDims{6, 5}, 4.0);
  Peak peak = argmax_location(map);
  EXPECT_TRUE(peak.degenerate);
  EXPECT_EQ(peak.index, 0u);
  EXPECT_EQ(peak.pixel, map.cell_center(0, 0));
  for (float& v : map.values()) v = 0.3f;
  EXPECT_TRUE(argmax_location(map).degenerate);
}

TEST(HeatmapSet, ShapeValidation) {
  const auto rig = ring_rig(2);
  const HeatmapSet set(rig, 3, {GridDims{80, 80}, GridDims{80, 80}}, 4.0);
  EXPECT_EQ(set.views(), 2);
  EXPECT_EQ(set.joints(), 3);
  EXPECT_EQ(set.map(1, 2).view(), 1);
  EXPECT_EQ(set.map(1, 2).joint(), 2);
  EXPECT_EQ(error_code_of([&] { HeatmapSet(rig, 3, {GridDims{80, 80}}, 4.0); }), ErrorCode::kDimensionMismatch);
  std::vector<Heatmap> maps(5, Heatmap(GridDims{8, 8}, 4.0));
  EXPECT_EQ(error_code_of([&] { HeatmapSet(rig, 3, maps); }), ErrorCode::kDimensionMismatch);
  maps.emplace_back(GridDims{8, 9}, 4.0);
  EXPECT_EQ(error_code_of([&] { HeatmapSet(rig, 3, maps); }), ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace crossview
