#pragma once

#include <span>
#include <vector>

#include "crossview/inference.hpp"
#include "crossview/skeleton.hpp"

namespace crossview {

/// Per-joint Euclidean error (mm), no alignment.
std::vector<double> joint_errors(const Pose3D& estimated, const Pose3D& truth);

/// Mean per-joint position error (mm), protocol 1 (no rigid alignment).
double mpjpe(const Pose3D& estimated, const Pose3D& truth);

/// Detections of one frame, [view][joint] in pixels.
using Keypoints2D = std::vector<std::vector<Vec2>>;

/// Joint detection rate per joint, in percent: share of (frame, view)
/// detections whose pixel error is strictly below the frame/view threshold.
/// `thresholds[frame][view]`. Truth entries that are NaN (not visible) are
/// skipped; a joint with no valid entries reports 0.
std::vector<double> jdr(std::span<const Keypoints2D> estimated, std::span<const Keypoints2D> truth,
                        std::span<const std::vector<double>> thresholds);

/// Half the projected head-segment length per view, the synthetic stand-in
/// for "half the head size". Falls back to `fallback_px` when the segment is
/// unavailable.
std::vector<double> head_thresholds(const Keypoints2D& truth, const BodyGraph& graph, double fallback_px);

/// Peak location of every (view, joint) map.
Keypoints2D detect_keypoints(const HeatmapSet& set);

/// Half a heatmap cell back-projected to the depth of each joint, averaged
/// over joints and views (mm). The error floor imposed by the heatmap grid.
double pixel_quantization_floor(const Pose3D& truth, std::span<const CameraParams> cameras, double stride);

}  // namespace crossview
