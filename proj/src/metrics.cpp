#include "crossview/metrics.hpp"

#include <cmath>
#include <string>

#include "crossview/error.hpp"

namespace crossview {

std::vector<double> joint_errors(const Pose3D& estimated, const Pose3D& truth) {
  if (estimated.size() != truth.size()) {
    throw Error(ErrorCode::kJointCountMismatch, "estimated pose has " + std::to_string(estimated.size()) +
                                                    " joints, truth has " + std::to_string(truth.size()));
  }
  std::vector<double> errors(estimated.joints.size());
  for (std::size_t j = 0; j < errors.size(); ++j) errors[j] = (estimated.joints[j] - truth.joints[j]).norm();
  return errors;
}

double mpjpe(const Pose3D& estimated, const Pose3D& truth) {
  const std::vector<double> errors = joint_errors(estimated, truth);
  if (errors.empty()) return 0.0;
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

std::vector<double> jdr(std::span<const Keypoints2D> estimated, std::span<const Keypoints2D> truth,
                        std::span<const std::vector<double>> thresholds) {
  if (estimated.size() != truth.size() || thresholds.size() != truth.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "jdr: frame counts differ");
  }
  std::vector<double> hits;
  std::vector<double> counts;
  for (std::size_t f = 0; f < truth.size(); ++f) {
    const Keypoints2D& est = estimated[f];
    const Keypoints2D& gt = truth[f];
    if (est.size() != gt.size() || thresholds[f].size() != gt.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "jdr: view counts differ in frame " + std::to_string(f));
    }
    for (std::size_t v = 0; v < gt.size(); ++v) {
      if (est[v].size() != gt[v].size()) throw Error(ErrorCode::kDimensionMismatch, "jdr: joint counts differ");
      if (hits.empty()) {
        hits.assign(gt[v].size(), 0.0);
        counts.assign(gt[v].size(), 0.0);
      } else if (hits.size() != gt[v].size()) {
        throw Error(ErrorCode::kDimensionMismatch, "jdr: joint counts differ across frames");
      }
      for (std::size_t j = 0; j < gt[v].size(); ++j) {
        if (!gt[v][j].allFinite()) continue;
        counts[j] += 1.0;
        if ((est[v][j] - gt[v][j]).norm() < thresholds[f][v]) hits[j] += 1.0;
      }
    }
  }
  std::vector<double> rate(hits.size(), 0.0);
  for (std::size_t j = 0; j < rate.size(); ++j) {
    if (counts[j] > 0.0) rate[j] = 100.0 * hits[j] / counts[j];
  }
  return rate;
}

std::vector<double> head_thresholds(const Keypoints2D& truth, const BodyGraph& graph, double fallback_px) {
  const int head = graph.find("head");
  const int top = graph.find("head_top");
  std::vector<double> out(truth.size(), fallback_px);
  if (head < 0 || top < 0) return out;
  for (std::size_t v = 0; v < truth.size(); ++v) {
    const Vec2& a = truth[v].at(static_cast<std::size_t>(head));
    const Vec2& b = truth[v].at(static_cast<std::size_t>(top));
    if (a.allFinite() && b.allFinite()) out[v] = 0.5 * (a - b).norm();
  }
  return out;
}

Keypoints2D detect_keypoints(const HeatmapSet& set) {
  Keypoints2D out(static_cast<std::size_t>(set.views()));
  for (int v = 0; v < set.views(); ++v) {
    for (int j = 0; j < set.joints(); ++j) out[static_cast<std::size_t>(v)].push_back(argmax_location(set.map(v, j)).pixel);
  }
  return out;
}

double pixel_quantization_floor(const Pose3D& truth, std::span<const CameraParams> cameras, double stride) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Vec3& joint : truth.joints) {
    for (const CameraParams& cam : cameras) {
      const double depth = cam.depth(joint);
      if (!(depth > kMinDepth)) continue;
      sum += 0.5 * stride * depth / cam.mean_focal();
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace crossview
