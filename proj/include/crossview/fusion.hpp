#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crossview/heatmap.hpp"

namespace crossview {

enum class FusionMode { kWeighted, kLineSum, kLineMax, kIdentity };

std::string_view to_string(FusionMode mode);
/// Accepts "weighted", "line-sum", "line-max", "identity" (underscores too).
FusionMode parse_fusion_mode(std::string_view text);

/// Sparse row-major weight matrix for one ordered view pair. Row i lists the
/// source cells j (ascending) and weights w_{j,i} used to update target cell i.
class FusionWeights {
 public:
  struct Entry {
    std::uint32_t col;
    double weight;
  };

  FusionWeights() = default;
  FusionWeights(int target_view, int source_view, GridDims target_dims, GridDims source_dims,
                double stride, double kernel_sigma);

  int target_view() const { return target_view_; }
  int source_view() const { return source_view_; }
  GridDims target_dims() const { return target_dims_; }
  GridDims source_dims() const { return source_dims_; }
  double stride() const { return stride_; }
  double kernel_sigma() const { return kernel_sigma_; }
  /// Support radius around the epipolar line, 3 sigma (px).
  double support_radius() const { return 3.0 * kernel_sigma_; }

  std::size_t rows() const { return row_offsets_.size() - 1; }
  std::size_t nonzeros() const { return entries_.size(); }
  std::span<const Entry> row(std::size_t i) const {
    return {entries_.data() + row_offsets_[i], entries_.data() + row_offsets_[i + 1]};
  }
  std::span<Entry> row(std::size_t i) {
    return {entries_.data() + row_offsets_[i], entries_.data() + row_offsets_[i + 1]};
  }

  /// Appends the next row; rows must be added in order.
  void push_row(std::span<const Entry> entries);
  bool complete() const { return rows() == target_dims_.cells(); }

 private:
  int target_view_ = 0;
  int source_view_ = 0;
  GridDims target_dims_{};
  GridDims source_dims_{};
  double stride_ = kDefaultStride;
  double kernel_sigma_ = 1.5 * kDefaultStride;
  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<Entry> entries_;
};

/// Weights keyed by (target view, source view).
using WeightBank = std::map<std::pair<int, int>, FusionWeights>;

/// Geometric epipolar-kernel weights: for target cell i, source cells within
/// 3 sigma px of i's epipolar line get exp(-d^2 / (2 sigma^2)), then each
/// non-empty row is normalised to sum 1.
FusionWeights build_epipolar_weights(const CameraParams& cam_target, const CameraParams& cam_source,
                                     GridDims target_dims, GridDims source_dims, double stride,
                                     double kernel_sigma, int target_view = 0, int source_view = 1);

/// Geometric weights for every ordered view pair of the set.
WeightBank build_weight_bank(const HeatmapSet& set, double kernel_sigma);

/// Default kernel width: 1.5 heatmap cells.
inline double default_kernel_sigma(double stride) { return 1.5 * stride; }

/// out_i^u = x_i^u + sum_{v != u} sum_j w_{j,i} x_j^v per joint channel. The
/// line-sum / line-max baselines use the epipolar support of the weights but
/// ignore their values. The input set is not modified.
HeatmapSet fuse_heatmaps(const HeatmapSet& set, const WeightBank& weights, FusionMode mode);

struct FusionTrainingPair {
  HeatmapSet input;
  HeatmapSet target;
};

/// Ridge least-squares fit of the weights on the support of `support`:
/// minimises sum ||target_u - (input_u + W source_v)||^2 + lambda ||W||^2 over
/// all training pairs and joint channels, one independent problem per row.
FusionWeights fit_fusion_weights(std::span<const FusionTrainingPair> pairs, const FusionWeights& support,
                                 double ridge_lambda);

/// Training objective without the ridge term, for the view pair of `weights`.
double fusion_training_error(std::span<const FusionTrainingPair> pairs, const FusionWeights& weights);

}  // namespace crossview
