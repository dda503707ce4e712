#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crossview/geometry.hpp"

namespace crossview {

struct GridDims {
  int rows = 0;
  int cols = 0;

  std::size_t cells() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

inline constexpr double kDefaultStride = 4.0;

/// Row-major confidence grid for one joint in one view. Cell (r, c) covers
/// `stride` x `stride` image pixels; its centre sits at pixel
/// (c * stride + (stride - 1) / 2, r * stride + (stride - 1) / 2).
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(GridDims dims, double stride, int joint = 0, int view = 0);

  GridDims dims() const { return dims_; }
  int rows() const { return dims_.rows; }
  int cols() const { return dims_.cols; }
  double stride() const { return stride_; }
  int joint() const { return joint_; }
  int view() const { return view_; }
  std::size_t size() const { return values_.size(); }

  float at(int row, int col) const { return values_[index(row, col)]; }
  float& at(int row, int col) { return values_[index(row, col)]; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(dims_.cols) + static_cast<std::size_t>(col);
  }
  Vec2 cell_center(int row, int col) const;
  Vec2 cell_center(std::size_t linear) const;
  /// Continuous cell coordinates (col, row) of an image pixel.
  Vec2 to_cell(const Vec2& pixel) const;

  void set_labels(int joint, int view) {
    joint_ = joint;
    view_ = view;
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  GridDims dims_{};
  double stride_ = kDefaultStride;
  int joint_ = 0;
  int view_ = 0;
  std::vector<float> values_;
};

/// Renders one map per centre. Values are exp(-d^2 / (2 sigma^2)) with d the
/// pixel distance between cell centre and joint; a centre more than 3 sigma
/// outside the image extent yields an all-zero map.
std::vector<Heatmap> render_gaussian(std::span<const Vec2> centers, double sigma, GridDims dims,
                                     double stride);

/// Adds amplitude * gaussian(center, sigma) onto an existing map (no
/// out-of-bounds cut-off).
void add_gaussian(Heatmap& map, const Vec2& center, double sigma, double amplitude);

/// Bilinear interpolation with zero padding outside the grid.
double sample_bilinear(const Heatmap& map, const Vec2& pixel);

struct Peak {
  Vec2 pixel = Vec2::Zero();
  double confidence = 0.0;
  std::size_t index = 0;
  bool degenerate = false;  // every cell holds the same value
};

/// Maximal cell, ties to the smallest row-major index.
Peak argmax_location(const Heatmap& map);

/// All heatmaps of one multi-view frame, indexed (view, joint), with the
/// cameras that observed them. Views are addressed by position.
class HeatmapSet {
 public:
  HeatmapSet() = default;
  /// Zero maps with the given per-view dims.
  HeatmapSet(std::vector<CameraParams> cameras, int joints, std::vector<GridDims> dims, double stride);
  HeatmapSet(std::vector<CameraParams> cameras, int joints, std::vector<Heatmap> maps);

  int views() const { return static_cast<int>(cameras_.size()); }
  int joints() const { return joints_; }
  const std::vector<CameraParams>& cameras() const { return cameras_; }
  const CameraParams& camera(int view) const { return cameras_.at(static_cast<std::size_t>(view)); }
  GridDims dims(int view) const { return map(view, 0).dims(); }
  double stride() const { return maps_.empty() ? kDefaultStride : maps_.front().stride(); }

  const Heatmap& map(int view, int joint) const { return maps_.at(slot(view, joint)); }
  Heatmap& map(int view, int joint) { return maps_.at(slot(view, joint)); }
  const std::vector<Heatmap>& maps() const { return maps_; }

  friend bool operator==(const HeatmapSet& a, const HeatmapSet& b) {
    return a.joints_ == b.joints_ && a.maps_ == b.maps_;
  }

 private:
  std::size_t slot(int view, int joint) const {
    return static_cast<std::size_t>(view) * static_cast<std::size_t>(joints_) + static_cast<std::size_t>(joint);
  }
  void validate() const;

  std::vector<CameraParams> cameras_;
  int joints_ = 0;
  std::vector<Heatmap> maps_;
};

}  // namespace crossview
