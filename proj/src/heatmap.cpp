#include "crossview/heatmap.hpp"

#include <cmath>
#include <string>

#include "crossview/error.hpp"

namespace crossview {

Heatmap::Heatmap(GridDims dims, double stride, int joint, int view)
    : dims_(dims), stride_(stride), joint_(joint), view_(view) {
  if (dims.rows <= 0 || dims.cols <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "heatmap dimensions must be positive");
  }
  if (!(stride > 0.0)) throw Error(ErrorCode::kInvalidArgument, "heatmap stride must be positive");
  values_.assign(dims.cells(), 0.0f);
}

Vec2 Heatmap::cell_center(int row, int col) const {
  const double offset = 0.5 * (stride_ - 1.0);
  return Vec2(col * stride_ + offset, row * stride_ + offset);
}

Vec2 Heatmap::cell_center(std::size_t linear) const {
  const auto cols = static_cast<std::size_t>(dims_.cols);
  return cell_center(static_cast<int>(linear / cols), static_cast<int>(linear % cols));
}

Vec2 Heatmap::to_cell(const Vec2& pixel) const {
  const double offset = 0.5 * (stride_ - 1.0);
  return Vec2((pixel.x() - offset) / stride_, (pixel.y() - offset) / stride_);
}

void add_gaussian(Heatmap& map, const Vec2& center, double sigma, double amplitude) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const double d2 = (map.cell_center(r, c) - center).squaredNorm();
      map.at(r, c) += static_cast<float>(amplitude * std::exp(-d2 * inv));
    }
  }
}

std::vector<Heatmap> render_gaussian(std::span<const Vec2> centers, double sigma, GridDims dims,
                                     double stride) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gaussian sigma must be positive");
  std::vector<Heatmap> maps;
  maps.reserve(centers.size());
  const double x_max = dims.cols * stride - 0.5;
  const double y_max = dims.rows * stride - 0.5;
  const double margin = 3.0 * sigma;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    Heatmap map(dims, stride, static_cast<int>(j), 0);
    const Vec2& c = centers[j];
    const bool far_outside = !c.allFinite() || c.x() < -0.5 - margin || c.x() > x_max + margin ||
                             c.y() < -0.5 - margin || c.y() > y_max + margin;
    if (!far_outside) add_gaussian(map, c, sigma, 1.0);
    maps.push_back(std::move(map));
  }
  return maps;
}

double sample_bilinear(const Heatmap& map, const Vec2& pixel) {
  const Vec2 cell = map.to_cell(pixel);
  const double fx = std::floor(cell.x());
  const double fy = std::floor(cell.y());
  if (!(fx >= -1.0 && fx < map.cols() && fy >= -1.0 && fy < map.rows())) return 0.0;
  const int c0 = static_cast<int>(fx);
  const int r0 = static_cast<int>(fy);
  const double tx = cell.x() - fx;
  const double ty = cell.y() - fy;
  auto value = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= map.rows() || c >= map.cols()) return 0.0;
    return map.at(r, c);
  };
  const double top = (1.0 - tx) * value(r0, c0) + tx * value(r0, c0 + 1);
  const double bottom = (1.0 - tx) * value(r0 + 1, c0) + tx * value(r0 + 1, c0 + 1);
  return (1.0 - ty) * top + ty * bottom;
}

Peak argmax_location(const Heatmap& map) {
  const auto values = map.values();
  Peak peak;
  if (values.empty()) {
    peak.degenerate = true;
    return peak;
  }
  std::size_t best = 0;
  bool all_equal = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] != values[0]) all_equal = false;
    if (values[i] > values[best]) best = i;
  }
  peak.index = best;
  peak.pixel = map.cell_center(best);
  peak.confidence = values[best];
  peak.degenerate = all_equal;
  return peak;
}

HeatmapSet::HeatmapSet(std::vector<CameraParams> cameras, int joints, std::vector<GridDims> dims,
                       double stride)
    : cameras_(std::move(cameras)), joints_(joints) {
  if (dims.size() != cameras_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one grid size per view is required");
  }
  maps_.reserve(cameras_.size() * static_cast<std::size_t>(std::max(joints, 0)));
  for (int v = 0; v < views(); ++v) {
    for (int j = 0; j < joints; ++j) maps_.emplace_back(dims[static_cast<std::size_t>(v)], stride, j, v);
  }
  validate();
}

HeatmapSet::HeatmapSet(std::vector<CameraParams> cameras, int joints, std::vector<Heatmap> maps)
    : cameras_(std::move(cameras)), joints_(joints), maps_(std::move(maps)) {
  for (int v = 0; v < views() && joints_ > 0; ++v) {
    for (int j = 0; j < joints_; ++j) {
      if (slot(v, j) < maps_.size()) maps_[slot(v, j)].set_labels(j, v);
    }
  }
  validate();
}

void HeatmapSet::validate() const {
  if (joints_ <= 0) throw Error(ErrorCode::kInvalidArgument, "heatmap set needs at least one joint");
  if (cameras_.empty()) throw Error(ErrorCode::kInvalidArgument, "heatmap set needs at least one view");
  if (maps_.size() != cameras_.size() * static_cast<std::size_t>(joints_)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected " + std::to_string(cameras_.size() * static_cast<std::size_t>(joints_)) +
                    " maps, got " + std::to_string(maps_.size()));
  }
  for (int v = 0; v < views(); ++v) {
    const Heatmap& first = map(v, 0);
    for (int j = 1; j < joints_; ++j) {
      if (map(v, j).dims() != first.dims() || map(v, j).stride() != first.stride()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "view " + std::to_string(v) + ": all joint maps must share dimensions");
      }
    }
  }
}

}  // namespace crossview
