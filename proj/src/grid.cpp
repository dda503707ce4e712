#include "crossview/inference.hpp"

#include <cmath>

#include "crossview/error.hpp"

namespace crossview {

Vec3 GridSpec::bin_center(std::size_t index) const {
  const auto n = static_cast<std::size_t>(bins);
  const std::size_t ix = index % n;
  const std::size_t iy = (index / n) % n;
  const std::size_t iz = index / (n * n);
  const double step = spacing();
  const double half = 0.5 * edge_length;
  return Vec3(center.x() - half + (static_cast<double>(ix) + 0.5) * step,
              center.y() - half + (static_cast<double>(iy) + 0.5) * step,
              center.z() - half + (static_cast<double>(iz) + 0.5) * step);
}

bool GridSpec::contains(const Vec3& point) const {
  return ((point - center).cwiseAbs().array() <= 0.5 * edge_length).all();
}

GridSpec build_grid(const Vec3& center, double edge_length, int bins) {
  if (!(edge_length > 0.0) || !std::isfinite(edge_length)) {
    throw Error(ErrorCode::kInvalidArgument, "grid edge length must be positive");
  }
  if (bins < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 2 bins per axis");
  if (!center.allFinite()) throw Error(ErrorCode::kInvalidArgument, "grid centre must be finite");
  return GridSpec{center, edge_length, bins};
}

double RefinementSchedule::edge_length(int stage) const {
  if (stage <= 0) return initial_edge_length;
  return initial_edge_length / (initial_bins * std::pow(static_cast<double>(refine_bins), stage - 1));
}

void RefinementSchedule::validate() const {
  if (!(initial_edge_length > 0.0)) throw Error(ErrorCode::kConfig, "initial edge length must be positive");
  if (initial_bins < 2 || refine_bins < 2) throw Error(ErrorCode::kConfig, "bins per axis must be >= 2");
  if (iterations < 0) throw Error(ErrorCode::kConfig, "iterations must be >= 0");
}

}  // namespace crossview
