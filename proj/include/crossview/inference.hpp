#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crossview/heatmap.hpp"
#include "crossview/skeleton.hpp"

namespace crossview {

/// Cube of N^3 bins centred at `center`. Bin indices are row-major over
/// (z, y, x): index = (iz * N + iy) * N + ix.
struct GridSpec {
  Vec3 center = Vec3::Zero();
  double edge_length = 0.0;
  int bins = 0;

  std::size_t size() const {
    const auto n = static_cast<std::size_t>(bins);
    return n * n * n;
  }
  double spacing() const { return edge_length / bins; }
  /// Worst-case per-axis distance to the nearest bin centre, s / (2N).
  double max_quantization_error() const { return edge_length / (2.0 * bins); }
  Vec3 bin_center(std::size_t index) const;
  bool contains(const Vec3& point) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.center == b.center && a.edge_length == b.edge_length && a.bins == b.bins;
  }
};

GridSpec build_grid(const Vec3& center, double edge_length, int bins);

/// Coarse-to-fine schedule: stage 0 uses one shared N0^3 grid of edge s0,
/// stage t >= 1 uses per-joint Nr^3 grids of edge s0 / (N0 * Nr^(t-1)).
struct RefinementSchedule {
  double initial_edge_length = 2000.0;
  int initial_bins = 16;
  int refine_bins = 2;
  int iterations = 10;

  double edge_length(int stage) const;
  int bins(int stage) const { return stage == 0 ? initial_bins : refine_bins; }
  void validate() const;
};

struct Pose3D {
  std::vector<Vec3> joints;
  std::vector<double> confidence;

  int size() const { return static_cast<int>(joints.size()); }
};

using UnaryTable = std::vector<double>;

/// Per-joint unary table: each bin centre is projected into every view and
/// the joint's heatmap sampled bilinearly; the average over all views is
/// stored. Projections behind a camera or outside its heatmap count as 0.
std::vector<UnaryTable> unary_potentials(std::span<const GridSpec> grids, const HeatmapSet& set);

/// Closed interval [l - eps, l + eps] on limb length, compared in squared
/// distance so the DP and the standalone potential agree bit for bit.
struct LimbInterval {
  double min_sq;
  double max_sq;

  LimbInterval(double mean_length, double epsilon);
  bool contains(double dx, double dy, double dz) const {
    const double d2 = dx * dx + dy * dy + dz * dz;
    return d2 >= min_sq && d2 <= max_sq;
  }
  bool contains(const Vec3& a, const Vec3& b) const {
    return contains(a.x() - b.x(), a.y() - b.y(), a.z() - b.z());
  }
};

/// 1 when |pos_m - pos_n| lies in [l - eps, l + eps] (inclusive), else 0.
int pairwise_potential(const Vec3& pos_m, const Vec3& pos_n, double mean_length, double epsilon);

struct PsmResult {
  Pose3D pose;
  std::vector<std::size_t> bins;  // chosen bin per joint
  double score = 0.0;             // product of unaries and limb indicators
  double log_score = 0.0;
  bool infeasible = false;        // no configuration met every limb constraint
  std::vector<bool> uninformed;   // joints whose unary table was identically zero
};

/// Exact MAP of the tree model by max-product dynamic programming in log
/// space. Ties resolve to the smallest bin index at every argmax. A joint
/// whose unary table is identically zero carries no evidence and is scored
/// uniformly. When no configuration is feasible the per-joint unary argmax
/// is returned with `infeasible` set.
PsmResult psm_infer(const BodyGraph& graph, std::span<const GridSpec> grids,
                    std::span<const UnaryTable> unaries, const LimbPriors& priors);

/// Peaks of the root maps triangulated over every view whose map is not flat.
Vec3 triangulate_root(const HeatmapSet& set, int root_joint);

struct StageResult {
  int stage = 0;
  double edge_length = 0.0;
  int bins = 0;
  std::vector<GridSpec> grids;  // one per joint
  PsmResult psm;
  double unary_ms = 0.0;
  double inference_ms = 0.0;
};

struct RpsmResult {
  Pose3D pose;
  Vec3 root = Vec3::Zero();
  std::vector<StageResult> stages;  // stage 0 is plain PSM
};

/// Recursive PSM: a shared coarse grid around the triangulated root (the
/// centroid of the triangulable joints if the root is seen in fewer than two
/// views), then `schedule.iterations` refinements on per-joint grids centred
/// at the previous estimates.
RpsmResult rpsm_reconstruct(const HeatmapSet& set, const BodyGraph& graph, const LimbPriors& priors,
                            const RefinementSchedule& schedule);

/// Per-joint peak triangulation over every view, flat maps included, without
/// structural constraints. Joints whose solve is ill-conditioned get
/// confidence 0 and are placed at the centroid of the joints that did
/// triangulate.
Pose3D triangulate_pose(const HeatmapSet& set);

}  // namespace crossview
