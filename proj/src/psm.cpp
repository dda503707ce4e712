#include "crossview/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crossview/error.hpp"

namespace crossview {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Projections of every bin centre into one view; NaN marks "no projection".
std::vector<Vec2> project_bins(const GridSpec& grid, const CameraParams& camera) {
  std::vector<Vec2> pixels(grid.size());
  const Vec2 invalid(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    pixels[b] = try_project(grid.bin_center(b), camera).value_or(invalid);
  }
  return pixels;
}

struct BinCoords {
  std::vector<double> x, y, z;

  explicit BinCoords(const GridSpec& grid) : x(grid.size()), y(grid.size()), z(grid.size()) {
    for (std::size_t b = 0; b < grid.size(); ++b) {
      const Vec3 p = grid.bin_center(b);
      x[b] = p.x();
      y[b] = p.y();
      z[b] = p.z();
    }
  }
};

}  // namespace

std::vector<UnaryTable> unary_potentials(std::span<const GridSpec> grids, const HeatmapSet& set) {
  if (static_cast<int>(grids.size()) != set.joints()) {
    throw Error(ErrorCode::kJointCountMismatch, "one grid per joint is required");
  }
  const double inv_views = 1.0 / set.views();
  std::vector<UnaryTable> tables(grids.size());
  std::vector<std::vector<Vec2>> projections;
  const GridSpec* projected_grid = nullptr;
  for (std::size_t j = 0; j < grids.size(); ++j) {
    const GridSpec& grid = grids[j];
    if (projected_grid == nullptr || !(*projected_grid == grid)) {
      projections.clear();
      for (int v = 0; v < set.views(); ++v) projections.push_back(project_bins(grid, set.camera(v)));
      projected_grid = &grid;
    }
    UnaryTable& table = tables[j];
    table.assign(grid.size(), 0.0);
    for (int v = 0; v < set.views(); ++v) {
      const Heatmap& map = set.map(v, static_cast<int>(j));
      const auto& pixels = projections[static_cast<std::size_t>(v)];
      for (std::size_t b = 0; b < grid.size(); ++b) {
        if (std::isnan(pixels[b].x())) continue;
        table[b] += sample_bilinear(map, pixels[b]);
      }
    }
    for (double& value : table) value *= inv_views;
  }
  return tables;
}

LimbInterval::LimbInterval(double mean_length, double epsilon) {
  const double lo = mean_length - epsilon;
  const double hi = mean_length + epsilon;
  min_sq = lo > 0.0 ? lo * lo : 0.0;
  max_sq = hi * hi;
}

int pairwise_potential(const Vec3& pos_m, const Vec3& pos_n, double mean_length, double epsilon) {
  return LimbInterval(mean_length, epsilon).contains(pos_m, pos_n) ? 1 : 0;
}

PsmResult psm_infer(const BodyGraph& graph, std::span<const GridSpec> grids,
                    std::span<const UnaryTable> unaries, const LimbPriors& priors) {
  const auto m = static_cast<std::size_t>(graph.joints());
  if (grids.size() != m || unaries.size() != m) {
    throw Error(ErrorCode::kJointCountMismatch, "psm: one grid and one unary table per joint are required");
  }
  priors.validate(graph);

  PsmResult result;
  result.uninformed.assign(m, false);
  std::vector<std::vector<double>> belief(m);
  for (std::size_t j = 0; j < m; ++j) {
    const UnaryTable& u = unaries[j];
    if (u.size() != grids[j].size()) {
      throw Error(ErrorCode::kDimensionMismatch, "psm: unary table size differs from its grid for joint " + std::to_string(j));
    }
    bool any_positive = false;
    for (double value : u) {
      if (!(value >= 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::kInvalidArgument, "psm: unary potentials must be finite and non-negative");
      }
      any_positive = any_positive || value > 0.0;
    }
    belief[j].resize(u.size());
    if (!any_positive) {
      result.uninformed[j] = true;
      std::fill(belief[j].begin(), belief[j].end(), 0.0);
      continue;
    }
    for (std::size_t b = 0; b < u.size(); ++b) belief[j][b] = u[b] > 0.0 ? std::log(u[b]) : kNegInf;
  }

  std::vector<BinCoords> coords;
  coords.reserve(m);
  for (std::size_t j = 0; j < m; ++j) coords.emplace_back(grids[j]);

  // Leaf-to-root max-product messages. best_child[c][xp] is the argmax over
  // the child's bins given the parent's bin xp.
  std::vector<std::vector<std::size_t>> best_child(m);
  const auto& order = graph.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int child = *it;
    if (child == graph.root()) continue;
    const auto c = static_cast<std::size_t>(child);
    const auto p = static_cast<std::size_t>(graph.parent(child));
    const LimbInterval limb(priors.lengths[static_cast<std::size_t>(graph.edge_of(child))], priors.epsilon);

    const BinCoords& pc = coords[p];
    const BinCoords& cc = coords[c];
    const std::vector<double>& cb = belief[c];
    const std::size_t parent_bins = pc.x.size();
    const std::size_t child_bins = cc.x.size();
    std::vector<std::size_t>& arg = best_child[c];
    arg.assign(parent_bins, 0);
    std::vector<double>& pb = belief[p];
    for (std::size_t xp = 0; xp < parent_bins; ++xp) {
      const double px = pc.x[xp], py = pc.y[xp], pz = pc.z[xp];
      double best = kNegInf;
      std::size_t best_bin = 0;
      for (std::size_t xc = 0; xc < child_bins; ++xc) {
        if (cb[xc] > best && limb.contains(px - cc.x[xc], py - cc.y[xc], pz - cc.z[xc])) {
          best = cb[xc];
          best_bin = xc;
        }
      }
      arg[xp] = best_bin;
      pb[xp] += best;
    }
  }

  const auto root = static_cast<std::size_t>(graph.root());
  const std::vector<double>& rb = belief[root];
  std::size_t root_bin = 0;
  for (std::size_t b = 1; b < rb.size(); ++b) {
    if (rb[b] > rb[root_bin]) root_bin = b;
  }

  result.bins.assign(m, 0);
  if (rb[root_bin] == kNegInf) {
    result.infeasible = true;
    for (std::size_t j = 0; j < m; ++j) {
      const UnaryTable& u = unaries[j];
      result.bins[j] = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
    }
  } else {
    result.bins[root] = root_bin;
    for (int joint : order) {
      if (joint == graph.root()) continue;
      const auto j = static_cast<std::size_t>(joint);
      result.bins[j] = best_child[j][result.bins[static_cast<std::size_t>(graph.parent(joint))]];
    }
  }

  result.pose.joints.resize(m);
  result.pose.confidence.resize(m);
  double score = 1.0;
  double log_score = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    result.pose.joints[j] = grids[j].bin_center(result.bins[j]);
    const double u = unaries[j][result.bins[j]];
    result.pose.confidence[j] = u;
    if (!result.uninformed[j]) {
      score *= u;
      log_score += u > 0.0 ? std::log(u) : kNegInf;
    }
  }
  for (std::size_t e = 0; e < graph.edges().size(); ++e) {
    const Edge& edge = graph.edges()[e];
    if (pairwise_potential(result.pose.joints[static_cast<std::size_t>(edge.parent)],
                           result.pose.joints[static_cast<std::size_t>(edge.child)], priors.lengths[e],
                           priors.epsilon) == 0) {
      score = 0.0;
      log_score = kNegInf;
    }
  }
  result.score = score;
  result.log_score = log_score;
  return result;
}

}  // namespace crossview
