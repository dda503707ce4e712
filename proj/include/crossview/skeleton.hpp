#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "crossview/geometry.hpp"

namespace crossview {

struct Edge {
  int parent;
  int child;
};

/// Tree-structured body model. Joint indices are positions in `names`; the
/// root has parent -1. Edge k connects child `edges()[k].child` to its parent;
/// edges are listed in ascending child order.
class BodyGraph {
 public:
  BodyGraph(std::vector<std::string> names, std::vector<int> parents);

  /// 17-joint human tree rooted at the pelvis with 16 limbs.
  static BodyGraph human17();

  int joints() const { return static_cast<int>(names_.size()); }
  int root() const { return root_; }
  const std::string& name(int joint) const { return names_.at(static_cast<std::size_t>(joint)); }
  const std::vector<std::string>& names() const { return names_; }
  int parent(int joint) const { return parents_.at(static_cast<std::size_t>(joint)); }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& children(int joint) const { return children_.at(static_cast<std::size_t>(joint)); }
  /// Root first, every parent before its children (breadth-first).
  const std::vector<int>& topological_order() const { return order_; }
  /// Edge index whose child is `joint`; -1 for the root.
  int edge_of(int child) const { return edge_of_.at(static_cast<std::size_t>(child)); }
  /// -1 when absent.
  int find(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::vector<int> parents_;
  int root_ = -1;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> children_;
  std::vector<int> order_;
  std::vector<int> edge_of_;
};

inline constexpr double kDefaultLimbTolerance = 150.0;

/// Mean limb length per edge (mm) and the shared tolerance epsilon (mm).
struct LimbPriors {
  std::vector<double> lengths;
  double epsilon = kDefaultLimbTolerance;

  void validate(const BodyGraph& graph) const;
};

/// Representative adult limb lengths for `BodyGraph::human17()`.
LimbPriors human17_limb_priors();

/// Mean edge lengths measured over a set of poses.
LimbPriors limb_priors_from_poses(const BodyGraph& graph, const std::vector<std::vector<Vec3>>& poses,
                                  double epsilon);

}  // namespace crossview
