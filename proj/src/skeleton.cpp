#include "crossview/skeleton.hpp"

#include <cmath>

#include "crossview/error.hpp"

namespace crossview {

BodyGraph::BodyGraph(std::vector<std::string> names, std::vector<int> parents)
    : names_(std::move(names)), parents_(std::move(parents)) {
  const int m = static_cast<int>(names_.size());
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "body graph needs at least one joint");
  if (parents_.size() != names_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "body graph: one parent entry per joint is required");
  }
  children_.resize(names_.size());
  edge_of_.assign(names_.size(), -1);
  for (int j = 0; j < m; ++j) {
    const int p = parents_[static_cast<std::size_t>(j)];
    if (p == -1) {
      if (root_ != -1) throw Error(ErrorCode::kInvalidArgument, "body graph has more than one root");
      root_ = j;
      continue;
    }
    if (p < 0 || p >= m || p == j) {
      throw Error(ErrorCode::kInvalidArgument, "body graph: invalid parent for joint '" + names_[static_cast<std::size_t>(j)] + "'");
    }
    edge_of_[static_cast<std::size_t>(j)] = static_cast<int>(edges_.size());
    edges_.push_back({p, j});
    children_[static_cast<std::size_t>(p)].push_back(j);
  }
  if (root_ == -1) throw Error(ErrorCode::kInvalidArgument, "body graph has no root");

  order_.reserve(names_.size());
  order_.push_back(root_);
  for (std::size_t head = 0; head < order_.size(); ++head) {
    for (int c : children_[static_cast<std::size_t>(order_[head])]) order_.push_back(c);
  }
  // With M-1 parent links, reaching every joint from the root rules out cycles.
  if (order_.size() != names_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "body graph is not a connected tree");
  }
  for (std::size_t a = 0; a < names_.size(); ++a) {
    for (std::size_t b = a + 1; b < names_.size(); ++b) {
      if (names_[a] == names_[b]) throw Error(ErrorCode::kInvalidArgument, "duplicate joint name '" + names_[a] + "'");
    }
  }
}

BodyGraph BodyGraph::human17() {
  return BodyGraph(
      {"pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle", "spine", "neck", "head",
       "head_top", "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"},
      {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15});
}

int BodyGraph::find(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return static_cast<int>(j);
  }
  return -1;
}

void LimbPriors::validate(const BodyGraph& graph) const {
  if (lengths.size() != graph.edges().size()) {
    throw Error(ErrorCode::kInvalidArgument, "limb priors: expected " + std::to_string(graph.edges().size()) +
                                                 " lengths, got " + std::to_string(lengths.size()));
  }
  for (double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorCode::kInvalidArgument, "limb lengths must be positive");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "limb tolerance must be >= 0");
}

LimbPriors human17_limb_priors() {
  // Indexed by edge, i.e. by child joint order 1..16.
  return LimbPriors{{
                        130.0,  // pelvis - r_hip
                        450.0,  // r_hip - r_knee
                        440.0,  // r_knee - r_ankle
                        130.0,  // pelvis - l_hip
                        450.0,  // l_hip - l_knee
                        440.0,  // l_knee - l_ankle
                        230.0,  // pelvis - spine
                        250.0,  // spine - neck
                        120.0,  // neck - head
                        115.0,  // head - head_top
                        150.0,  // neck - l_shoulder
                        280.0,  // l_shoulder - l_elbow
                        250.0,  // l_elbow - l_wrist
                        150.0,  // neck - r_shoulder
                        280.0,  // r_shoulder - r_elbow
                        250.0,  // r_elbow - r_wrist
                    },
                    kDefaultLimbTolerance};
}

LimbPriors limb_priors_from_poses(const BodyGraph& graph, const std::vector<std::vector<Vec3>>& poses,
                                  double epsilon) {
  if (poses.empty()) throw Error(ErrorCode::kInvalidArgument, "limb priors need at least one pose");
  LimbPriors priors;
  priors.epsilon = epsilon;
  priors.lengths.assign(graph.edges().size(), 0.0);
  for (const auto& pose : poses) {
    if (static_cast<int>(pose.size()) != graph.joints()) {
      throw Error(ErrorCode::kJointCountMismatch, "pose joint count differs from the body graph");
    }
    for (std::size_t e = 0; e < graph.edges().size(); ++e) {
      const Edge& edge = graph.edges()[e];
      priors.lengths[e] += (pose[static_cast<std::size_t>(edge.child)] - pose[static_cast<std::size_t>(edge.parent)]).norm();
    }
  }
  for (double& l : priors.lengths) l /= static_cast<double>(poses.size());
  return priors;
}

}  // namespace crossview
