// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-frame spatial-twist similarity graph: uniform node grid with backward
// flow matches, local rigid-motion twists per node, Gaussian kernel over the
// locally adaptive Mahalanobis distance, and temporal edge editing against
// projected prior segmentations.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "motionbits/flow.hpp"
#include "motionbits/geometry.hpp"

namespace mb::graph {

struct NodeGrid {
  int side = 0;          // grid is side x side
  int width = 0, height = 0;
  std::vector<Eigen::Vector2d> positions;  // current-frame node points
  std::vector<Eigen::Vector2d> matches;    // backward-flow matches in the previous frame
  std::vector<std::vector<int>> knn;       // k nearest neighbors per node, self excluded

  int count() const { return side * side; }
  double cell_width() const { return static_cast<double>(width) / side; }
  double cell_height() const { return static_cast<double>(height) / side; }
  /// Nearest grid node to an arbitrary image position.
  int nearest_node(const Eigen::Vector2d& p) const;
};

/// Uniform sqrt(n) x sqrt(n) grid of pixel-center nodes; matches are
/// p + F_bwd(p) sampled bilinearly. n must be a perfect square with
/// sqrt(n) > k so each node has k distinct neighbors.
NodeGrid sample_nodes(const flow::FlowField& backward, int node_count, int k);

enum class MotionGate {
  node_speed,       // fitted rigid velocity at the node position
  twist_composite,  // |(omega * half-diagonal, v)| of the origin twist
};

struct TwistParams {
  geom::RansacConfig ransac;
  double motion_epsilon = 0.5;  // px/frame
  MotionGate gate = MotionGate::node_speed;
  uint64_t seed = 0;
};

struct NodeTwist {
  geom::Twist2 twist;            // forward motion, re-expressed about the image origin
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // over neighborhood twists
  double node_speed = 0.0;       // |fitted velocity| at the node
  bool moving = false;
};

/// Per-node robust rigid fit over the node and its k neighbors. The backward
/// fit (current points onto previous-frame matches) is inverted so the stored
/// twist describes the forward motion; its linear part is the velocity of the
/// material point at the image origin, which is identical for every node of
/// an exactly rigid motion. Degenerate neighborhoods come back static.
std::vector<NodeTwist> estimate_local_twists(const NodeGrid& grid, const TwistParams& params);

/// Prior frame evidence, already projected to the current frame by the
/// caller: per-current-node projected label, the prior node each current
/// node corresponds to (via composed backward flows), and the prior graph
/// weights for must-link lookups.
struct PriorFrame {
  std::vector<uint16_t> node_labels;             // projected mask sampled at node positions
  std::vector<int> node_map;                     // current node -> prior node index (-1 if none)
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // prior graph weights
};

struct GraphParams {
  double weight_floor = 1e-12;  // kernel edges below this are dropped
};

struct MotionGraph {
  int n = 0;
  std::vector<NodeTwist> twists;
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // sorted by neighbor index

  double weight(int u, int v) const;
  bool has_edge(int u, int v) const { return weight(u, v) > 0.0; }
  double degree(int u) const;
};

/// Kernel edges over kNN pairs of moving nodes (max-symmetrized), then
/// temporal editing: must-link edges restored between node pairs that shared
/// one nonzero projected label at every prior frame, carrying the greatest
/// prior weight; edges removed between pairs separated (different nonzero
/// labels) at any prior frame. Static nodes carry no edges.
MotionGraph build_twist_sim_graph(const NodeGrid& grid, const std::vector<NodeTwist>& twists,
                                  std::span<const PriorFrame> priors,
                                  const GraphParams& params = {});

/// Covariance regularization used by the kernel: sigma + lambda * I with
/// lambda = max(1e-6 * trace / 3, 1e-9).
Eigen::Matrix3d regularize_covariance(const Eigen::Matrix3d& sigma);

/// sqrt(dv' * inv(sigma_reg) * dv); sigma must already be regularized.
double mahalanobis_distance(const Eigen::Vector3d& dv, const Eigen::Matrix3d& sigma_reg);

inline double similarity_kernel(double mdist) { return std::exp(-0.5 * mdist * mdist); }

nlohmann::json graph_to_json(const NodeGrid& grid, const MotionGraph& graph);

}  // namespace mb::graph
