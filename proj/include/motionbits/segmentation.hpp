// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage segmentation on the motion graph: seeded soft label propagation
// (random-walk diffusion with periodic seed reinjection) followed by hard
// Markov clustering of the embedding similarity, then rasterization of node
// clusters to a label map with persistent instance IDs.

#pragma once

#include <cstdint>
#include <vector>

#include "motionbits/flow.hpp"
#include "motionbits/graph.hpp"

namespace mb::seg {

struct SeedAssignment {
  std::vector<int> seed_nodes;  // node index per class; empty when nothing moves

  int class_count() const { return static_cast<int>(seed_nodes.size()); }
};

/// C seeds uniformly spaced over the moving nodes in row-major grid order,
/// one unique class each. Returns an empty assignment when no node moves.
/// C is clamped to the number of moving nodes.
SeedAssignment select_seeds(const graph::MotionGraph& graph, int class_count);

struct SoftEmbedding {
  int n = 0;
  int classes = 0;
  std::vector<double> values;  // row-major n x classes

  double at(int node, int c) const { return values[static_cast<size_t>(node) * classes + c]; }
};

/// B(0) = one-hot seeds; B(r+1) = A B(r) with A the row-stochastic transition
/// matrix D^-1 W; every reinjection_period iterations the seed rows get their
/// one-hot contribution added back. Zero-degree nodes keep their row. Plain
/// index-ordered arithmetic so a dense reference computation reproduces the
/// result bit for bit.
SoftEmbedding soft_label_propagation(const graph::MotionGraph& graph, const SeedAssignment& seeds,
                                     int iterations, int reinjection_period);

struct MclParams {
  double inflation = 1.15;
  int expansion = 2;
  double prune_threshold = 1e-5;
  // columns are only capped as a memory guard; a cap below the largest
  // similarity block truncates the walk support and fragments clusters
  int max_column_entries = 4096;
  double convergence_tol = 1e-6;
  int max_iterations = 200;
  double attractor_eps = 1e-6;
};

struct ClusterResult {
  std::vector<int> clusters;  // per node; 0 = background/static
  int cluster_count = 0;
  bool converged = true;
  int iterations = 0;
  double max_column_residual = 0.0;  // worst |1 - column sum| seen
};

/// Row-normalizes the embedding, forms the similarity X = B^ B^', applies
/// unit self-loops and column normalization, and alternates expansion with
/// inflation until the iterate is stable. Attractor systems become clusters;
/// a node attracted by several systems joins the one with the largest
/// incoming probability (ties to the lowest attractor index). Nodes with an
/// all-zero embedding row stay background.
ClusterResult hard_markov_clustering(const SoftEmbedding& embedding, const MclParams& params);

struct RasterParams {
  double radius_scale = 1.5;  // of the grid cell size
  bool smooth = true;         // one 3x3 majority pass
  // snap boundary-band pixels to the candidate whose rigid motion best
  // explains the pixel's backward flow; replaces learned mask refinement
  bool flow_refine = true;
};

struct LabelRegistry {
  uint16_t next_id = 1;
};

struct RasterResult {
  flow::LabelMap labels;
  std::vector<uint16_t> node_ids;  // persistent instance ID per node (0 = background)
};

/// Consensus rigid motion per cluster: a robust refit over all member
/// nodes' backward correspondences, inverted to the forward twist about the
/// image origin. Averaging over the whole cluster beats any single
/// neighborhood fit; every member node shares the value exactly. Index 0 is
/// the zero twist; degenerate clusters fall back to the member mean.
std::vector<geom::Twist2> cluster_consensus_twists(const ClusterResult& clusters,
                                                   const graph::NodeGrid& grid,
                                                   const std::vector<graph::NodeTwist>& twists,
                                                   const geom::RansacConfig& ransac);

/// Pixels take the cluster of their grid cell's node when that node is
/// moving and within radius_scale cells, else background; a boundary band of
/// one cell is then optionally re-classified by flow residual against the
/// adjacent clusters' consensus motions. Cluster IDs are mapped to
/// persistent instance IDs by maximum-IoU matching against the
/// forward-warped previous label map; unmatched clusters draw fresh IDs from
/// the registry.
RasterResult rasterize_masks(const ClusterResult& clusters, const graph::NodeGrid& grid,
                             const std::vector<geom::Twist2>& cluster_twists,
                             const flow::FlowField* backward, const RasterParams& params,
                             const flow::LabelMap* warped_previous, LabelRegistry& registry);

}  // namespace mb::seg
