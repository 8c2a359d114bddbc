// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mb::graph {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

int NodeGrid::nearest_node(const Vector2d& p) const {
  const int ix = std::clamp(static_cast<int>(p.x() / cell_width()), 0, side - 1);
  const int iy = std::clamp(static_cast<int>(p.y() / cell_height()), 0, side - 1);
  return iy * side + ix;
}

NodeGrid sample_nodes(const flow::FlowField& backward, int node_count, int k) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(node_count))));
  if (side * side != node_count) {
    fail(ErrorCode::invalid_argument, "sample_nodes: node count must be a perfect square");
  }
  if (k < 2 || side * side <= k) {
    fail(ErrorCode::invalid_argument, "sample_nodes: need k >= 2 and more than k nodes");
  }
  if (side > backward.width || side > backward.height) {
    fail(ErrorCode::invalid_argument, "sample_nodes: grid does not fit the canvas");
  }

  NodeGrid grid;
  grid.side = side;
  grid.width = backward.width;
  grid.height = backward.height;
  grid.positions.reserve(node_count);
  grid.matches.reserve(node_count);

  const double cw = grid.cell_width();
  const double ch = grid.cell_height();
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const Vector2d p((ix + 0.5) * cw, (iy + 0.5) * ch);
      grid.positions.push_back(p);
      grid.matches.push_back(p + flow::sample_bilinear(backward, p.x(), p.y()));
    }
  }

  // k nearest by Euclidean distance, ties broken by row-major index
  grid.knn.assign(node_count, {});
  int half = 1;
  while ((2 * half + 1) * (2 * half + 1) - 1 < k) ++half;
  half += 1;
  std::vector<std::pair<double, int>> cands;
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const int idx = iy * side + ix;
      int window = half;
      while (true) {
        cands.clear();
        for (int dy = -window; dy <= window; ++dy) {
          const int ny = iy + dy;
          if (ny < 0 || ny >= side) continue;
          for (int dx = -window; dx <= window; ++dx) {
            const int nx = ix + dx;
            if (nx < 0 || nx >= side || (dx == 0 && dy == 0)) continue;
            const double d2 = dx * cw * dx * cw + dy * ch * dy * ch;
            cands.emplace_back(d2, ny * side + nx);
          }
        }
        if (static_cast<int>(cands.size()) >= k) break;
        ++window;
      }
      std::sort(cands.begin(), cands.end());
      auto& nn = grid.knn[idx];
      nn.reserve(k);
      for (int i = 0; i < k; ++i) nn.push_back(cands[i].second);
    }
  }
  return grid;
}

std::vector<NodeTwist> estimate_local_twists(const NodeGrid& grid, const TwistParams& params) {
  const int n = grid.count();
  std::vector<NodeTwist> out(n);

  std::vector<Vector2d> P, Q;
  for (int i = 0; i < n; ++i) {
    P.clear();
    Q.clear();
    P.push_back(grid.positions[i]);
    Q.push_back(grid.matches[i]);
    for (int j : grid.knn[i]) {
      P.push_back(grid.positions[j]);
      Q.push_back(grid.matches[j]);
    }

    geom::RansacConfig cfg = params.ransac;
    cfg.seed = splitmix64(params.seed ^ static_cast<uint64_t>(i));
    NodeTwist node;
    try {
      const auto fit = geom::ransac_se2(P, Q, cfg);
      const geom::RigidTransform2 forward = fit.transform.inverse();
      node.twist.omega = forward.angle();
      node.twist.v = forward.t;
      node.node_speed = (forward.apply(grid.positions[i]) - grid.positions[i]).norm();
    } catch (const Error&) {
      node = NodeTwist{};  // degenerate neighborhood: static, zero twist
    }
    out[i] = node;
  }

  const double half_diag = 0.5 * std::hypot(static_cast<double>(grid.width),
                                            static_cast<double>(grid.height));
  for (auto& node : out) {
    const double measure = params.gate == MotionGate::node_speed
                               ? node.node_speed
                               : std::sqrt(node.twist.omega * half_diag * node.twist.omega * half_diag +
                                           node.twist.v.squaredNorm());
    node.moving = measure > params.motion_epsilon;
  }

  // neighborhood covariance over the k+1 twist samples
  for (int i = 0; i < n; ++i) {
    Vector3d mean = out[i].twist.as_vector();
    for (int j : grid.knn[i]) mean += out[j].twist.as_vector();
    const double m = static_cast<double>(grid.knn[i].size() + 1);
    mean /= m;
    Matrix3d cov = Matrix3d::Zero();
    auto accumulate = [&](const Vector3d& sample) {
      const Vector3d d = sample - mean;
      cov += d * d.transpose();
    };
    accumulate(out[i].twist.as_vector());
    for (int j : grid.knn[i]) accumulate(out[j].twist.as_vector());
    out[i].covariance = cov / m;
  }
  return out;
}

Matrix3d regularize_covariance(const Matrix3d& sigma) {
  const double lambda = std::max(1e-6 * sigma.trace() / 3.0, 1e-9);
  return sigma + lambda * Matrix3d::Identity();
}

double mahalanobis_distance(const Vector3d& dv, const Matrix3d& sigma_reg) {
  const Vector3d x = sigma_reg.llt().solve(dv);
  const double q = dv.dot(x);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

double MotionGraph::weight(int u, int v) const {
  const auto& row = adjacency[u];
  const auto it = std::lower_bound(row.begin(), row.end(), v,
                                   [](const std::pair<int, double>& e, int key) { return e.first < key; });
  return (it != row.end() && it->first == v) ? it->second : 0.0;
}

double MotionGraph::degree(int u) const {
  double d = 0.0;
  for (const auto& [_, w] : adjacency[u]) d += w;
  return d;
}

MotionGraph build_twist_sim_graph(const NodeGrid& grid, const std::vector<NodeTwist>& twists,
                                  std::span<const PriorFrame> priors, const GraphParams& params) {
  const int n = grid.count();
  if (static_cast<int>(twists.size()) != n) {
    fail(ErrorCode::invalid_argument, "build_twist_sim_graph: twists and grid disagree");
  }

  MotionGraph graph;
  graph.n = n;
  graph.twists = twists;

  // kernel weights on directed kNN relations, symmetrized by max
  std::map<std::pair<int, int>, double> edges;  // key (min,max)
  for (int i = 0; i < n; ++i) {
    if (!twists[i].moving) continue;
    const Matrix3d sigma = regularize_covariance(twists[i].covariance);
    for (int j : grid.knn[i]) {
      if (!twists[j].moving) continue;
      const Vector3d dv = twists[i].twist.as_vector() - twists[j].twist.as_vector();
      const double w = similarity_kernel(mahalanobis_distance(dv, sigma));
      if (w < params.weight_floor) continue;
      auto key = std::minmax(i, j);
      auto [it, inserted] = edges.try_emplace({key.first, key.second}, w);
      if (!inserted) it->second = std::max(it->second, w);
    }
  }

  // label history per node: shared nonzero label at every prior frame
  const size_t np = priors.size();
  std::vector<uint8_t> history_all_nonzero(n, np > 0 ? 1 : 0);
  for (const auto& prior : priors) {
    for (int i = 0; i < n; ++i) {
      if (prior.node_labels[i] == 0) history_all_nonzero[i] = 0;
    }
  }
  auto same_nonzero_history = [&](int u, int v) {
    if (!history_all_nonzero[u] || !history_all_nonzero[v]) return false;
    for (const auto& prior : priors) {
      if (prior.node_labels[u] != prior.node_labels[v]) return false;
    }
    return true;
  };

  // must-link: re-add prior-graph edges between current nodes that map onto
  // them, weighted by the greatest prior weight
  if (np > 0) {
    std::map<std::pair<int, int>, double> mustlink;
    std::vector<std::vector<int>> inverse;
    for (const auto& prior : priors) {
      const int pn = static_cast<int>(prior.adjacency.size());
      inverse.assign(pn, {});
      for (int i = 0; i < n; ++i) {
        const int p = prior.node_map[i];
        if (p >= 0 && p < pn && twists[i].moving && history_all_nonzero[i]) {
          inverse[p].push_back(i);
        }
      }
      for (int a = 0; a < pn; ++a) {
        if (inverse[a].empty()) continue;
        for (const auto& [b, w] : prior.adjacency[a]) {
          if (b < a || inverse[b].empty()) continue;  // undirected: visit once
          for (int u : inverse[a]) {
            for (int v : inverse[b]) {
              if (u == v || !same_nonzero_history(u, v)) continue;
              auto key = std::minmax(u, v);
              auto [it, inserted] = mustlink.try_emplace({key.first, key.second}, w);
              if (!inserted) it->second = std::max(it->second, w);
            }
          }
        }
      }
    }
    for (const auto& [key, w] : mustlink) {
      auto [it, inserted] = edges.try_emplace(key, w);
      if (!inserted) it->second = std::max(it->second, w);
    }

    // cannot-link: separated (different nonzero labels) at any prior frame
    for (auto it = edges.begin(); it != edges.end();) {
      const auto [u, v] = it->first;
      bool separated = false;
      for (const auto& prior : priors) {
        const uint16_t lu = prior.node_labels[u], lv = prior.node_labels[v];
        if (lu != 0 && lv != 0 && lu != lv) separated = true;
      }
      it = separated ? edges.erase(it) : std::next(it);
    }
  }

  graph.adjacency.assign(n, {});
  for (const auto& [key, w] : edges) {
    graph.adjacency[key.first].emplace_back(key.second, w);
    graph.adjacency[key.second].emplace_back(key.first, w);
  }
  for (auto& row : graph.adjacency) std::sort(row.begin(), row.end());
  return graph;
}

nlohmann::json graph_to_json(const NodeGrid& grid, const MotionGraph& graph) {
  nlohmann::json j;
  j["side"] = grid.side;
  j["nodes"] = nlohmann::json::array();
  for (int i = 0; i < graph.n; ++i) {
    const auto& t = graph.twists[i];
    j["nodes"].push_back({{"pos", {grid.positions[i].x(), grid.positions[i].y()}},
                          {"twist", {t.twist.omega, t.twist.v.x(), t.twist.v.y()}},
                          {"moving", t.moving}});
  }
  j["edges"] = nlohmann::json::array();
  for (int u = 0; u < graph.n; ++u) {
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (v > u) j["edges"].push_back({{"u", u}, {"v", v}, {"w", w}});
    }
  }
  return j;
}

}  // namespace mb::graph
