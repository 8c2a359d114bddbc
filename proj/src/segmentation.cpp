// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <numeric>

#include "motionbits/metrics.hpp"

namespace mb::seg {

SeedAssignment select_seeds(const graph::MotionGraph& graph, int class_count) {
  std::vector<int> moving;
  for (int i = 0; i < graph.n; ++i) {
    if (graph.twists[i].moving) moving.push_back(i);
  }
  SeedAssignment seeds;
  if (moving.empty() || class_count <= 0) return seeds;
  const int c = std::min<int>(class_count, static_cast<int>(moving.size()));
  seeds.seed_nodes.reserve(c);
  for (int k = 0; k < c; ++k) {
    const size_t idx = static_cast<size_t>((k + 0.5) * moving.size() / c);
    seeds.seed_nodes.push_back(moving[std::min(idx, moving.size() - 1)]);
  }
  return seeds;
}

SoftEmbedding soft_label_propagation(const graph::MotionGraph& graph, const SeedAssignment& seeds,
                                     int iterations, int reinjection_period) {
  if (iterations < 1 || reinjection_period < 1 || reinjection_period > iterations) {
    fail(ErrorCode::invalid_argument, "soft_label_propagation: bad iteration parameters");
  }
  const int n = graph.n;
  const int C = seeds.class_count();
  SoftEmbedding emb;
  emb.n = n;
  emb.classes = C;
  emb.values.assign(static_cast<size_t>(n) * C, 0.0);
  if (C == 0) return emb;

  std::vector<double> state(emb.values);
  for (int c = 0; c < C; ++c) state[static_cast<size_t>(seeds.seed_nodes[c]) * C + c] = 1.0;

  // transition rows a_ij = w_ij / degree(i), kept in neighbor index order so
  // the accumulation order is reproducible by a dense reference
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int i = 0; i < n; ++i) {
    double degree = 0.0;
    for (const auto& [j, w] : graph.adjacency[i]) degree += w;
    if (degree <= 0.0) continue;  // isolated: row persists
    rows[i].reserve(graph.adjacency[i].size());
    for (const auto& [j, w] : graph.adjacency[i]) rows[i].emplace_back(j, w / degree);
  }

  std::vector<double> next(state.size());
  for (int r = 1; r <= iterations; ++r) {
    for (int i = 0; i < n; ++i) {
      double* out = next.data() + static_cast<size_t>(i) * C;
      if (rows[i].empty()) {
        const double* keep = state.data() + static_cast<size_t>(i) * C;
        std::copy(keep, keep + C, out);
        continue;
      }
      std::fill(out, out + C, 0.0);
      for (const auto& [j, a] : rows[i]) {
        const double* in = state.data() + static_cast<size_t>(j) * C;
        for (int c = 0; c < C; ++c) out[c] += a * in[c];
      }
    }
    state.swap(next);
    if (r % reinjection_period == 0) {
      for (int c = 0; c < C; ++c) state[static_cast<size_t>(seeds.seed_nodes[c]) * C + c] += 1.0;
    }
  }
  emb.values = std::move(state);
  return emb;
}

namespace {

using SparseCols = std::vector<std::vector<std::pair<int, double>>>;  // (row, value), sorted

void normalize_and_prune(std::vector<std::pair<int, double>>& col, const MclParams& params,
                         double* residual) {
  double sum = 0.0;
  for (const auto& [r, v] : col) sum += v;
  if (sum <= 0.0) return;
  for (auto& [r, v] : col) v /= sum;
  if (residual) {
    double check = 0.0;
    for (const auto& [r, v] : col) check += v;
    *residual = std::max(*residual, std::abs(1.0 - check));
  }

  // drop tiny entries, cap the column fan-in, renormalize
  std::erase_if(col, [&](const auto& e) { return e.second < params.prune_threshold; });
  if (static_cast<int>(col.size()) > params.max_column_entries) {
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    col.resize(params.max_column_entries);
    std::sort(col.begin(), col.end());
  }
  double kept = 0.0;
  for (const auto& [r, v] : col) kept += v;
  if (kept > 0.0) {
    for (auto& [r, v] : col) v /= kept;
  }
}

SparseCols multiply(const SparseCols& x, const SparseCols& y, std::vector<double>& scratch,
                    std::vector<int>& touched) {
  const int n = static_cast<int>(x.size());
  SparseCols out(n);
  for (int j = 0; j < n; ++j) {
    touched.clear();
    for (const auto& [k, yv] : y[j]) {
      for (const auto& [r, xv] : x[k]) {
        if (scratch[r] == 0.0) touched.push_back(r);
        scratch[r] += xv * yv;
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& col = out[j];
    col.reserve(touched.size());
    for (int r : touched) {
      col.emplace_back(r, scratch[r]);
      scratch[r] = 0.0;
    }
  }
  return out;
}

double max_difference(const SparseCols& a, const SparseCols& b, std::vector<double>& scratch,
                      std::vector<int>& touched) {
  double diff = 0.0;
  const int n = static_cast<int>(a.size());
  for (int j = 0; j < n; ++j) {
    touched.clear();
    for (const auto& [r, v] : a[j]) {
      if (scratch[r] == 0.0) touched.push_back(r);
      scratch[r] += v;
    }
    for (const auto& [r, v] : b[j]) {
      if (scratch[r] == 0.0) touched.push_back(r);
      scratch[r] -= v;
    }
    for (int r : touched) {
      diff = std::max(diff, std::abs(scratch[r]));
      scratch[r] = 0.0;
    }
  }
  return diff;
}

}  // namespace

ClusterResult hard_markov_clustering(const SoftEmbedding& embedding, const MclParams& params) {
  if (!(params.inflation > 1.0) || params.expansion < 2) {
    fail(ErrorCode::invalid_argument, "hard_markov_clustering: need inflation > 1, expansion >= 2");
  }
  ClusterResult result;
  result.clusters.assign(embedding.n, 0);

  // active nodes: nonzero embedding rows; zero rows never received any paint
  std::vector<int> active;
  std::vector<double> norms(embedding.n, 0.0);
  for (int i = 0; i < embedding.n; ++i) {
    double s = 0.0;
    for (int c = 0; c < embedding.classes; ++c) {
      const double v = embedding.at(i, c);
      s += v * v;
    }
    norms[i] = std::sqrt(s);
    if (norms[i] > 0.0) active.push_back(i);
  }
  const int na = static_cast<int>(active.size());
  if (na == 0) return result;

  // row-normalized embedding, active rows only
  const int C = embedding.classes;
  std::vector<double> bhat(static_cast<size_t>(na) * C);
  for (int a = 0; a < na; ++a) {
    const int i = active[a];
    for (int c = 0; c < C; ++c) bhat[static_cast<size_t>(a) * C + c] = embedding.at(i, c) / norms[i];
  }

  // X = Bhat Bhat' column by column with unit self-loops, column stochastic
  SparseCols cols(na);
  {
    std::vector<double> col(na);
    for (int j = 0; j < na; ++j) {
      const double* bj = bhat.data() + static_cast<size_t>(j) * C;
      for (int a = 0; a < na; ++a) {
        const double* ba = bhat.data() + static_cast<size_t>(a) * C;
        double dot = 0.0;
        for (int c = 0; c < C; ++c) dot += ba[c] * bj[c];
        col[a] = dot;
      }
      col[j] = 1.0;  // unit self-loop
      auto& sparse = cols[j];
      for (int a = 0; a < na; ++a) {
        if (col[a] > 0.0) sparse.emplace_back(a, col[a]);
      }
      normalize_and_prune(sparse, params, nullptr);
    }
  }

  std::vector<double> scratch(na, 0.0);
  std::vector<int> touched;
  result.converged = false;
  for (int it = 0; it < params.max_iterations; ++it) {
    SparseCols expanded = multiply(cols, cols, scratch, touched);
    for (int e = 2; e < params.expansion; ++e) expanded = multiply(cols, expanded, scratch, touched);
    for (auto& col : expanded) {
      for (auto& [r, v] : col) v = std::pow(v, params.inflation);
      normalize_and_prune(col, params, &result.max_column_residual);
    }
    const double diff = max_difference(cols, expanded, scratch, touched);
    cols.swap(expanded);
    result.iterations = it + 1;
    if (diff < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  // attractor systems: diagonal-positive nodes, merged when one attracts
  // another
  std::vector<int> parent(na);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<uint8_t> attractor(na, 0);
  for (int j = 0; j < na; ++j) {
    for (const auto& [r, v] : cols[j]) {
      if (r == j && v > params.attractor_eps) attractor[j] = 1;
    }
  }
  for (int j = 0; j < na; ++j) {
    if (!attractor[j]) continue;
    for (const auto& [r, v] : cols[j]) {
      if (attractor[r] && v > params.attractor_eps) parent[find(r)] = find(j);
    }
  }

  // assign each node to the strongest attracting system
  std::vector<int> system_of(na, -1);
  for (int j = 0; j < na; ++j) {
    double best = 0.0;
    int best_row = -1;
    for (const auto& [r, v] : cols[j]) {
      if (!attractor[r]) continue;
      if (v > best || (v == best && best_row >= 0 && find(r) < find(best_row))) {
        best = v;
        best_row = r;
      }
    }
    system_of[j] = best_row >= 0 ? find(best_row) : find(j);  // fallback: own singleton
  }

  // stable cluster numbering by first appearance in node order
  std::vector<int> label_of_system(na, 0);
  int next_label = 0;
  for (int j = 0; j < na; ++j) {
    const int sys = system_of[j];
    if (label_of_system[sys] == 0) label_of_system[sys] = ++next_label;
    result.clusters[active[j]] = label_of_system[sys];
  }
  result.cluster_count = next_label;
  return result;
}

std::vector<geom::Twist2> cluster_consensus_twists(const ClusterResult& clusters,
                                                   const graph::NodeGrid& grid,
                                                   const std::vector<graph::NodeTwist>& twists,
                                                   const geom::RansacConfig& ransac) {
  std::vector<std::vector<Eigen::Vector2d>> P(clusters.cluster_count + 1), Q(clusters.cluster_count + 1);
  std::vector<double> sum_omega(clusters.cluster_count + 1, 0.0);
  std::vector<Eigen::Vector2d> sum_v(clusters.cluster_count + 1, Eigen::Vector2d::Zero());
  for (int i = 0; i < grid.count(); ++i) {
    const int c = clusters.clusters[i];
    if (c == 0) continue;
    P[c].push_back(grid.positions[i]);
    Q[c].push_back(grid.matches[i]);
    sum_omega[c] += twists[i].twist.omega;
    sum_v[c] += twists[i].twist.v;
  }
  std::vector<geom::Twist2> out(clusters.cluster_count + 1);
  for (int c = 1; c <= clusters.cluster_count; ++c) {
    if (P[c].empty()) continue;
    try {
      geom::RansacConfig cfg = ransac;
      cfg.seed = splitmix64(ransac.seed ^ static_cast<uint64_t>(c));
      const auto forward = (P[c].size() >= 2 ? geom::ransac_se2(P[c], Q[c], cfg).transform
                                             : geom::RigidTransform2::identity())
                               .inverse();
      if (P[c].size() >= 2) {
        out[c] = {forward.angle(), forward.t};
        continue;
      }
    } catch (const Error&) {
      // fall through to the member mean
    }
    const double m = static_cast<double>(P[c].size());
    out[c] = {sum_omega[c] / m, sum_v[c] / m};
  }
  return out;
}

RasterResult rasterize_masks(const ClusterResult& clusters, const graph::NodeGrid& grid,
                             const std::vector<geom::Twist2>& cluster_twists,
                             const flow::FlowField* backward, const RasterParams& params,
                             const flow::LabelMap* warped_previous, LabelRegistry& registry) {
  const int width = grid.width, height = grid.height;
  RasterResult out;
  out.labels = flow::LabelMap(width, height);

  // tentative raster: each pixel follows its cell's node when moving and
  // within reach
  flow::LabelMap tentative(width, height);
  const double radius = params.radius_scale * std::max(grid.cell_width(), grid.cell_height());
  const double radius2 = radius * radius;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector2d p(x + 0.5, y + 0.5);
      const int node = grid.nearest_node(p);
      if (clusters.clusters[node] == 0) continue;
      if ((grid.positions[node] - p).squaredNorm() > radius2) continue;
      tentative.at(x, y) = static_cast<uint16_t>(clusters.clusters[node]);
    }
  }

  if (params.smooth) {
    // one 3x3 majority pass; ties resolved toward the smaller label
    flow::LabelMap smoothed(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        uint16_t values[9];
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = std::clamp(x + dx, 0, width - 1);
            const int ny = std::clamp(y + dy, 0, height - 1);
            values[count++] = tentative.at(nx, ny);
          }
        }
        std::sort(values, values + 9);
        uint16_t best = values[0];
        int best_run = 1, run = 1;
        for (int i = 1; i < 9; ++i) {
          run = values[i] == values[i - 1] ? run + 1 : 1;
          if (run > best_run) {
            best_run = run;
            best = values[i];
          }
        }
        smoothed.at(x, y) = best;
      }
    }
    tentative = std::move(smoothed);
  }

  if (params.flow_refine && backward != nullptr && clusters.cluster_count > 0) {
    std::vector<geom::RigidTransform2> backward_motion(clusters.cluster_count + 1);
    std::vector<int> members(clusters.cluster_count + 1, 0);
    for (int c : clusters.clusters) {
      if (c > 0) ++members[c];
    }
    for (int c = 1; c <= clusters.cluster_count; ++c) {
      backward_motion[c] =
          geom::RigidTransform2::from_angle(cluster_twists[c].omega, cluster_twists[c].v).inverse();
    }

    // boundary band: pixels whose cell-neighborhood mixes labels get snapped
    // to the candidate minimizing the backward-flow residual
    const int band = static_cast<int>(std::ceil(std::max(grid.cell_width(), grid.cell_height())));
    flow::LabelMap refined = tentative;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        uint16_t lo = tentative.at(x, y), hi = lo;
        std::set<uint16_t> candidates;
        for (int dy = -band; dy <= band; ++dy) {
          const int ny = std::clamp(y + dy, 0, height - 1);
          for (int dx = -band; dx <= band; ++dx) {
            const int nx = std::clamp(x + dx, 0, width - 1);
            const uint16_t v = tentative.at(nx, ny);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            candidates.insert(v);
          }
        }
        if (lo == hi) continue;  // not near a boundary
        const Eigen::Vector2d observed(backward->dx(x, y), backward->dy(x, y));
        const Eigen::Vector2d p(x + 0.5, y + 0.5);
        double best = observed.squaredNorm();  // background: zero motion
        uint16_t best_label = 0;
        for (uint16_t c : candidates) {
          if (c == 0 || members[c] == 0) continue;
          const Eigen::Vector2d predicted = backward_motion[c].apply(p) - p;
          const double r = (observed - predicted).squaredNorm();
          if (r < best) {
            best = r;
            best_label = c;
          }
        }
        refined.at(x, y) = best_label;
      }
    }
    tentative = std::move(refined);
  }

  // persistent IDs: maximum-IoU matching against the warped previous mask
  std::vector<uint16_t> id_of_cluster(static_cast<size_t>(clusters.cluster_count) + 1, 0);
  if (warped_previous != nullptr) {
    const auto matching = eval::hungarian_match(tentative, *warped_previous);
    for (const auto& pair : matching.pairs) {
      id_of_cluster[pair.pred_id] = pair.gt_id;  // keep the previous instance ID
    }
  }
  for (int c = 1; c <= clusters.cluster_count; ++c) {
    bool label_present = false;
    for (uint16_t v : tentative.labels) {
      if (v == c) {
        label_present = true;
        break;
      }
    }
    if (label_present && id_of_cluster[c] == 0) id_of_cluster[c] = registry.next_id++;
  }

  for (size_t i = 0; i < tentative.labels.size(); ++i) {
    const uint16_t c = tentative.labels[i];
    if (c) out.labels.labels[i] = id_of_cluster[c];
  }
  out.node_ids.assign(grid.count(), 0);
  for (int i = 0; i < grid.count(); ++i) {
    const int c = clusters.clusters[i];
    if (c > 0) out.node_ids[i] = id_of_cluster[c];
  }
  return out;
}

}  // namespace mb::seg
