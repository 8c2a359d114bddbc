// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/pipeline.hpp"

#include <chrono>
#include <cmath>

namespace mb::pipeline {

using nlohmann::json;

void PipelineConfig::validate() const {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(nodes))));
  if (side * side != nodes || nodes < 4) {
    fail(ErrorCode::validation, "config: nodes must be a perfect square >= 4");
  }
  if (k < 2 || k >= nodes) fail(ErrorCode::validation, "config: need 2 <= k < nodes");
  if (!(seed_fraction > 0.0) || seed_fraction > 1.0) {
    fail(ErrorCode::validation, "config: seed_fraction must be in (0, 1]");
  }
  if (propagation_iterations < 1) fail(ErrorCode::validation, "config: propagation_iterations >= 1");
  if (reinjection_period < 1 || reinjection_period > propagation_iterations) {
    fail(ErrorCode::validation, "config: need 1 <= reinjection_period <= propagation_iterations");
  }
  if (!(mcl.inflation > 1.0)) fail(ErrorCode::validation, "config: mcl.inflation must exceed 1");
  if (mcl.expansion < 2) fail(ErrorCode::validation, "config: mcl.expansion must be >= 2");
  if (motion_epsilon < 0.0) fail(ErrorCode::validation, "config: motion_epsilon must be >= 0");
  if (ransac.max_iterations < 1 || !(ransac.inlier_threshold > 0.0)) {
    fail(ErrorCode::validation, "config: bad ransac parameters");
  }
  if (history < 0) fail(ErrorCode::validation, "config: history must be >= 0");
}

json PipelineConfig::to_json() const {
  return json{
      {"nodes", nodes},
      {"k", k},
      {"seed_fraction", seed_fraction},
      {"propagation_iterations", propagation_iterations},
      {"reinjection_period", reinjection_period},
      {"mcl",
       {{"inflation", mcl.inflation},
        {"expansion", mcl.expansion},
        {"prune_threshold", mcl.prune_threshold},
        {"max_column_entries", mcl.max_column_entries},
        {"convergence_tol", mcl.convergence_tol},
        {"max_iterations", mcl.max_iterations}}},
      {"motion_epsilon", motion_epsilon},
      {"motion_gate", motion_gate == graph::MotionGate::node_speed ? "node_speed" : "twist_composite"},
      {"ransac", {{"iterations", ransac.max_iterations}, {"inlier_threshold", ransac.inlier_threshold}}},
      {"history", history},
      {"raster",
       {{"radius_scale", raster.radius_scale}, {"smooth", raster.smooth}, {"flow_refine", raster.flow_refine}}},
      {"seed", seed},
      {"dump_graphs", dump_graphs},
      {"ci", ci}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    c.nodes = j.value("nodes", c.nodes);
    c.k = j.value("k", c.k);
    c.seed_fraction = j.value("seed_fraction", c.seed_fraction);
    c.propagation_iterations = j.value("propagation_iterations", c.propagation_iterations);
    c.reinjection_period = j.value("reinjection_period", c.reinjection_period);
    if (j.contains("mcl")) {
      const auto& m = j["mcl"];
      c.mcl.inflation = m.value("inflation", c.mcl.inflation);
      c.mcl.expansion = m.value("expansion", c.mcl.expansion);
      c.mcl.prune_threshold = m.value("prune_threshold", c.mcl.prune_threshold);
      c.mcl.max_column_entries = m.value("max_column_entries", c.mcl.max_column_entries);
      c.mcl.convergence_tol = m.value("convergence_tol", c.mcl.convergence_tol);
      c.mcl.max_iterations = m.value("max_iterations", c.mcl.max_iterations);
    }
    c.motion_epsilon = j.value("motion_epsilon", c.motion_epsilon);
    if (j.contains("motion_gate")) {
      const std::string gate = j["motion_gate"].get<std::string>();
      if (gate == "node_speed") {
        c.motion_gate = graph::MotionGate::node_speed;
      } else if (gate == "twist_composite") {
        c.motion_gate = graph::MotionGate::twist_composite;
      } else {
        fail(ErrorCode::validation, "config: unknown motion_gate '" + gate + "'");
      }
    }
    if (j.contains("ransac")) {
      c.ransac.max_iterations = j["ransac"].value("iterations", c.ransac.max_iterations);
      c.ransac.inlier_threshold = j["ransac"].value("inlier_threshold", c.ransac.inlier_threshold);
    }
    c.history = j.value("history", c.history);
    if (j.contains("raster")) {
      c.raster.radius_scale = j["raster"].value("radius_scale", c.raster.radius_scale);
      c.raster.smooth = j["raster"].value("smooth", c.raster.smooth);
      c.raster.flow_refine = j["raster"].value("flow_refine", c.raster.flow_refine);
    }
    c.seed = j.value("seed", c.seed);
    c.dump_graphs = j.value("dump_graphs", c.dump_graphs);
    c.ci = j.value("ci", c.ci);
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Pipeline::Pipeline(const PipelineConfig& config, int width, int height)
    : config_(config), width_(width), height_(height) {
  config_.validate();
  if (width < 1 || height < 1) fail(ErrorCode::invalid_argument, "pipeline: empty canvas");
  previous_labels_ = flow::LabelMap(width, height);
}

FrameOutput Pipeline::push(const flow::FlowField& forward, const flow::FlowField& backward) {
  const auto started = std::chrono::steady_clock::now();
  if (forward.width != width_ || forward.height != height_ || backward.width != width_ ||
      backward.height != height_) {
    fail(ErrorCode::invalid_argument, "pipeline: flow dimensions disagree with the canvas");
  }
  const int t = frame_;

  // carry stored priors to the current frame
  for (auto& prior : priors_) {
    prior.projected = flow::warp_labels(prior.projected, forward);
    prior.back = flow::compose_flows(backward, prior.back);
  }

  auto grid = graph::sample_nodes(backward, config_.nodes, config_.k);

  graph::TwistParams twist_params;
  twist_params.ransac = config_.ransac;
  twist_params.motion_epsilon = config_.motion_epsilon;
  twist_params.gate = config_.motion_gate;
  twist_params.seed = splitmix64(config_.seed + static_cast<uint64_t>(t));
  const auto twists = graph::estimate_local_twists(grid, twist_params);

  // prior views at node granularity
  std::vector<graph::PriorFrame> prior_views;
  prior_views.reserve(priors_.size());
  for (const auto& prior : priors_) {
    graph::PriorFrame view;
    view.adjacency = prior.adjacency;
    view.node_labels.resize(grid.count());
    view.node_map.resize(grid.count());
    for (int i = 0; i < grid.count(); ++i) {
      const auto& p = grid.positions[i];
      const int x = std::clamp(static_cast<int>(p.x()), 0, width_ - 1);
      const int y = std::clamp(static_cast<int>(p.y()), 0, height_ - 1);
      view.node_labels[i] = prior.projected.at(x, y);
      const Eigen::Vector2d back = p + flow::sample_bilinear(prior.back, p.x(), p.y());
      view.node_map[i] = grid.nearest_node(back);
    }
    prior_views.push_back(std::move(view));
  }

  const auto motion_graph = graph::build_twist_sim_graph(grid, twists, prior_views);

  const int class_budget = std::max(1, static_cast<int>(config_.seed_fraction * config_.nodes));
  const auto seeds = seg::select_seeds(motion_graph, class_budget);

  FrameOutput out;
  out.frame = t;
  seg::ClusterResult clusters;
  clusters.clusters.assign(grid.count(), 0);
  if (!seeds.seed_nodes.empty()) {
    const auto embedding = seg::soft_label_propagation(motion_graph, seeds,
                                                       config_.propagation_iterations,
                                                       config_.reinjection_period);
    clusters = seg::hard_markov_clustering(embedding, config_.mcl);
  }

  // one consensus motion per cluster: the refit over every member
  // correspondence is the twist the frame reports for its nodes
  geom::RansacConfig consensus_cfg = config_.ransac;
  consensus_cfg.seed = splitmix64(config_.seed + 0x7fffu + static_cast<uint64_t>(t));
  const auto cluster_twists = seg::cluster_consensus_twists(clusters, grid, twists, consensus_cfg);

  const flow::LabelMap warped_prev = flow::warp_labels(previous_labels_, forward);
  auto raster = seg::rasterize_masks(clusters, grid, cluster_twists, &backward, config_.raster,
                                     t > 1 ? &warped_prev : nullptr, registry_);
  out.labels = std::move(raster.labels);

  int moving = 0;
  for (const auto& tw : twists) moving += tw.moving;
  json nodes = json::array();
  for (int i = 0; i < grid.count(); ++i) {
    if (!twists[i].moving) continue;
    const int c = clusters.clusters[i];
    const geom::Twist2& twist = c > 0 ? cluster_twists[c] : twists[i].twist;
    nodes.push_back({i, grid.positions[i].x(), grid.positions[i].y(), twist.omega, twist.v.x(),
                     twist.v.y(), raster.node_ids[i]});
  }
  out.sidecar = json{{"frame", t},
                     {"grid_side", grid.side},
                     {"moving_nodes", moving},
                     {"seed_classes", static_cast<int>(seeds.seed_nodes.size())},
                     {"clusters", clusters.cluster_count},
                     {"mcl", {{"converged", clusters.converged}, {"iterations", clusters.iterations}}},
                     {"priors", static_cast<int>(priors_.size())},
                     {"node_fields", {"index", "x", "y", "omega", "vx", "vy", "id"}},
                     {"nodes", std::move(nodes)}};
  if (!config_.ci) {
    out.sidecar["elapsed_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }
  if (config_.dump_graphs) out.graph_dump = graph::graph_to_json(grid, motion_graph);

  // store this frame as a prior for the future
  Prior stored;
  stored.adjacency = motion_graph.adjacency;
  stored.projected = out.labels;
  stored.back = flow::FlowField(width_, height_);  // identity at its own frame
  priors_.push_back(std::move(stored));
  if (config_.history > 0) {
    while (static_cast<int>(priors_.size()) > config_.history) priors_.pop_front();
  }
  previous_labels_ = out.labels;
  ++frame_;
  return out;
}

namespace {

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", t);
  return buf;
}

}  // namespace

int run_segment(const PipelineConfig& config, const std::filesystem::path& scene_dir,
                const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(scene_dir / "flow_bwd")) {
    fail(ErrorCode::io_error, "scene has no flow_bwd directory: " + scene_dir.string());
  }
  int frames = 1;
  while (fs::exists(scene_dir / "flow_bwd" / (frame_name(frames) + ".flo"))) ++frames;
  if (frames == 1) fail(ErrorCode::io_error, "no backward flows found in " + scene_dir.string());

  fs::create_directories(out_dir / "masks");
  fs::create_directories(out_dir / "sidecars");
  if (config.dump_graphs) fs::create_directories(out_dir / "graphs");
  write_file_atomic(out_dir / "config.json", config.to_json().dump(2) + "\n");

  std::optional<Pipeline> pipe;
  for (int t = 1; t < frames; ++t) {
    const fs::path fwd_path = scene_dir / "flow_fwd" / (frame_name(t) + ".flo");
    const fs::path bwd_path = scene_dir / "flow_bwd" / (frame_name(t) + ".flo");
    if (!fs::exists(fwd_path)) {
      fail(ErrorCode::io_error, "missing forward flow for frame " + std::to_string(t) + ": " +
                                    fwd_path.string());
    }
    const auto fwd = flow::read_flow(fwd_path);
    const auto bwd = flow::read_flow(bwd_path);
    if (!pipe) pipe.emplace(config, fwd.width, fwd.height);
    auto out = pipe->push(fwd, bwd);
    flow::write_labels(out.labels, out_dir / "masks" / (frame_name(t) + ".png"));
    write_file_atomic(out_dir / "sidecars" / (frame_name(t) + ".json"), out.sidecar.dump() + "\n");
    if (out.graph_dump) {
      write_file_atomic(out_dir / "graphs" / (frame_name(t) + ".json"), out.graph_dump->dump() + "\n");
    }
  }
  return frames - 1;
}

}  // namespace mb::pipeline
