// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Online segmentation driver: consumes per-frame forward/backward flow
// pairs, maintains projected prior segmentations and graphs, and emits one
// label map per frame together with a JSON sidecar.

#pragma once

#include <deque>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "motionbits/flow.hpp"
#include "motionbits/graph.hpp"
#include "motionbits/segmentation.hpp"

namespace mb::pipeline {

struct PipelineConfig {
  int nodes = 10000;  // perfect square
  int k = 5;
  double seed_fraction = 0.04;
  int propagation_iterations = 100;
  int reinjection_period = 5;
  seg::MclParams mcl;
  double motion_epsilon = 0.5;
  graph::MotionGate motion_gate = graph::MotionGate::node_speed;
  geom::RansacConfig ransac;
  int history = 0;  // how many prior frames feed temporal editing; 0 = all
  seg::RasterParams raster;
  uint64_t seed = 0;
  bool dump_graphs = false;
  bool ci = false;  // omit wall-clock fields so outputs are byte-stable

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

struct FrameOutput {
  int frame = 0;
  flow::LabelMap labels;
  nlohmann::json sidecar;
  std::optional<nlohmann::json> graph_dump;  // when dump_graphs is set
};

class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, int width, int height);

  /// One transition: forward flow (t-1 -> t) and backward flow (t -> t-1).
  /// Returns the segmentation for the new frame t (first call yields t = 1).
  FrameOutput push(const flow::FlowField& forward, const flow::FlowField& backward);

  int next_frame() const { return frame_; }

 private:
  struct Prior {
    std::vector<std::vector<std::pair<int, double>>> adjacency;
    flow::LabelMap projected;   // that frame's labels carried forward to now
    flow::FlowField back;       // flow from the current frame back to it
  };

  PipelineConfig config_;
  int width_, height_;
  int frame_ = 1;
  seg::LabelRegistry registry_;
  flow::LabelMap previous_labels_;
  std::deque<Prior> priors_;
};

/// Runs the online loop over a scene directory (flow_fwd/%05d.flo,
/// flow_bwd/%05d.flo starting at 00001) and writes masks/%05d.png,
/// sidecars/%05d.json, config.json, and optionally graphs/%05d.json into
/// out_dir. Returns the number of frames emitted.
int run_segment(const PipelineConfig& config, const std::filesystem::path& scene_dir,
                const std::filesystem::path& out_dir);

}  // namespace mb::pipeline
