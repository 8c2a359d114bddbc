// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic planar rigid-scene generator: declarative scene specs, exact
// analytic flow fields, ground-truth label maps, and a seeded scene sampler.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionbits/flow.hpp"
#include "motionbits/geometry.hpp"

namespace mb::sim {

struct BodyShape {
  enum class Kind { disc, polygon };
  Kind kind = Kind::disc;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // disc only
  double radius = 0.0;                               // disc only
  std::vector<Eigen::Vector2d> points;               // polygon only

  bool contains(const Eigen::Vector2d& body_point) const;
  /// Loose axis-aligned bound in body coordinates.
  void bounds(Eigen::Vector2d& lo, Eigen::Vector2d& hi) const;
};

struct Body {
  std::string name;
  int z = 0;  // larger z occludes smaller; ties go to the earlier body
  BodyShape shape;
  std::vector<geom::RigidTransform2> trajectory;  // pose (body -> world) per frame
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  int frames = 0;
  double flow_noise_sigma = 0.0;  // applied to written flows only
  std::vector<Body> bodies;

  void validate() const;  // throws validation error
  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
  static SceneSpec load(const std::filesystem::path& path);
};

struct SceneFrameTruth {
  flow::LabelMap labels;          // ground truth at this frame
  flow::FlowField forward;        // flow t -> t+1, valid when has_forward
  flow::FlowField backward;       // flow t -> t-1, valid when has_backward
  bool has_forward = false;
  bool has_backward = false;
  std::vector<geom::Twist2> body_twists;  // per body, step (t-1 -> t); zeros at t = 0
  std::vector<uint8_t> body_present;      // body has visible pixels this frame
};

struct SceneRender {
  std::vector<SceneFrameTruth> frames;
  std::vector<std::string> warnings;
};

/// Rasterizes each frame with depth-order occlusion and exact per-body rigid
/// displacement fields. A body is labeled (with ID = body index + 1) once its
/// motion has been nonzero at some step up to the current frame; otherwise
/// its pixels are background.
SceneRender render_scene(const SceneSpec& spec);

struct SamplerParams {
  int width = 320;
  int height = 320;
  int frames = 10;
  int body_count_min = 1;
  int body_count_max = 5;
  double speed_min = 1.2;   // px/frame drift magnitude
  double speed_max = 2.8;
  double omega_min = 0.0;   // rad/frame, sign randomized
  double omega_max = 0.04;
  double radius_min = 26.0;  // body half-extent, px
  double radius_max = 42.0;
  double min_twist_separation = 1.0;  // px/frame composite, pairwise and vs zero

  nlohmann::json to_json() const;
  static SamplerParams from_json(const nlohmann::json& j);
};

/// Composite twist magnitude in px/frame with omega scaled by the canvas
/// half-diagonal; also used by the pipeline's motion gate.
double composite_twist_norm(const geom::Twist2& t, int width, int height);

/// Reproducible scene draw. Guarantees every body stays inside the canvas
/// for the whole clip and that all body twists are pairwise separated (and
/// separated from zero) by at least min_twist_separation.
SceneSpec sample_scene(uint64_t seed, const SamplerParams& params);

/// Renders and writes the scene directory layout:
///   scene.json, masks/%05d.png (t = 0..T-1),
///   flow_fwd/%05d.flo (index t holds flow t-1 -> t),
///   flow_bwd/%05d.flo (index t holds flow t -> t-1).
/// flow_noise_sigma > 0 adds seeded Gaussian noise to the written flows.
std::vector<std::string> write_scene_dir(const SceneSpec& spec,
                                         const std::filesystem::path& dir,
                                         uint64_t noise_seed);

}  // namespace mb::sim
