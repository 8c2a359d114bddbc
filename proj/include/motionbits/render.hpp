// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Figure-style visualization: colored mask overlays on a synthetic
// background and motion quiver plots derived from the backward flow.

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "motionbits/flow.hpp"

namespace mb::render {

/// Deterministic palette; id 0 is background.
std::array<uint8_t, 3> palette_color(uint16_t id);

/// RGB8 buffer (3 bytes per pixel): labels blended at 50% over a neutral
/// gray background; background pixels are left untouched.
std::vector<uint8_t> overlay_image(const flow::LabelMap& labels);

struct Arrow {
  Eigen::Vector2d from;
  Eigen::Vector2d to;
};

/// One arrow per grid node with the node's forward velocity (the negated
/// backward flow), scaled for visibility. Nodes with motion below min_speed
/// are skipped.
std::vector<Arrow> quiver_arrows(const flow::FlowField& backward, int grid_side, double scale,
                                 double min_speed = 0.25);

/// In-place line rasterization into an RGB8 buffer.
void draw_arrow(std::vector<uint8_t>& rgb, int width, int height, const Arrow& arrow,
                const std::array<uint8_t, 3>& color);

struct RenderOptions {
  int quiver_grid = 32;      // arrows on a quiver_grid x quiver_grid lattice
  double quiver_scale = 3.0;
};

/// Writes overlays/%05d.png for every mask in masks_dir and, when the scene
/// has backward flows, quiver/%05d.png motion plots. Returns the number of
/// frames rendered.
int render_dirs(const std::filesystem::path& scene_dir, const std::filesystem::path& masks_dir,
                const std::filesystem::path& out_dir, const RenderOptions& options);

}  // namespace mb::render
