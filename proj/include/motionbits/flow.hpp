// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense flow fields and label maps with bit-exact container I/O
// (Middlebury .flo, 16-bit grayscale PNG), flow composition and
// forward label warping.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "motionbits/common.hpp"

namespace mb::flow {

/// Components with magnitude above this are "unknown flow" sentinels and are
/// preserved verbatim through I/O.
constexpr float kUnknownThreshold = 1e9f;

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major (dx, dy) pairs, 2 * width * height

  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 2, 0.0f) {}

  static FlowField constant(int w, int h, float dx, float dy) {
    FlowField f(w, h);
    for (size_t i = 0; i < f.data.size(); i += 2) {
      f.data[i] = dx;
      f.data[i + 1] = dy;
    }
    return f;
  }

  float& dx(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2]; }
  float& dy(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
  float dx(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2]; }
  float dy(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }

  bool known(int x, int y) const {
    return std::abs(dx(x, y)) < kUnknownThreshold && std::abs(dy(x, y)) < kUnknownThreshold;
  }
};

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> labels;  // row-major, 0 = background

  LabelMap() = default;
  LabelMap(int w, int h) : width(w), height(h), labels(static_cast<size_t>(w) * h, 0) {}

  uint16_t& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
  uint16_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

/// Middlebury container: float magic 202021.25, int32 width/height, then
/// row-major float32 (dx, dy). Read errors carry the byte offset of the
/// problem.
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const FlowField& field, const std::filesystem::path& path);

/// Single-channel 16-bit PNG.
LabelMap read_labels(const std::filesystem::path& path);
void write_labels(const LabelMap& labels, const std::filesystem::path& path);

/// Bilinear sample at continuous pixel coordinates (pixel centers at
/// integer + 0.5); the sample position is clamped to the image rectangle.
Eigen::Vector2d sample_bilinear(const FlowField& field, double x, double y);

/// F_ac(p) = F_ab(p) + F_bc(p + F_ab(p)); the second field is sampled
/// bilinearly. Unknown vectors in F_ab propagate as unknown.
FlowField compose_flows(const FlowField& ab, const FlowField& bc);

/// Forward-splat of nonzero labels along the flow with nearest-pixel
/// rounding. Collisions keep the source with the larger flow magnitude,
/// ties the smaller row-major source index. Unfilled pixels are 0.
LabelMap warp_labels(const LabelMap& labels, const FlowField& flow);

}  // namespace mb::flow
