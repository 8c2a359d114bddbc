// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/flow.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "png_io.hpp"

namespace mb::flow {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr int kMaxDimension = 100000;

}  // namespace

FlowField read_flow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());

  float magic = 0.0f;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (!in || magic != kFloMagic) {
    fail(ErrorCode::format_error, "bad flow magic at byte offset 0 in " + path.string());
  }
  int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  if (!in) fail(ErrorCode::format_error, "truncated header at byte offset 4 in " + path.string());
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in) fail(ErrorCode::format_error, "truncated header at byte offset 8 in " + path.string());
  if (w <= 0 || w > kMaxDimension) {
    fail(ErrorCode::format_error, "invalid width at byte offset 4 in " + path.string());
  }
  if (h <= 0 || h > kMaxDimension) {
    fail(ErrorCode::format_error, "invalid height at byte offset 8 in " + path.string());
  }

  FlowField field(w, h);
  const size_t payload = field.data.size() * sizeof(float);
  in.read(reinterpret_cast<char*>(field.data.data()), static_cast<std::streamsize>(payload));
  if (static_cast<size_t>(in.gcount()) != payload) {
    fail(ErrorCode::format_error,
         "truncated payload at byte offset " + std::to_string(12 + in.gcount()) + " in " + path.string());
  }
  return field;
}

void write_flow(const FlowField& field, const std::filesystem::path& path) {
  if (field.width <= 0 || field.height <= 0) {
    fail(ErrorCode::invalid_argument, "write_flow: empty field");
  }
  std::string buffer;
  buffer.resize(12 + field.data.size() * sizeof(float));
  const float magic = kFloMagic;
  const int32_t w = field.width, h = field.height;
  std::memcpy(buffer.data(), &magic, 4);
  std::memcpy(buffer.data() + 4, &w, 4);
  std::memcpy(buffer.data() + 8, &h, 4);
  std::memcpy(buffer.data() + 12, field.data.data(), field.data.size() * sizeof(float));
  write_file_atomic(path, buffer);
}

LabelMap read_labels(const std::filesystem::path& path) {
  LabelMap map;
  map.labels = pngio::read_gray16(path, map.width, map.height);
  return map;
}

void write_labels(const LabelMap& labels, const std::filesystem::path& path) {
  if (labels.width <= 0 || labels.height <= 0) {
    fail(ErrorCode::invalid_argument, "write_labels: empty map");
  }
  pngio::write_gray16(path, labels.labels.data(), labels.width, labels.height);
}

Eigen::Vector2d sample_bilinear(const FlowField& field, double x, double y) {
  // shift so pixel centers sit at integers, then clamp inside the grid
  double u = x - 0.5;
  double v = y - 0.5;
  u = std::min(std::max(u, 0.0), static_cast<double>(field.width - 1));
  v = std::min(std::max(v, 0.0), static_cast<double>(field.height - 1));
  const int x0 = std::min(static_cast<int>(u), field.width - 1);
  const int y0 = std::min(static_cast<int>(v), field.height - 1);
  const int x1 = std::min(x0 + 1, field.width - 1);
  const int y1 = std::min(y0 + 1, field.height - 1);
  const double fx = u - x0;
  const double fy = v - y0;

  auto at = [&](int xi, int yi) { return Eigen::Vector2d(field.dx(xi, yi), field.dy(xi, yi)); };
  const Eigen::Vector2d top = (1 - fx) * at(x0, y0) + fx * at(x1, y0);
  const Eigen::Vector2d bot = (1 - fx) * at(x0, y1) + fx * at(x1, y1);
  return (1 - fy) * top + fy * bot;
}

FlowField compose_flows(const FlowField& ab, const FlowField& bc) {
  if (ab.width != bc.width || ab.height != bc.height) {
    fail(ErrorCode::invalid_argument, "compose_flows: dimension mismatch");
  }
  FlowField out(ab.width, ab.height);
  for (int y = 0; y < ab.height; ++y) {
    for (int x = 0; x < ab.width; ++x) {
      if (!ab.known(x, y)) {
        out.dx(x, y) = ab.dx(x, y);
        out.dy(x, y) = ab.dy(x, y);
        continue;
      }
      const double px = x + 0.5 + ab.dx(x, y);
      const double py = y + 0.5 + ab.dy(x, y);
      const Eigen::Vector2d second = sample_bilinear(bc, px, py);
      out.dx(x, y) = static_cast<float>(ab.dx(x, y) + second.x());
      out.dy(x, y) = static_cast<float>(ab.dy(x, y) + second.y());
    }
  }
  return out;
}

LabelMap warp_labels(const LabelMap& labels, const FlowField& flow) {
  if (labels.width != flow.width || labels.height != flow.height) {
    fail(ErrorCode::invalid_argument, "warp_labels: dimension mismatch");
  }
  LabelMap out(labels.width, labels.height);
  // per-target best (flow magnitude, source index); -1 = unfilled
  std::vector<float> best_mag(out.labels.size(), -1.0f);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const uint16_t label = labels.at(x, y);
      if (label == 0 || !flow.known(x, y)) continue;
      const float dx = flow.dx(x, y), dy = flow.dy(x, y);
      const int tx = static_cast<int>(std::lround(x + dx));
      const int ty = static_cast<int>(std::lround(y + dy));
      if (tx < 0 || ty < 0 || tx >= out.width || ty >= out.height) continue;
      const float mag = dx * dx + dy * dy;
      float& cur = best_mag[static_cast<size_t>(ty) * out.width + tx];
      // strictly-greater keeps the earlier (smaller row-major) source on ties
      if (mag > cur) {
        cur = mag;
        out.at(tx, ty) = label;
      }
    }
  }
  return out;
}

}  // namespace mb::flow
