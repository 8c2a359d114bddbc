// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/render.hpp"

#include <algorithm>
#include <cmath>

#include "png_io.hpp"

namespace mb::render {

namespace {
constexpr uint8_t kBackgroundGray = 200;
}

std::array<uint8_t, 3> palette_color(uint16_t id) {
  if (id == 0) return {kBackgroundGray, kBackgroundGray, kBackgroundGray};
  // golden-angle hue walk, fixed saturation/value
  const double hue = std::fmod(0.61803398875 * (id - 1), 1.0) * 6.0;
  const int sector = static_cast<int>(hue);
  const double f = hue - sector;
  const double v = 0.95, s = 0.75;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r, g, b;
  switch (sector % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {static_cast<uint8_t>(r * 255), static_cast<uint8_t>(g * 255), static_cast<uint8_t>(b * 255)};
}

std::vector<uint8_t> overlay_image(const flow::LabelMap& labels) {
  std::vector<uint8_t> rgb(static_cast<size_t>(labels.width) * labels.height * 3, kBackgroundGray);
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    const uint16_t id = labels.labels[i];
    if (id == 0) continue;
    const auto color = palette_color(id);
    for (int c = 0; c < 3; ++c) {
      rgb[i * 3 + c] = static_cast<uint8_t>((kBackgroundGray + color[c]) / 2);
    }
  }
  return rgb;
}

std::vector<Arrow> quiver_arrows(const flow::FlowField& backward, int grid_side, double scale,
                                 double min_speed) {
  std::vector<Arrow> arrows;
  const double cw = static_cast<double>(backward.width) / grid_side;
  const double ch = static_cast<double>(backward.height) / grid_side;
  for (int iy = 0; iy < grid_side; ++iy) {
    for (int ix = 0; ix < grid_side; ++ix) {
      const Eigen::Vector2d p((ix + 0.5) * cw, (iy + 0.5) * ch);
      const Eigen::Vector2d velocity = -flow::sample_bilinear(backward, p.x(), p.y());
      if (velocity.norm() < min_speed) continue;
      arrows.push_back({p, p + scale * velocity});
    }
  }
  return arrows;
}

void draw_arrow(std::vector<uint8_t>& rgb, int width, int height, const Arrow& arrow,
                const std::array<uint8_t, 3>& color) {
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    rgb[i] = color[0];
    rgb[i + 1] = color[1];
    rgb[i + 2] = color[2];
  };
  const Eigen::Vector2d d = arrow.to - arrow.from;
  const int steps = std::max(1, static_cast<int>(std::ceil(d.cwiseAbs().maxCoeff())));
  for (int s = 0; s <= steps; ++s) {
    const Eigen::Vector2d p = arrow.from + d * (static_cast<double>(s) / steps);
    put(static_cast<int>(p.x()), static_cast<int>(p.y()));
  }
  // two short head strokes
  const double len = d.norm();
  if (len > 1e-9) {
    const Eigen::Vector2d dir = d / len;
    const Eigen::Vector2d ortho(-dir.y(), dir.x());
    for (double side : {1.0, -1.0}) {
      const Eigen::Vector2d head = arrow.to - 3.0 * dir + 2.0 * side * ortho;
      const Eigen::Vector2d hd = arrow.to - head;
      for (int s = 0; s <= 4; ++s) {
        const Eigen::Vector2d p = head + hd * (s / 4.0);
        put(static_cast<int>(p.x()), static_cast<int>(p.y()));
      }
    }
  }
}

int render_dirs(const std::filesystem::path& scene_dir, const std::filesystem::path& masks_dir,
                const std::filesystem::path& out_dir, const RenderOptions& options) {
  namespace fs = std::filesystem;
  fs::path mask_base = masks_dir;
  if (fs::is_directory(masks_dir / "masks")) mask_base = masks_dir / "masks";
  if (!fs::is_directory(mask_base)) {
    fail(ErrorCode::io_error, "render: no masks under " + masks_dir.string());
  }
  std::vector<fs::path> masks;
  for (const auto& entry : fs::directory_iterator(mask_base)) {
    if (entry.path().extension() == ".png") masks.push_back(entry.path());
  }
  std::sort(masks.begin(), masks.end());
  if (masks.empty()) fail(ErrorCode::io_error, "render: no masks under " + masks_dir.string());

  fs::create_directories(out_dir / "overlays");
  const bool has_flows = fs::is_directory(scene_dir / "flow_bwd");
  if (has_flows) fs::create_directories(out_dir / "quiver");
  write_file_atomic(out_dir / "render_options.json",
                    "{\n  \"quiver_grid\": " + std::to_string(options.quiver_grid) +
                        ",\n  \"quiver_scale\": " + std::to_string(options.quiver_scale) + "\n}\n");

  int rendered = 0;
  for (const auto& mask_path : masks) {
    const auto labels = flow::read_labels(mask_path);
    const auto overlay = overlay_image(labels);
    pngio::write_rgb8(out_dir / "overlays" / mask_path.filename(), overlay.data(), labels.width,
                      labels.height);

    const fs::path flow_path =
        scene_dir / "flow_bwd" / (mask_path.stem().string() + ".flo");
    if (has_flows && fs::exists(flow_path)) {
      const auto bwd = flow::read_flow(flow_path);
      auto rgb = overlay_image(labels);
      for (const auto& arrow :
           quiver_arrows(bwd, options.quiver_grid, options.quiver_scale)) {
        draw_arrow(rgb, bwd.width, bwd.height, arrow, {20, 20, 20});
      }
      pngio::write_rgb8(out_dir / "quiver" / mask_path.filename(), rgb.data(), bwd.width, bwd.height);
    }
    ++rendered;
  }
  return rendered;
}

}  // namespace mb::render
