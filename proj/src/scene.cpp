// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace mb::sim {

using nlohmann::json;
using Eigen::Vector2d;

bool BodyShape::contains(const Vector2d& p) const {
  if (kind == Kind::disc) {
    return (p - center).squaredNorm() <= radius * radius;
  }
  // even-odd ray crossing
  bool inside = false;
  const size_t n = points.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vector2d& a = points[i];
    const Vector2d& b = points[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double xint = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < xint) inside = !inside;
    }
  }
  return inside;
}

void BodyShape::bounds(Vector2d& lo, Vector2d& hi) const {
  if (kind == Kind::disc) {
    lo = center.array() - radius;
    hi = center.array() + radius;
    return;
  }
  lo = Vector2d(1e30, 1e30);
  hi = Vector2d(-1e30, -1e30);
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0) fail(ErrorCode::validation, "scene: canvas dimensions must be positive");
  if (frames < 2) fail(ErrorCode::validation, "scene: need at least 2 frames");
  for (size_t b = 0; b < bodies.size(); ++b) {
    const Body& body = bodies[b];
    const std::string tag = "scene body " + std::to_string(b);
    if (body.shape.kind == BodyShape::Kind::disc) {
      if (!(body.shape.radius > 0.0)) fail(ErrorCode::validation, tag + ": disc radius must be positive");
    } else if (body.shape.points.size() < 3) {
      fail(ErrorCode::validation, tag + ": polygon needs at least 3 points");
    }
    if (static_cast<int>(body.trajectory.size()) != frames) {
      fail(ErrorCode::validation, tag + ": trajectory length must equal frame count");
    }
    for (const auto& T : body.trajectory) {
      if (!T.t.allFinite() || !T.R.allFinite()) fail(ErrorCode::validation, tag + ": non-finite trajectory");
    }
  }
}

json SceneSpec::to_json() const {
  json j;
  j["canvas"] = {{"width", width}, {"height", height}};
  j["frames"] = frames;
  j["flow_noise_sigma"] = flow_noise_sigma;
  j["bodies"] = json::array();
  for (const auto& body : bodies) {
    json jb;
    if (!body.name.empty()) jb["name"] = body.name;
    jb["z"] = body.z;
    if (body.shape.kind == BodyShape::Kind::disc) {
      jb["shape"] = {{"type", "disc"},
                     {"center", {body.shape.center.x(), body.shape.center.y()}},
                     {"radius", body.shape.radius}};
    } else {
      json pts = json::array();
      for (const auto& p : body.shape.points) pts.push_back({p.x(), p.y()});
      jb["shape"] = {{"type", "polygon"}, {"points", pts}};
    }
    json traj = json::array();
    for (const auto& T : body.trajectory) {
      traj.push_back({{"angle", T.angle()}, {"t", {T.t.x(), T.t.y()}}});
    }
    jb["trajectory"] = traj;
    j["bodies"].push_back(jb);
  }
  return j;
}

SceneSpec SceneSpec::from_json(const json& j) {
  SceneSpec spec;
  try {
    spec.width = j.at("canvas").at("width").get<int>();
    spec.height = j.at("canvas").at("height").get<int>();
    spec.frames = j.at("frames").get<int>();
    spec.flow_noise_sigma = j.value("flow_noise_sigma", 0.0);
    for (const auto& jb : j.at("bodies")) {
      Body body;
      body.name = jb.value("name", "");
      body.z = jb.value("z", 0);
      const auto& js = jb.at("shape");
      const std::string type = js.at("type").get<std::string>();
      if (type == "disc") {
        body.shape.kind = BodyShape::Kind::disc;
        body.shape.center = Vector2d(js.at("center")[0].get<double>(), js.at("center")[1].get<double>());
        body.shape.radius = js.at("radius").get<double>();
      } else if (type == "polygon") {
        body.shape.kind = BodyShape::Kind::polygon;
        for (const auto& jp : js.at("points")) {
          body.shape.points.emplace_back(jp[0].get<double>(), jp[1].get<double>());
        }
      } else {
        fail(ErrorCode::validation, "scene: unknown shape type '" + type + "'");
      }
      for (const auto& jt : jb.at("trajectory")) {
        const double angle = jt.at("angle").get<double>();
        const Vector2d t(jt.at("t")[0].get<double>(), jt.at("t")[1].get<double>());
        body.trajectory.push_back(geom::RigidTransform2::from_angle(angle, t));
      }
      spec.bodies.push_back(std::move(body));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("scene spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SceneSpec SceneSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    // report the line number of the offending byte
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
    size_t line = 1;
    for (size_t i = 0; i < std::min(text.size(), e.byte); ++i) {
      if (text[i] == '\n') ++line;
    }
    fail(ErrorCode::validation,
         path.string() + ": JSON parse error at line " + std::to_string(line) + ": " + e.what());
  }
  return from_json(j);
}

namespace {

struct FrameGeometry {
  std::vector<geom::RigidTransform2> world_from_body;
  std::vector<geom::RigidTransform2> body_from_world;
  std::vector<Vector2d> bbox_lo, bbox_hi;  // world-space loose bounds
};

FrameGeometry frame_geometry(const SceneSpec& spec, int frame) {
  FrameGeometry g;
  for (const auto& body : spec.bodies) {
    const auto& T = body.trajectory[frame];
    g.world_from_body.push_back(T);
    g.body_from_world.push_back(T.inverse());
    Vector2d lo, hi;
    body.shape.bounds(lo, hi);
    // transform the four bound corners
    Vector2d wlo(1e30, 1e30), whi(-1e30, -1e30);
    for (const Vector2d& c : {Vector2d(lo.x(), lo.y()), Vector2d(hi.x(), lo.y()),
                              Vector2d(lo.x(), hi.y()), Vector2d(hi.x(), hi.y())}) {
      const Vector2d w = T.apply(c);
      wlo = wlo.cwiseMin(w);
      whi = whi.cwiseMax(w);
    }
    g.bbox_lo.push_back(wlo);
    g.bbox_hi.push_back(whi);
  }
  return g;
}

bool step_is_motion(const geom::RigidTransform2& step) {
  return std::abs(step.angle()) > 1e-12 || step.t.norm() > 1e-12;
}

}  // namespace

double composite_twist_norm(const geom::Twist2& t, int width, int height) {
  const double s = 0.5 * std::hypot(static_cast<double>(width), static_cast<double>(height));
  return std::sqrt(t.omega * s * t.omega * s + t.v.squaredNorm());
}

SceneRender render_scene(const SceneSpec& spec) {
  spec.validate();
  SceneRender render;
  const size_t nb = spec.bodies.size();

  // depth order: larger z first, earlier body wins ties
  std::vector<size_t> order(nb);
  for (size_t i = 0; i < nb; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return spec.bodies[a].z > spec.bodies[b].z; });

  // cumulative "has moved by frame t" flags and per-step twists
  std::vector<std::vector<geom::Twist2>> step_twists(spec.frames, std::vector<geom::Twist2>(nb));
  std::vector<std::vector<uint8_t>> moved(spec.frames, std::vector<uint8_t>(nb, 0));
  for (int t = 1; t < spec.frames; ++t) {
    for (size_t b = 0; b < nb; ++b) {
      const auto step = spec.bodies[b].trajectory[t] * spec.bodies[b].trajectory[t - 1].inverse();
      step_twists[t][b] = {step.angle(), step.t};
      moved[t][b] = moved[t - 1][b] || step_is_motion(step);
    }
  }

  std::vector<FrameGeometry> geo;
  geo.reserve(spec.frames);
  for (int t = 0; t < spec.frames; ++t) geo.push_back(frame_geometry(spec, t));

  for (int t = 0; t < spec.frames; ++t) {
    SceneFrameTruth truth;
    truth.labels = flow::LabelMap(spec.width, spec.height);
    truth.has_backward = t > 0;
    truth.has_forward = t + 1 < spec.frames;
    if (truth.has_backward) truth.backward = flow::FlowField(spec.width, spec.height);
    if (truth.has_forward) truth.forward = flow::FlowField(spec.width, spec.height);
    truth.body_twists = step_twists[t];
    truth.body_present.assign(nb, 0);

    // per-pixel topmost body, restricted to its world bbox
    std::vector<int> owner(static_cast<size_t>(spec.width) * spec.height, -1);
    for (size_t oi = 0; oi < nb; ++oi) {
      const size_t b = order[oi];
      const int x0 = std::max(0, static_cast<int>(std::floor(geo[t].bbox_lo[b].x() - 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(geo[t].bbox_lo[b].y() - 1)));
      const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(geo[t].bbox_hi[b].x() + 1)));
      const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(geo[t].bbox_hi[b].y() + 1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const size_t idx = static_cast<size_t>(y) * spec.width + x;
          if (owner[idx] >= 0) continue;  // already covered by a closer body
          const Vector2d p(x + 0.5, y + 0.5);
          if (spec.bodies[b].shape.contains(geo[t].body_from_world[b].apply(p))) {
            owner[idx] = static_cast<int>(b);
          }
        }
      }
    }

    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const size_t idx = static_cast<size_t>(y) * spec.width + x;
        const int b = owner[idx];
        if (b < 0) continue;
        truth.body_present[b] = 1;
        if (moved[t][b]) truth.labels.at(x, y) = static_cast<uint16_t>(b + 1);
        const Vector2d p(x + 0.5, y + 0.5);
        const Vector2d body_point = geo[t].body_from_world[b].apply(p);
        if (truth.has_backward) {
          const Vector2d prev = geo[t - 1].world_from_body[b].apply(body_point);
          truth.backward.dx(x, y) = static_cast<float>(prev.x() - p.x());
          truth.backward.dy(x, y) = static_cast<float>(prev.y() - p.y());
        }
        if (truth.has_forward) {
          const Vector2d next = geo[t + 1].world_from_body[b].apply(body_point);
          truth.forward.dx(x, y) = static_cast<float>(next.x() - p.x());
          truth.forward.dy(x, y) = static_cast<float>(next.y() - p.y());
        }
      }
    }

    for (size_t b = 0; b < nb; ++b) {
      if (!truth.body_present[b]) {
        render.warnings.push_back("frame " + std::to_string(t) + ": body " + std::to_string(b) +
                                  " has no visible pixels");
      }
    }
    render.frames.push_back(std::move(truth));
  }
  return render;
}

json SamplerParams::to_json() const {
  return json{{"canvas", {{"width", width}, {"height", height}}},
              {"frames", frames},
              {"bodies", {body_count_min, body_count_max}},
              {"speed", {speed_min, speed_max}},
              {"omega", {omega_min, omega_max}},
              {"radius", {radius_min, radius_max}},
              {"min_twist_separation", min_twist_separation}};
}

SamplerParams SamplerParams::from_json(const json& j) {
  SamplerParams p;
  try {
    if (j.contains("canvas")) {
      p.width = j["canvas"].at("width").get<int>();
      p.height = j["canvas"].at("height").get<int>();
    }
    p.frames = j.value("frames", p.frames);
    if (j.contains("bodies")) {
      p.body_count_min = j["bodies"][0].get<int>();
      p.body_count_max = j["bodies"][1].get<int>();
    }
    auto range = [&](const char* key, double& lo, double& hi) {
      if (j.contains(key)) {
        lo = j[key][0].get<double>();
        hi = j[key][1].get<double>();
      }
    };
    range("speed", p.speed_min, p.speed_max);
    range("omega", p.omega_min, p.omega_max);
    range("radius", p.radius_min, p.radius_max);
    p.min_twist_separation = j.value("min_twist_separation", p.min_twist_separation);
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("sampler params: ") + e.what());
  }
  if (p.body_count_min < 1 || p.body_count_max < p.body_count_min) {
    fail(ErrorCode::validation, "sampler params: bad body count range");
  }
  return p;
}

SceneSpec sample_scene(uint64_t seed, const SamplerParams& params) {
  if (params.body_count_min < 1 || params.body_count_max < params.body_count_min ||
      params.frames < 2 || params.width < 4 * params.radius_min) {
    fail(ErrorCode::validation, "sample_scene: invalid parameter ranges");
  }
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SceneSpec spec;
  spec.width = params.width;
  spec.height = params.height;
  spec.frames = params.frames;

  std::uniform_int_distribution<int> count_dist(params.body_count_min, params.body_count_max);
  const int count = count_dist(rng);

  // per-placed-body bounding circles for every frame, for pairwise clearance
  std::vector<std::vector<Vector2d>> placed_centers;
  std::vector<double> placed_bounds;
  std::vector<geom::Twist2> twists;
  // keep bodies farther apart than a typical node-graph neighborhood so the
  // generated scenes stay cleanly separable
  const double clearance = 26.0;

  for (int b = 0; b < count; ++b) {
    Body body;
    body.z = b;
    body.name = "body" + std::to_string(b + 1);
    const double base_radius = in_range(params.radius_min, params.radius_max);
    const bool is_disc = unit(rng) < 0.5;
    const double aspect = in_range(0.6, 1.4);
    const double tilt = in_range(0.0, M_PI);

    bool placed = false;
    for (int attempt = 0; attempt < 4000 && !placed; ++attempt) {
      // crowded canvases are resolved by shrinking the body as attempts burn
      const double shrink = 1.0 - 0.6 * std::min(1.0, attempt / 2000.0);
      const double radius = std::max(16.0, base_radius * shrink);
      body.shape = BodyShape{};
      double bound = radius;
      if (is_disc) {
        body.shape.kind = BodyShape::Kind::disc;
        body.shape.radius = radius;
      } else {
        body.shape.kind = BodyShape::Kind::polygon;
        const double hx = radius, hy = radius * aspect;
        const Eigen::Rotation2Dd rot(tilt);
        for (const Vector2d& c :
             {Vector2d(-hx, -hy), Vector2d(hx, -hy), Vector2d(hx, hy), Vector2d(-hx, hy)}) {
          body.shape.points.push_back(rot * c);
        }
        bound = std::hypot(hx, hy);
      }
      // initial center; trajectory containment and pairwise clearance are
      // verified over the whole clip below
      const double margin = bound + 6.0;
      if (2 * margin >= std::min(params.width, params.height)) break;
      const Vector2d center(in_range(margin, params.width - margin),
                            in_range(margin, params.height - margin));
      bool crowded = false;
      for (size_t o = 0; o < placed_centers.size(); ++o) {
        if ((placed_centers[o][0] - center).norm() < placed_bounds[o] + bound + clearance) {
          crowded = true;
        }
      }
      if (crowded) continue;

      // constant per-frame step: rotation about a point near the body center
      // plus a drift
      const double omega = in_range(params.omega_min, params.omega_max) * (unit(rng) < 0.5 ? -1 : 1);
      const double speed = in_range(params.speed_min, params.speed_max);
      const double dir = in_range(0.0, 2 * M_PI);
      const Vector2d drift(speed * std::cos(dir), speed * std::sin(dir));
      const Vector2d pivot = center + Vector2d(in_range(-0.4, 0.4) * radius, in_range(-0.4, 0.4) * radius);
      geom::RigidTransform2 step = geom::RigidTransform2::rotation_about(omega, pivot);
      step.t += drift;

      const geom::Twist2 twist{step.angle(), step.t};
      bool separated = composite_twist_norm(twist, params.width, params.height) >=
                       params.min_twist_separation;
      for (const auto& other : twists) {
        geom::Twist2 diff{twist.omega - other.omega, twist.v - other.v};
        if (composite_twist_norm(diff, params.width, params.height) < params.min_twist_separation) {
          separated = false;
        }
      }
      if (!separated) continue;

      // integrate the trajectory; verify canvas containment and clearance
      // from every already-placed body at every frame
      std::vector<geom::RigidTransform2> traj;
      std::vector<Vector2d> path;
      geom::RigidTransform2 pose = geom::RigidTransform2::from_angle(0.0, center);
      traj.push_back(pose);
      path.push_back(pose.t);
      bool feasible = true;
      Vector2d lo, hi;
      body.shape.bounds(lo, hi);
      for (int f = 0; f < params.frames && feasible; ++f) {
        if (f > 0) {
          pose = step * pose;
          traj.push_back(pose);
          path.push_back(pose.t);
        }
        for (const Vector2d& c : {Vector2d(lo.x(), lo.y()), Vector2d(hi.x(), lo.y()),
                                  Vector2d(lo.x(), hi.y()), Vector2d(hi.x(), hi.y())}) {
          const Vector2d w = pose.apply(c);
          if (w.x() < 2 || w.y() < 2 || w.x() > params.width - 2 || w.y() > params.height - 2) {
            feasible = false;
          }
        }
        for (size_t o = 0; o < placed_centers.size() && feasible; ++o) {
          if ((placed_centers[o][f] - pose.t).norm() < placed_bounds[o] + bound + clearance) {
            feasible = false;
          }
        }
      }
      if (!feasible) continue;

      body.trajectory = std::move(traj);
      placed_centers.push_back(std::move(path));
      placed_bounds.push_back(bound);
      twists.push_back(twist);
      placed = true;
    }
    if (!placed) {
      fail(ErrorCode::validation, "sample_scene: could not place body " + std::to_string(b) +
                                      " under the given constraints");
    }
    spec.bodies.push_back(std::move(body));
  }
  return spec;
}

std::vector<std::string> write_scene_dir(const SceneSpec& spec,
                                         const std::filesystem::path& dir,
                                         uint64_t noise_seed) {
  SceneRender render = render_scene(spec);
  namespace fs = std::filesystem;
  fs::create_directories(dir / "flow_fwd");
  fs::create_directories(dir / "flow_bwd");
  fs::create_directories(dir / "masks");

  write_file_atomic(dir / "scene.json", spec.to_json().dump(2) + "\n");

  auto frame_name = [](int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", t);
    return std::string(buf);
  };

  auto add_noise = [&](flow::FlowField& f, uint64_t stream) {
    if (spec.flow_noise_sigma <= 0.0) return;
    std::mt19937_64 rng(splitmix64(noise_seed ^ stream));
    std::normal_distribution<double> g(0.0, spec.flow_noise_sigma);
    for (auto& v : f.data) v = static_cast<float>(v + g(rng));
  };

  for (int t = 0; t < spec.frames; ++t) {
    flow::write_labels(render.frames[t].labels, dir / "masks" / (frame_name(t) + ".png"));
    if (render.frames[t].has_backward) {
      flow::FlowField bwd = render.frames[t].backward;
      add_noise(bwd, 0x1000u + static_cast<uint64_t>(t));
      flow::write_flow(bwd, dir / "flow_bwd" / (frame_name(t) + ".flo"));
    }
    if (render.frames[t].has_forward) {
      flow::FlowField fwd = render.frames[t].forward;
      add_noise(fwd, 0x2000u + static_cast<uint64_t>(t + 1));
      flow::write_flow(fwd, dir / "flow_fwd" / (frame_name(t + 1) + ".flo"));
    }
  }
  return render.warnings;
}

}  // namespace mb::sim
