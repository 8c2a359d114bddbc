// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "motionbits/scene.hpp"

using namespace mb;
using namespace mb::sim;
using Eigen::Vector2d;

namespace {

Body square_body(const Vector2d& center, double half, int z = 0) {
  Body b;
  b.z = z;
  b.shape.kind = BodyShape::Kind::polygon;
  b.shape.points = {Vector2d(-half, -half), Vector2d(half, -half), Vector2d(half, half),
                    Vector2d(-half, half)};
  b.trajectory.push_back(geom::RigidTransform2::from_angle(0.0, center));
  return b;
}

}  // namespace

TEST_CASE("static body yields all-zero labels and zero flow") {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.frames = 2;
  Body b = square_body({32, 32}, 10);
  b.trajectory.push_back(b.trajectory[0]);
  spec.bodies.push_back(b);
  const auto render = render_scene(spec);
  for (const auto& frame : render.frames) {
    for (uint16_t v : frame.labels.labels) CHECK(v == 0);
  }
  for (float v : render.frames[1].backward.data) CHECK(v == 0.0f);
}

TEST_CASE("translating square carries its constant flow and one label") {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.frames = 3;
  Body b = square_body({20, 32}, 8);
  const auto step = geom::RigidTransform2::from_angle(0.0, Vector2d(3, 0));
  b.trajectory.push_back(step * b.trajectory[0]);
  b.trajectory.push_back(step * b.trajectory[1]);
  spec.bodies.push_back(b);
  const auto render = render_scene(spec);

  CHECK(render.frames[0].labels.labels == std::vector<uint16_t>(64 * 64, 0));  // nothing moved yet
  int labeled = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (render.frames[1].labels.at(x, y) != 0) {
        ++labeled;
        CHECK(render.frames[1].labels.at(x, y) == 1);
        CHECK(render.frames[1].forward.dx(x, y) == 3.0f);
        CHECK(render.frames[1].forward.dy(x, y) == 0.0f);
        CHECK(render.frames[1].backward.dx(x, y) == -3.0f);
      }
    }
  }
  CHECK(labeled == doctest::Approx(16 * 16).epsilon(0.1));
  CHECK(render.frames[1].body_twists[0].omega == 0.0);
  CHECK((render.frames[1].body_twists[0].v - Vector2d(3, 0)).norm() < 1e-12);
}

TEST_CASE("two discs with occlusion match the analytic rigid fields") {
  SceneSpec spec;
  spec.width = 128;
  spec.height = 96;
  spec.frames = 2;

  Body rotating;
  rotating.z = 1;
  rotating.shape.kind = BodyShape::Kind::disc;
  rotating.shape.radius = 24;
  const Vector2d c1(50, 48);
  rotating.trajectory.push_back(geom::RigidTransform2::from_angle(0.0, c1));
  const auto rot_step = geom::RigidTransform2::rotation_about(0.2, c1);
  rotating.trajectory.push_back(rot_step * rotating.trajectory[0]);

  Body sliding;
  sliding.z = 2;  // occludes the rotating disc where they overlap
  sliding.shape.kind = BodyShape::Kind::disc;
  sliding.shape.radius = 20;
  const Vector2d c2(80, 48);
  sliding.trajectory.push_back(geom::RigidTransform2::from_angle(0.0, c2));
  sliding.trajectory.push_back(geom::RigidTransform2::from_angle(0.0, c2 + Vector2d(2, 1)));

  spec.bodies = {rotating, sliding};
  const auto render = render_scene(spec);
  const auto& f1 = render.frames[1];

  std::set<uint16_t> ids;
  for (uint16_t v : f1.labels.labels)
    if (v) ids.insert(v);
  CHECK(ids == std::set<uint16_t>{1, 2});

  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 128; ++x) {
      const uint16_t id = f1.labels.at(x, y);
      if (id == 0) continue;
      const Vector2d p(x + 0.5, y + 0.5);
      Vector2d expected;
      if (id == 1) {
        // backward displacement of the rotation: inverse step
        expected = rot_step.inverse().apply(p) - p;
      } else {
        expected = Vector2d(-2, -1);
      }
      CHECK(std::abs(f1.backward.dx(x, y) - expected.x()) < 1e-5);
      CHECK(std::abs(f1.backward.dy(x, y) - expected.y()) < 1e-5);
    }
  }
}

TEST_CASE("ground-truth masks of distinct bodies are disjoint by construction") {
  const auto spec = sample_scene(3, {});
  const auto render = render_scene(spec);
  // every pixel carries at most one id; verify ids map to distinct bodies
  for (const auto& frame : render.frames) {
    for (uint16_t v : frame.labels.labels) CHECK(v <= spec.bodies.size());
  }
}

TEST_CASE("pixels of one body share the spatial twist exactly") {
  const auto spec = sample_scene(11, {});
  const auto render = render_scene(spec);
  // The analytic field check: for every labeled pixel, backward displacement
  // equals the body's rigid step applied to that pixel.
  const auto& f1 = render.frames[1];
  for (int y = 0; y < spec.height; y += 3) {
    for (int x = 0; x < spec.width; x += 3) {
      const uint16_t id = f1.labels.at(x, y);
      if (id == 0) continue;
      const auto& body = spec.bodies[id - 1];
      const auto step = body.trajectory[1] * body.trajectory[0].inverse();
      const Vector2d p(x + 0.5, y + 0.5);
      const Vector2d expected = step.inverse().apply(p) - p;
      CHECK(std::abs(f1.backward.dx(x, y) - expected.x()) < 1e-6);
      CHECK(std::abs(f1.backward.dy(x, y) - expected.y()) < 1e-6);
    }
  }
}

TEST_CASE("sampler is deterministic and honors the body count range") {
  SamplerParams params;
  params.body_count_min = 1;
  params.body_count_max = 1;
  const auto a = sample_scene(0, params);
  const auto b = sample_scene(0, params);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.bodies.size() == 1);

  params.body_count_min = 3;
  params.body_count_max = 3;
  CHECK(sample_scene(5, params).bodies.size() == 3);
}

TEST_CASE("sampler separates body twists pairwise and from zero") {
  SamplerParams params;
  params.min_twist_separation = 0.5;
  params.body_count_min = 3;
  params.body_count_max = 5;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = sample_scene(seed, params);
    std::vector<geom::Twist2> twists;
    for (const auto& body : spec.bodies) {
      for (int f = 1; f < spec.frames; ++f) {
        const auto step = body.trajectory[f] * body.trajectory[f - 1].inverse();
        twists.push_back({step.angle(), step.t});
        // constant-step sampler: every frame shares the body twist
      }
    }
    for (const auto& body : spec.bodies) {
      const auto step = body.trajectory[1] * body.trajectory[0].inverse();
      const geom::Twist2 t{step.angle(), step.t};
      CHECK(composite_twist_norm(t, spec.width, spec.height) >= 0.5);
    }
    for (size_t a = 0; a < spec.bodies.size(); ++a) {
      for (size_t b = a + 1; b < spec.bodies.size(); ++b) {
        const auto sa = spec.bodies[a].trajectory[1] * spec.bodies[a].trajectory[0].inverse();
        const auto sb = spec.bodies[b].trajectory[1] * spec.bodies[b].trajectory[0].inverse();
        const geom::Twist2 diff{sa.angle() - sb.angle(), sa.t - sb.t};
        CHECK(composite_twist_norm(diff, spec.width, spec.height) >= 0.5);
      }
    }
  }
}

TEST_CASE("a body that never enters the canvas warns and leaves no pixels") {
  SceneSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.frames = 2;
  Body b = square_body({500, 500}, 10);  // entirely off-canvas
  const auto step = geom::RigidTransform2::from_angle(0.0, Vector2d(2, 0));
  b.trajectory.push_back(step * b.trajectory[0]);
  spec.bodies.push_back(b);
  const auto render = render_scene(spec);
  CHECK_FALSE(render.warnings.empty());
  for (const auto& frame : render.frames) {
    for (uint16_t v : frame.labels.labels) CHECK(v == 0);
  }
}

TEST_CASE("scene spec JSON round-trip") {
  const auto spec = sample_scene(21, {});
  const auto back = SceneSpec::from_json(spec.to_json());
  REQUIRE(back.bodies.size() == spec.bodies.size());
  CHECK(back.width == spec.width);
  CHECK(back.frames == spec.frames);
  for (size_t b = 0; b < spec.bodies.size(); ++b) {
    CHECK(back.bodies[b].shape.kind == spec.bodies[b].shape.kind);
    for (int f = 0; f < spec.frames; ++f) {
      CHECK(std::abs(back.bodies[b].trajectory[f].angle() - spec.bodies[b].trajectory[f].angle()) < 1e-12);
      CHECK((back.bodies[b].trajectory[f].t - spec.bodies[b].trajectory[f].t).norm() < 1e-12);
    }
  }
}

TEST_CASE("scene dir layout is written with flows and masks") {
  const auto dir = std::filesystem::temp_directory_path() / "mb_scene_dir";
  std::filesystem::remove_all(dir);
  SamplerParams params;
  params.frames = 4;
  const auto spec = sample_scene(2, params);
  const auto warnings = write_scene_dir(spec, dir, 0);
  CHECK(warnings.empty());
  CHECK(std::filesystem::exists(dir / "scene.json"));
  CHECK(std::filesystem::exists(dir / "masks" / "00000.png"));
  CHECK(std::filesystem::exists(dir / "masks" / "00003.png"));
  CHECK(std::filesystem::exists(dir / "flow_fwd" / "00001.flo"));
  CHECK(std::filesystem::exists(dir / "flow_fwd" / "00003.flo"));
  CHECK(std::filesystem::exists(dir / "flow_bwd" / "00001.flo"));
  CHECK(std::filesystem::exists(dir / "flow_bwd" / "00003.flo"));
  CHECK_FALSE(std::filesystem::exists(dir / "flow_fwd" / "00000.flo"));
}
