// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "motionbits/metrics.hpp"
#include "motionbits/pipeline.hpp"
#include "motionbits/scene.hpp"

using namespace mb;
using namespace mb::pipeline;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.nodes = 1600;  // 40x40 grid for small test canvases
  c.seed = 7;
  c.ci = true;
  return c;
}

}  // namespace

TEST_CASE("config json round-trip and validation") {
  PipelineConfig c = small_config();
  const auto j = c.to_json();
  const auto back = PipelineConfig::from_json(j);
  CHECK(back.to_json() == j);

  auto bad = j;
  bad["nodes"] = 60;  // not a perfect square
  CHECK_THROWS_AS(PipelineConfig::from_json(bad), Error);
  bad = j;
  bad["reinjection_period"] = 1000;
  CHECK_THROWS_AS(PipelineConfig::from_json(bad), Error);
  bad = j;
  bad["motion_gate"] = "nonsense";
  CHECK_THROWS_AS(PipelineConfig::from_json(bad), Error);
}

TEST_CASE("static scene yields all-zero masks every frame") {
  sim::SceneSpec spec;
  spec.width = 128;
  spec.height = 128;
  spec.frames = 4;
  sim::Body body;
  body.shape.kind = sim::BodyShape::Kind::disc;
  body.shape.radius = 30;
  for (int f = 0; f < 4; ++f) {
    body.trajectory.push_back(geom::RigidTransform2::from_angle(0.0, Eigen::Vector2d(64, 64)));
  }
  spec.bodies.push_back(body);
  const auto render = sim::render_scene(spec);

  Pipeline pipe(small_config(), 128, 128);
  for (int t = 1; t < 4; ++t) {
    const auto out = pipe.push(render.frames[t - 1].forward, render.frames[t].backward);
    for (uint16_t v : out.labels.labels) CHECK(v == 0);
    CHECK(out.sidecar["moving_nodes"] == 0);
  }
}

TEST_CASE("two-body scene: correct count, persistent ids, high IoU") {
  sim::SamplerParams params;
  params.frames = 6;
  params.body_count_min = 2;
  params.body_count_max = 2;
  const auto spec = sim::sample_scene(12, params);
  const auto render = sim::render_scene(spec);

  Pipeline pipe(small_config(), spec.width, spec.height);
  std::set<uint16_t> previous_ids;
  for (int t = 1; t < spec.frames; ++t) {
    const auto out = pipe.push(render.frames[t - 1].forward, render.frames[t].backward);
    std::set<uint16_t> ids;
    for (uint16_t v : out.labels.labels) {
      if (v) ids.insert(v);
    }
    CHECK(ids.size() == 2);
    if (t > 1) CHECK(ids == previous_ids);
    previous_ids = ids;

    if (t == spec.frames - 1) {
      const auto match = eval::hungarian_match(out.labels, render.frames[t].labels);
      const auto records = eval::instance_records(out.labels, render.frames[t].labels, match, 2);
      const auto overlap = eval::overlap_metrics(records, eval::MacroPopulation::gt_only);
      CHECK(overlap.miou >= 0.85);
    }
  }
}

TEST_CASE("pipeline output is deterministic") {
  sim::SamplerParams params;
  params.frames = 3;
  params.body_count_min = 2;
  params.body_count_max = 3;
  const auto spec = sim::sample_scene(3, params);
  const auto render = sim::render_scene(spec);

  auto run = [&]() {
    Pipeline pipe(small_config(), spec.width, spec.height);
    std::vector<flow::LabelMap> maps;
    nlohmann::json sidecars = nlohmann::json::array();
    for (int t = 1; t < spec.frames; ++t) {
      auto out = pipe.push(render.frames[t - 1].forward, render.frames[t].backward);
      maps.push_back(out.labels);
      sidecars.push_back(out.sidecar);
    }
    return std::pair{maps, sidecars};
  };
  const auto a = run();
  const auto b = run();
  for (size_t i = 0; i < a.first.size(); ++i) CHECK(a.first[i].labels == b.first[i].labels);
  CHECK(a.second == b.second);
}

TEST_CASE("run_segment writes the expected layout and fails on missing flow") {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "mb_pipeline_run";
  fs::remove_all(root);
  sim::SamplerParams params;
  params.frames = 3;
  const auto spec = sim::sample_scene(5, params);
  sim::write_scene_dir(spec, root / "scene", 0);

  const int frames = run_segment(small_config(), root / "scene", root / "out");
  CHECK(frames == 2);
  CHECK(fs::exists(root / "out" / "masks" / "00001.png"));
  CHECK(fs::exists(root / "out" / "masks" / "00002.png"));
  CHECK(fs::exists(root / "out" / "sidecars" / "00002.json"));
  CHECK(fs::exists(root / "out" / "config.json"));

  fs::remove(root / "scene" / "flow_fwd" / "00002.flo");
  try {
    run_segment(small_config(), root / "scene", root / "out2");
    FAIL("expected an error about the missing frame");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
    CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
  }
}
