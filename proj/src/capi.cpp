// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits.h"

#include <cstring>
#include <string>

#include "motionbits/metrics.hpp"
#include "motionbits/pipeline.hpp"
#include "motionbits/render.hpp"
#include "motionbits/scene.hpp"
#include "motionbits/sensitivity.hpp"

using nlohmann::json;

struct mb_flow {
  mb::flow::FlowField field;
};

struct mb_labels {
  mb::flow::LabelMap map;
};

struct mb_pipeline {
  mb::pipeline::Pipeline impl;
};

namespace {

thread_local std::string g_last_error;

mb_status to_status(mb::ErrorCode code) {
  switch (code) {
    case mb::ErrorCode::invalid_argument: return MB_ERR_INVALID_ARGUMENT;
    case mb::ErrorCode::io_error: return MB_ERR_IO;
    case mb::ErrorCode::format_error: return MB_ERR_FORMAT;
    case mb::ErrorCode::degenerate_fit: return MB_ERR_DEGENERATE;
    case mb::ErrorCode::no_model: return MB_ERR_NO_MODEL;
    case mb::ErrorCode::domain_error: return MB_ERR_DOMAIN;
    case mb::ErrorCode::validation: return MB_ERR_VALIDATION;
  }
  return MB_ERR_INTERNAL;
}

mb_status set_error(mb_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
mb_status guarded(Fn&& fn) {
  try {
    fn();
    return MB_OK;
  } catch (const mb::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(MB_ERR_VALIDATION, std::string("json: ") + e.what());
  } catch (const std::exception& e) {
    return set_error(MB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MB_ERR_INTERNAL, "unknown error");
  }
}

mb_status require(bool ok, const char* what) {
  return ok ? MB_OK : set_error(MB_ERR_INVALID_ARGUMENT, std::string("null or invalid argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Parse failures surface as validation errors carrying the offending line.
json parse_with_lines(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; text[i] != '\0' && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') ++line;
    }
    mb::fail(mb::ErrorCode::validation,
             std::string(what) + ": JSON parse error at line " + std::to_string(line) + ": " + e.what());
  }
}

json parse_or_empty(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  return parse_with_lines(text, "config");
}

}  // namespace

extern "C" {

const char* mb_version(void) { return "motionbits 1.0.0"; }

const char* mb_last_error(void) { return g_last_error.c_str(); }

void mb_string_free(char* text) { std::free(text); }

/* ---- flow ---------------------------------------------------------------- */

mb_status mb_flow_create(int width, int height, const float* data, mb_flow_t** out) {
  if (auto s = require(out && width > 0 && height > 0, "mb_flow_create")) return s;
  return guarded([&] {
    auto* flow = new mb_flow{mb::flow::FlowField(width, height)};
    if (data) std::memcpy(flow->field.data.data(), data, flow->field.data.size() * sizeof(float));
    *out = flow;
  });
}

mb_status mb_flow_read(const char* path, mb_flow_t** out) {
  if (auto s = require(path && out, "mb_flow_read")) return s;
  return guarded([&] { *out = new mb_flow{mb::flow::read_flow(path)}; });
}

mb_status mb_flow_write(const mb_flow_t* flow, const char* path) {
  if (auto s = require(flow && path, "mb_flow_write")) return s;
  return guarded([&] { mb::flow::write_flow(flow->field, path); });
}

mb_status mb_flow_compose(const mb_flow_t* ab, const mb_flow_t* bc, mb_flow_t** out) {
  if (auto s = require(ab && bc && out, "mb_flow_compose")) return s;
  return guarded([&] { *out = new mb_flow{mb::flow::compose_flows(ab->field, bc->field)}; });
}

int mb_flow_width(const mb_flow_t* flow) { return flow ? flow->field.width : 0; }
int mb_flow_height(const mb_flow_t* flow) { return flow ? flow->field.height : 0; }
const float* mb_flow_data(const mb_flow_t* flow) { return flow ? flow->field.data.data() : nullptr; }
void mb_flow_free(mb_flow_t* flow) { delete flow; }

/* ---- labels -------------------------------------------------------------- */

mb_status mb_labels_create(int width, int height, const uint16_t* data, mb_labels_t** out) {
  if (auto s = require(out && width > 0 && height > 0, "mb_labels_create")) return s;
  return guarded([&] {
    auto* labels = new mb_labels{mb::flow::LabelMap(width, height)};
    if (data) std::memcpy(labels->map.labels.data(), data, labels->map.labels.size() * sizeof(uint16_t));
    *out = labels;
  });
}

mb_status mb_labels_read(const char* path, mb_labels_t** out) {
  if (auto s = require(path && out, "mb_labels_read")) return s;
  return guarded([&] { *out = new mb_labels{mb::flow::read_labels(path)}; });
}

mb_status mb_labels_write(const mb_labels_t* labels, const char* path) {
  if (auto s = require(labels && path, "mb_labels_write")) return s;
  return guarded([&] { mb::flow::write_labels(labels->map, path); });
}

mb_status mb_labels_warp(const mb_labels_t* labels, const mb_flow_t* flow, mb_labels_t** out) {
  if (auto s = require(labels && flow && out, "mb_labels_warp")) return s;
  return guarded([&] { *out = new mb_labels{mb::flow::warp_labels(labels->map, flow->field)}; });
}

int mb_labels_width(const mb_labels_t* labels) { return labels ? labels->map.width : 0; }
int mb_labels_height(const mb_labels_t* labels) { return labels ? labels->map.height : 0; }
const uint16_t* mb_labels_data(const mb_labels_t* labels) {
  return labels ? labels->map.labels.data() : nullptr;
}
void mb_labels_free(mb_labels_t* labels) { delete labels; }

/* ---- pipeline ------------------------------------------------------------ */

mb_status mb_pipeline_create(const char* config_json, int width, int height, mb_pipeline_t** out) {
  if (auto s = require(out && width > 0 && height > 0, "mb_pipeline_create")) return s;
  return guarded([&] {
    const auto config = mb::pipeline::PipelineConfig::from_json(parse_or_empty(config_json));
    *out = new mb_pipeline{mb::pipeline::Pipeline(config, width, height)};
  });
}

mb_status mb_pipeline_push(mb_pipeline_t* pipeline, const mb_flow_t* forward,
                           const mb_flow_t* backward, mb_labels_t** out_labels,
                           char** sidecar_json) {
  if (auto s = require(pipeline && forward && backward && out_labels, "mb_pipeline_push")) return s;
  return guarded([&] {
    auto frame = pipeline->impl.push(forward->field, backward->field);
    *out_labels = new mb_labels{std::move(frame.labels)};
    if (sidecar_json) *sidecar_json = dup_string(frame.sidecar.dump());
  });
}

void mb_pipeline_free(mb_pipeline_t* pipeline) { delete pipeline; }

/* ---- one-shot runners ------------------------------------------------------ */

mb_status mb_run_simulate(const char* scene_spec_json, const char* sampler_json, uint64_t seed,
                          const char* out_dir) {
  if (auto s = require(out_dir, "mb_run_simulate")) return s;
  if ((scene_spec_json == nullptr) == (sampler_json == nullptr)) {
    return set_error(MB_ERR_INVALID_ARGUMENT,
                     "mb_run_simulate: pass exactly one of scene_spec_json, sampler_json");
  }
  return guarded([&] {
    mb::sim::SceneSpec spec;
    if (scene_spec_json) {
      spec = mb::sim::SceneSpec::from_json(parse_with_lines(scene_spec_json, "scene spec"));
    } else {
      const auto params_json = parse_with_lines(sampler_json, "sampler params");
      const auto params = mb::sim::SamplerParams::from_json(params_json);
      spec = mb::sim::sample_scene(seed, params);
      spec.flow_noise_sigma = params_json.value("flow_noise_sigma", 0.0);
    }
    mb::sim::write_scene_dir(spec, out_dir, seed);
  });
}

mb_status mb_run_segment(const char* config_json, const char* scene_dir, const char* out_dir,
                         int* out_frames) {
  if (auto s = require(scene_dir && out_dir, "mb_run_segment")) return s;
  return guarded([&] {
    const auto config = mb::pipeline::PipelineConfig::from_json(parse_or_empty(config_json));
    const int frames = mb::pipeline::run_segment(config, scene_dir, out_dir);
    if (out_frames) *out_frames = frames;
  });
}

mb_status mb_run_eval(const char* options_json, const char* pred_dir, const char* gt_dir,
                      char** report_json, char** report_csv) {
  if (auto s = require(pred_dir && gt_dir && report_json, "mb_run_eval")) return s;
  return guarded([&] {
    const auto j = parse_or_empty(options_json);
    mb::eval::EvalOptions options;
    options.boundary_tol_frac = j.value("boundary_tol_frac", options.boundary_tol_frac);
    options.boundary_tol_px = j.value("boundary_tol_px", options.boundary_tol_px);
    options.final_frame_only = j.value("final_frame_only", options.final_frame_only);
    if (j.contains("population")) {
      const std::string p = j["population"].get<std::string>();
      if (p == "gt") {
        options.population = mb::eval::MacroPopulation::gt_only;
      } else if (p == "union") {
        options.population = mb::eval::MacroPopulation::gt_union_pred;
      } else {
        mb::fail(mb::ErrorCode::validation, "eval options: unknown population '" + p + "'");
      }
    }
    const auto report = mb::eval::evaluate_dirs(pred_dir, gt_dir, options);
    *report_json = dup_string(report.to_json(options).dump(2));
    if (report_csv) *report_csv = dup_string(report.to_csv());
  });
}

mb_status mb_run_sensitivity(const char* config_json, char** summary_json) {
  if (auto s = require(summary_json, "mb_run_sensitivity")) return s;
  return guarded([&] {
    auto j = parse_or_empty(config_json);
    mb::sens::McConfig config;
    if (j.contains("preset")) {
      config = mb::sens::McConfig::preset(j["preset"].get<std::string>());
      j.erase("preset");
    }
    // overrides on top of the preset
    auto merged = config.to_json();
    merged.update(j);
    config = mb::sens::McConfig::from_json(merged);
    const auto summary = mb::sens::monte_carlo_sensitivity(config);
    *summary_json = dup_string(summary.to_json(config).dump(2));
  });
}

mb_status mb_run_sensitivity_histogram(const char* config_json, double bin_width_pct, char** csv) {
  if (auto s = require(csv, "mb_run_sensitivity_histogram")) return s;
  return guarded([&] {
    auto j = parse_or_empty(config_json);
    mb::sens::McConfig config;
    if (j.contains("preset")) {
      config = mb::sens::McConfig::preset(j["preset"].get<std::string>());
      j.erase("preset");
    }
    auto merged = config.to_json();
    merged.update(j);
    config = mb::sens::McConfig::from_json(merged);
    *csv = dup_string(mb::sens::sensitivity_histogram_csv(config, bin_width_pct));
  });
}

mb_status mb_run_render(const char* options_json, const char* scene_dir, const char* masks_dir,
                        const char* out_dir, int* out_frames) {
  if (auto s = require(scene_dir && masks_dir && out_dir, "mb_run_render")) return s;
  return guarded([&] {
    const auto j = parse_or_empty(options_json);
    mb::render::RenderOptions options;
    options.quiver_grid = j.value("quiver_grid", options.quiver_grid);
    options.quiver_scale = j.value("quiver_scale", options.quiver_scale);
    const int frames = mb::render::render_dirs(scene_dir, masks_dir, out_dir, options);
    if (out_frames) *out_frames = frames;
  });
}

}  // extern "C"
