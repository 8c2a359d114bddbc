// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the motionbits C API: scene simulation,
// online segmentation, evaluation, the sensitivity study, and rendering.
// Exit codes: 0 success, 1 usage, 2 I/O or format, 3 validation/other.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "motionbits.h"

using nlohmann::json;

namespace {

int exit_code_for(mb_status status) {
  switch (status) {
    case MB_OK: return 0;
    case MB_ERR_IO:
    case MB_ERR_FORMAT: return 2;
    default: return 3;
  }
}

int report_failure(mb_status status) {
  std::cerr << "error: " << mb_last_error() << "\n";
  return exit_code_for(status);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(2);
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(2);
  }
  out << text;
}

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { mb_string_free(value); }
};

// Pipeline configuration assembled from (env-default) config file + flags.
struct SegmentFlags {
  std::string config_path;
  std::optional<int> nodes, k, iterations, reinjection, expansion, history;
  std::optional<int> ransac_iterations, mcl_max_iterations;
  std::optional<double> seed_fraction, inflation, motion_epsilon, ransac_threshold, radius_scale;
  std::optional<std::string> motion_gate;
  std::optional<uint64_t> seed;
  bool no_smooth = false;
  bool no_flow_refine = false;
  bool dump_graphs = false;
  bool ci = false;

  json build() const {
    json config = json::object();
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("MOTIONBITS_CONFIG")) path = env;
    }
    if (!path.empty()) config = json::parse(read_text(path));
    auto set = [&](const char* key, const auto& opt) {
      if (opt) config[key] = *opt;
    };
    set("nodes", nodes);
    set("k", k);
    set("seed_fraction", seed_fraction);
    set("propagation_iterations", iterations);
    set("reinjection_period", reinjection);
    set("motion_epsilon", motion_epsilon);
    set("motion_gate", motion_gate);
    set("history", history);
    set("seed", seed);
    if (inflation) config["mcl"]["inflation"] = *inflation;
    if (expansion) config["mcl"]["expansion"] = *expansion;
    if (mcl_max_iterations) config["mcl"]["max_iterations"] = *mcl_max_iterations;
    if (ransac_iterations) config["ransac"]["iterations"] = *ransac_iterations;
    if (ransac_threshold) config["ransac"]["inlier_threshold"] = *ransac_threshold;
    if (radius_scale) config["raster"]["radius_scale"] = *radius_scale;
    if (no_smooth) config["raster"]["smooth"] = false;
    if (no_flow_refine) config["raster"]["flow_refine"] = false;
    if (dump_graphs) config["dump_graphs"] = true;
    if (ci) config["ci"] = true;
    return config;
  }
};

bool ci_mode(bool flag) { return flag || (std::getenv("MOTIONBITS_CI") != nullptr); }

int require_seed_in_ci(bool ci, bool seed_given) {
  if (ci && !seed_given) {
    std::cerr << "error: --seed is required in CI mode\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MotionBits: moving rigid-body segmentation from optical flow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mb_version()));

  // ---- simulate -----------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic rigid scene to a directory");
  std::string sim_spec, sim_out;
  uint64_t sim_seed = 0;
  bool sim_ci = false;
  int sim_frames = 10, sim_bodies_min = 1, sim_bodies_max = 5;
  std::vector<int> sim_canvas{320, 320};
  std::vector<double> sim_speed, sim_omega, sim_radius;
  double sim_min_sep = 1.0, sim_noise = 0.0;
  simulate->add_option("--spec", sim_spec, "Explicit scene spec JSON file");
  simulate->add_option("--out", sim_out, "Output scene directory")->required();
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Sampler seed");
  simulate->add_option("--frames", sim_frames, "Frame count");
  simulate->add_option("--bodies-min", sim_bodies_min, "Minimum body count");
  simulate->add_option("--bodies-max", sim_bodies_max, "Maximum body count");
  simulate->add_option("--canvas", sim_canvas, "Canvas size W H")->expected(2);
  simulate->add_option("--speed", sim_speed, "Drift speed range LO HI (px/frame)")->expected(2);
  simulate->add_option("--omega", sim_omega, "Rotation rate range LO HI (rad/frame)")->expected(2);
  simulate->add_option("--radius", sim_radius, "Body half-extent range LO HI (px)")->expected(2);
  simulate->add_option("--min-separation", sim_min_sep, "Minimum pairwise twist separation (px/frame)");
  simulate->add_option("--noise", sim_noise, "Gaussian flow noise sigma (px)");
  simulate->add_flag("--ci", sim_ci, "CI mode: --seed becomes mandatory");

  // ---- segment ------------------------------------------------------------
  auto* segment = app.add_subcommand("segment", "Segment a scene directory of flow fields");
  std::string seg_scene, seg_out;
  SegmentFlags seg;
  segment->add_option("scene", seg_scene, "Scene directory (flow_fwd/, flow_bwd/)")->required();
  segment->add_option("--out", seg_out, "Output directory")->required();
  segment->add_option("--config", seg.config_path, "Pipeline config JSON (or env MOTIONBITS_CONFIG)");
  auto* seg_seed_opt = segment->add_option("--seed", seg.seed, "Deterministic seed");
  segment->add_option("--nodes", seg.nodes, "Grid node count (perfect square)");
  segment->add_option("--k", seg.k, "Neighbors per node");
  segment->add_option("--seed-fraction", seg.seed_fraction, "Seed classes as a fraction of nodes");
  segment->add_option("--iterations", seg.iterations, "Propagation iterations");
  segment->add_option("--reinjection", seg.reinjection, "Seed reinjection period");
  segment->add_option("--inflation", seg.inflation, "Markov clustering inflation");
  segment->add_option("--expansion", seg.expansion, "Markov clustering expansion");
  segment->add_option("--mcl-max-iterations", seg.mcl_max_iterations, "Markov clustering iteration cap");
  segment->add_option("--motion-epsilon", seg.motion_epsilon, "Motion gate threshold (px/frame)");
  segment->add_option("--motion-gate", seg.motion_gate, "node_speed | twist_composite");
  segment->add_option("--ransac-iterations", seg.ransac_iterations, "Consensus hypothesis budget");
  segment->add_option("--ransac-threshold", seg.ransac_threshold, "Inlier threshold (px)");
  segment->add_option("--history", seg.history, "Temporal prior window (0 = all frames)");
  segment->add_option("--radius-scale", seg.radius_scale, "Rasterization radius in cells");
  segment->add_flag("--no-smooth", seg.no_smooth, "Disable 3x3 majority smoothing");
  segment->add_flag("--no-flow-refine", seg.no_flow_refine, "Disable flow-residual boundary refinement");
  segment->add_flag("--dump-graphs", seg.dump_graphs, "Write per-frame graph JSON dumps");
  segment->add_flag("--ci", seg.ci, "CI mode: byte-stable outputs, --seed mandatory");

  // ---- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate predicted masks against ground truth");
  std::string eval_pred, eval_gt, eval_out, eval_csv, eval_population = "gt";
  double eval_tol_frac = 0.008;
  int eval_tol_px = 0;
  bool eval_all_frames = false;
  eval->add_option("pred", eval_pred, "Prediction directory")->required();
  eval->add_option("gt", eval_gt, "Ground-truth directory")->required();
  eval->add_option("--out", eval_out, "Write the JSON report here (default: stdout)");
  eval->add_option("--csv", eval_csv, "Also write a per-scene CSV table");
  eval->add_option("--boundary-tol-frac", eval_tol_frac, "Boundary tolerance as a diagonal fraction");
  eval->add_option("--boundary-tol-px", eval_tol_px, "Boundary tolerance in pixels (overrides)");
  eval->add_option("--population", eval_population, "Macro population for F1/mIoU: gt | union");
  eval->add_flag("--all-frames", eval_all_frames, "Score all common frames, not just the last");

  // ---- sensitivity -----------------------------------------------------------
  auto* sensitivity = app.add_subcommand("sensitivity", "Planar-model sensitivity Monte Carlo");
  std::string sens_preset, sens_mode, sens_out, sens_histogram;
  long sens_trials = 100000;
  uint64_t sens_seed = 0;
  double sens_bin_width = 0.1;
  std::optional<double> sens_x, sens_y, sens_z, sens_dp, sens_ascale;
  bool sens_ci = false;
  sensitivity->add_option("--preset", sens_preset, "tabletop | in-the-wild");
  sensitivity->add_option("--trials", sens_trials, "Trial count");
  auto* sens_seed_opt = sensitivity->add_option("--seed", sens_seed, "Random seed");
  sensitivity->add_option("--mode", sens_mode, "direct | analytic");
  sensitivity->add_option("--x-extent", sens_x, "Point box half-extent X (m)");
  sensitivity->add_option("--y-extent", sens_y, "Point box half-extent Y (m)");
  sensitivity->add_option("--z", sens_z, "Depth (m)");
  sensitivity->add_option("--dp", sens_dp, "Point separation (m)");
  sensitivity->add_option("--angular-scale", sens_ascale, "Angular:linear twist mix (rad per m)");
  sensitivity->add_option("--out", sens_out, "Write the JSON summary here (default: stdout)");
  sensitivity->add_option("--histogram", sens_histogram, "Write a deviation histogram CSV");
  sensitivity->add_option("--bin-width", sens_bin_width, "Histogram bin width (percent)");
  sensitivity->add_flag("--ci", sens_ci, "CI mode: --seed becomes mandatory");

  // ---- render -----------------------------------------------------------------
  auto* render = app.add_subcommand("render", "Render mask overlays and motion quivers");
  std::string ren_scene, ren_masks, ren_out;
  int ren_grid = 32;
  double ren_scale = 3.0;
  render->add_option("scene", ren_scene, "Scene directory (for flows)")->required();
  render->add_option("masks", ren_masks, "Mask directory")->required();
  render->add_option("--out", ren_out, "Output directory")->required();
  render->add_option("--quiver-grid", ren_grid, "Quiver lattice side");
  render->add_option("--quiver-scale", ren_scale, "Arrow length per px/frame");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    if (int rc = require_seed_in_ci(ci_mode(sim_ci), sim_seed_opt->count() > 0)) return rc;
    mb_status status;
    if (!sim_spec.empty()) {
      const std::string spec = read_text(sim_spec);
      status = mb_run_simulate(spec.c_str(), nullptr, sim_seed, sim_out.c_str());
    } else {
      json sampler{{"canvas", {{"width", sim_canvas[0]}, {"height", sim_canvas[1]}}},
                   {"frames", sim_frames},
                   {"bodies", {sim_bodies_min, sim_bodies_max}},
                   {"min_twist_separation", sim_min_sep},
                   {"flow_noise_sigma", sim_noise}};
      if (!sim_speed.empty()) sampler["speed"] = sim_speed;
      if (!sim_omega.empty()) sampler["omega"] = sim_omega;
      if (!sim_radius.empty()) sampler["radius"] = sim_radius;
      status = mb_run_simulate(nullptr, sampler.dump().c_str(), sim_seed, sim_out.c_str());
    }
    if (status != MB_OK) return report_failure(status);
    std::cout << "scene written to " << sim_out << "\n";
    return 0;
  }

  if (segment->parsed()) {
    seg.ci = ci_mode(seg.ci);
    if (int rc = require_seed_in_ci(seg.ci, seg_seed_opt->count() > 0)) return rc;
    json config;
    try {
      config = seg.build();
    } catch (const json::exception& e) {
      std::cerr << "error: config: " << e.what() << "\n";
      return 3;
    }
    int frames = 0;
    const mb_status status =
        mb_run_segment(config.dump().c_str(), seg_scene.c_str(), seg_out.c_str(), &frames);
    if (status != MB_OK) return report_failure(status);
    std::cout << "segmented " << frames << " frames into " << seg_out << "\n";
    return 0;
  }

  if (eval->parsed()) {
    if (eval_population != "gt" && eval_population != "union") {
      std::cerr << "error: --population must be gt or union\n";
      return 1;
    }
    const json options{{"boundary_tol_frac", eval_tol_frac},
                       {"boundary_tol_px", eval_tol_px},
                       {"population", eval_population},
                       {"final_frame_only", !eval_all_frames}};
    OwnedString report, csv;
    const mb_status status = mb_run_eval(options.dump().c_str(), eval_pred.c_str(), eval_gt.c_str(),
                                         &report.value, eval_csv.empty() ? nullptr : &csv.value);
    if (status != MB_OK) return report_failure(status);
    if (eval_out.empty()) {
      std::cout << report.value << "\n";
    } else {
      write_text(eval_out, std::string(report.value) + "\n");
    }
    if (!eval_csv.empty()) write_text(eval_csv, csv.value);
    return 0;
  }

  if (sensitivity->parsed()) {
    if (int rc = require_seed_in_ci(ci_mode(sens_ci), sens_seed_opt->count() > 0)) return rc;
    json config = json::object();
    if (!sens_preset.empty()) config["preset"] = sens_preset;
    config["trials"] = sens_trials;
    config["seed"] = sens_seed;
    if (!sens_mode.empty()) config["mode"] = sens_mode;
    if (sens_x) config["x_extent"] = *sens_x;
    if (sens_y) config["y_extent"] = *sens_y;
    if (sens_z) config["z"] = *sens_z;
    if (sens_dp) config["dp_norm"] = *sens_dp;
    if (sens_ascale) config["angular_scale"] = *sens_ascale;
    OwnedString summary;
    mb_status status = mb_run_sensitivity(config.dump().c_str(), &summary.value);
    if (status != MB_OK) return report_failure(status);
    if (sens_out.empty()) {
      std::cout << summary.value << "\n";
    } else {
      write_text(sens_out, std::string(summary.value) + "\n");
    }
    if (!sens_histogram.empty()) {
      OwnedString csv;
      status = mb_run_sensitivity_histogram(config.dump().c_str(), sens_bin_width, &csv.value);
      if (status != MB_OK) return report_failure(status);
      write_text(sens_histogram, csv.value);
    }
    return 0;
  }

  if (render->parsed()) {
    const json options{{"quiver_grid", ren_grid}, {"quiver_scale", ren_scale}};
    int frames = 0;
    const mb_status status = mb_run_render(options.dump().c_str(), ren_scene.c_str(),
                                           ren_masks.c_str(), ren_out.c_str(), &frames);
    if (status != MB_OK) return report_failure(status);
    std::cout << "rendered " << frames << " frames into " << ren_out << "\n";
    return 0;
  }

  return 1;
}
