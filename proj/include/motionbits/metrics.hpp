// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Instance-level segmentation evaluation: exact Hungarian matching on IoU,
// macro-averaged Overlap (P/R/F1/mIoU) and Boundary (P/R/F1) metrics, and
// directory-level report generation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionbits/flow.hpp"

namespace mb::eval {

/// Exact min-cost assignment (Kuhn-Munkres with potentials). Returns, for
/// each row, the assigned column or -1. Rectangular inputs are padded
/// internally; every row of an n <= m problem gets a column.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

struct InstanceMatching {
  struct Pair {
    uint16_t gt_id;
    uint16_t pred_id;
    double iou;
  };
  std::vector<Pair> pairs;             // one-to-one, IoU > 0
  std::vector<uint16_t> unmatched_gt;
  std::vector<uint16_t> unmatched_pred;
};

/// Maximum-total-IoU one-to-one matching between nonzero instances of the
/// two maps (cost = 1 - IoU). Pairs with zero IoU are discarded.
InstanceMatching hungarian_match(const flow::LabelMap& pred, const flow::LabelMap& gt);

struct OverlapStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double miou = 0.0;
};

struct BoundaryStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class MacroPopulation {
  gt_only,   // F1 and mIoU averaged over ground-truth instances
  gt_union_pred,  // unmatched predictions also contribute zero F1/IoU
};

struct EvalOptions {
  double boundary_tol_frac = 0.008;  // of the image diagonal, rounded up
  int boundary_tol_px = 0;           // explicit override when > 0
  MacroPopulation population = MacroPopulation::gt_only;
  bool final_frame_only = true;      // protocol scores the last frame

  int boundary_tolerance(int width, int height) const;
};

/// One averaged record per instance; pooled for aggregation so every
/// instance weighs equally regardless of scene or pixel area.
struct InstanceRecord {
  enum class Kind { matched, unmatched_gt, unmatched_pred } kind;
  double precision = 0.0, recall = 0.0, f1 = 0.0, iou = 0.0;
  double bprecision = 0.0, brecall = 0.0, bf1 = 0.0;
};

std::vector<InstanceRecord> instance_records(const flow::LabelMap& pred, const flow::LabelMap& gt,
                                             const InstanceMatching& matching, int boundary_tol);

/// Macro averages. Precision averages over prediction instances (unmatched
/// predictions count as zero precision); recall over ground-truth instances;
/// F1/mIoU population per options.
OverlapStats overlap_metrics(const std::vector<InstanceRecord>& records, MacroPopulation population);
BoundaryStats boundary_metrics(const std::vector<InstanceRecord>& records, MacroPopulation population);

struct SceneMetrics {
  std::string name;
  OverlapStats overlap;
  BoundaryStats boundary;
  int gt_instances = 0;
  int pred_instances = 0;
  int matched = 0;
};

struct MetricsReport {
  std::vector<SceneMetrics> scenes;
  OverlapStats overlap;    // instance-pooled across scenes
  BoundaryStats boundary;
  int instances = 0;

  nlohmann::json to_json(const EvalOptions& options) const;
  std::string to_csv() const;
};

/// Evaluates a prediction directory against a ground-truth directory. Each
/// directory may be a single scene (masks/*.png or *.png directly) or a root
/// of scene subdirectories matched by name.
MetricsReport evaluate_dirs(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, const EvalOptions& options);

}  // namespace mb::eval
