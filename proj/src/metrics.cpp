// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace mb::eval {

using nlohmann::json;

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  const int dim = std::max(n, m);

  // pad to square; padded cells carry the worst finite cost present + 1
  double pad = 0.0;
  for (const auto& row : cost) {
    for (double c : row) pad = std::max(pad, c);
  }
  pad += 1.0;

  auto at = [&](int i, int j) -> double {
    return (i < n && j < m) ? cost[i][j] : pad;
  };

  // shortest augmenting path with potentials, 1-based scratch arrays
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(dim + 1, 0.0), v(dim + 1, 0.0);
  std::vector<int> match(dim + 1, 0);  // column -> row
  std::vector<int> way(dim + 1, 0);

  for (int i = 1; i <= dim; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(dim + 1, inf);
    std::vector<char> used(dim + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= dim; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= dim; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= dim; ++j) {
    const int i = match[j] - 1;
    if (i >= 0 && i < n && j - 1 < m) assignment[i] = j - 1;
  }
  return assignment;
}

namespace {

struct InstanceCounts {
  std::vector<uint16_t> gt_ids, pred_ids;
  std::map<uint16_t, size_t> gt_area, pred_area;
  std::map<std::pair<uint16_t, uint16_t>, size_t> intersection;  // (gt, pred)
};

InstanceCounts count_instances(const flow::LabelMap& pred, const flow::LabelMap& gt) {
  InstanceCounts c;
  for (size_t i = 0; i < gt.labels.size(); ++i) {
    const uint16_t g = gt.labels[i];
    const uint16_t p = pred.labels[i];
    if (g) ++c.gt_area[g];
    if (p) ++c.pred_area[p];
    if (g && p) ++c.intersection[{g, p}];
  }
  for (const auto& [id, _] : c.gt_area) c.gt_ids.push_back(id);
  for (const auto& [id, _] : c.pred_area) c.pred_ids.push_back(id);
  return c;
}

double pair_iou(const InstanceCounts& c, uint16_t g, uint16_t p) {
  const auto it = c.intersection.find({g, p});
  if (it == c.intersection.end()) return 0.0;
  const double inter = static_cast<double>(it->second);
  const double uni = static_cast<double>(c.gt_area.at(g) + c.pred_area.at(p)) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace

InstanceMatching hungarian_match(const flow::LabelMap& pred, const flow::LabelMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    fail(ErrorCode::invalid_argument, "hungarian_match: dimension mismatch");
  }
  const InstanceCounts counts = count_instances(pred, gt);

  InstanceMatching matching;
  std::set<uint16_t> used_pred;
  if (!counts.gt_ids.empty() && !counts.pred_ids.empty()) {
    std::vector<std::vector<double>> cost(counts.gt_ids.size(),
                                          std::vector<double>(counts.pred_ids.size()));
    for (size_t i = 0; i < counts.gt_ids.size(); ++i) {
      for (size_t j = 0; j < counts.pred_ids.size(); ++j) {
        cost[i][j] = 1.0 - pair_iou(counts, counts.gt_ids[i], counts.pred_ids[j]);
      }
    }
    const auto assignment = solve_assignment(cost);
    for (size_t i = 0; i < counts.gt_ids.size(); ++i) {
      const int j = assignment[i];
      if (j < 0) continue;
      const double iou = pair_iou(counts, counts.gt_ids[i], counts.pred_ids[j]);
      if (iou > 0.0) {
        matching.pairs.push_back({counts.gt_ids[i], counts.pred_ids[j], iou});
        used_pred.insert(counts.pred_ids[j]);
      }
    }
  }
  std::set<uint16_t> matched_gt;
  for (const auto& p : matching.pairs) matched_gt.insert(p.gt_id);
  for (uint16_t id : counts.gt_ids) {
    if (!matched_gt.count(id)) matching.unmatched_gt.push_back(id);
  }
  for (uint16_t id : counts.pred_ids) {
    if (!used_pred.count(id)) matching.unmatched_pred.push_back(id);
  }
  return matching;
}

int EvalOptions::boundary_tolerance(int width, int height) const {
  if (boundary_tol_px > 0) return boundary_tol_px;
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return static_cast<int>(std::ceil(boundary_tol_frac * diag));
}

namespace {

// 8-connectivity contour: instance pixels with a non-instance neighbor
// (image border counts as outside).
std::vector<std::pair<int, int>> contour_pixels(const flow::LabelMap& map, uint16_t id) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (map.at(x, y) != id) continue;
      bool boundary = false;
      for (int dy = -1; dy <= 1 && !boundary; ++dy) {
        for (int dx = -1; dx <= 1 && !boundary; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height || map.at(nx, ny) != id) {
            boundary = true;
          }
        }
      }
      if (boundary) out.emplace_back(x, y);
    }
  }
  return out;
}

// Fraction of `from` contour pixels within Euclidean distance tol of the
// `to` contour, computed against a disc-dilated bitmap of `to`.
double contour_hit_fraction(const std::vector<std::pair<int, int>>& from,
                            const std::vector<std::pair<int, int>>& to, int tol, int width,
                            int height) {
  if (from.empty()) return 0.0;
  std::vector<uint8_t> dilated(static_cast<size_t>(width) * height, 0);
  std::vector<std::pair<int, int>> disc;
  for (int dy = -tol; dy <= tol; ++dy) {
    for (int dx = -tol; dx <= tol; ++dx) {
      if (dx * dx + dy * dy <= tol * tol) disc.emplace_back(dx, dy);
    }
  }
  for (const auto& [x, y] : to) {
    for (const auto& [dx, dy] : disc) {
      const int nx = x + dx, ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < width && ny < height) {
        dilated[static_cast<size_t>(ny) * width + nx] = 1;
      }
    }
  }
  size_t hits = 0;
  for (const auto& [x, y] : from) {
    hits += dilated[static_cast<size_t>(y) * width + x];
  }
  return static_cast<double>(hits) / from.size();
}

double harmonic_f1(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::vector<InstanceRecord> instance_records(const flow::LabelMap& pred, const flow::LabelMap& gt,
                                             const InstanceMatching& matching, int boundary_tol) {
  const InstanceCounts counts = count_instances(pred, gt);
  std::vector<InstanceRecord> records;

  for (const auto& pair : matching.pairs) {
    InstanceRecord rec;
    rec.kind = InstanceRecord::Kind::matched;
    const double inter = static_cast<double>(counts.intersection.at({pair.gt_id, pair.pred_id}));
    rec.precision = inter / counts.pred_area.at(pair.pred_id);
    rec.recall = inter / counts.gt_area.at(pair.gt_id);
    rec.f1 = harmonic_f1(rec.precision, rec.recall);
    rec.iou = pair.iou;

    const auto pc = contour_pixels(pred, pair.pred_id);
    const auto gc = contour_pixels(gt, pair.gt_id);
    rec.bprecision = contour_hit_fraction(pc, gc, boundary_tol, pred.width, pred.height);
    rec.brecall = contour_hit_fraction(gc, pc, boundary_tol, pred.width, pred.height);
    rec.bf1 = harmonic_f1(rec.bprecision, rec.brecall);
    records.push_back(rec);
  }
  for (size_t i = 0; i < matching.unmatched_gt.size(); ++i) {
    InstanceRecord rec;
    rec.kind = InstanceRecord::Kind::unmatched_gt;
    records.push_back(rec);
  }
  for (size_t i = 0; i < matching.unmatched_pred.size(); ++i) {
    InstanceRecord rec;
    rec.kind = InstanceRecord::Kind::unmatched_pred;
    records.push_back(rec);
  }
  return records;
}

OverlapStats overlap_metrics(const std::vector<InstanceRecord>& records, MacroPopulation population) {
  OverlapStats s;
  size_t n_pred = 0, n_gt = 0, n_f = 0;
  for (const auto& rec : records) {
    const bool is_gt = rec.kind != InstanceRecord::Kind::unmatched_pred;
    const bool is_pred = rec.kind != InstanceRecord::Kind::unmatched_gt;
    if (is_pred) {
      s.precision += rec.precision;
      ++n_pred;
    }
    if (is_gt) {
      s.recall += rec.recall;
      ++n_gt;
    }
    const bool in_f = population == MacroPopulation::gt_union_pred ? true : is_gt;
    if (in_f) {
      s.f1 += rec.f1;
      s.miou += rec.iou;
      ++n_f;
    }
  }
  if (n_pred) s.precision /= n_pred;
  if (n_gt) s.recall /= n_gt;
  if (n_f) {
    s.f1 /= n_f;
    s.miou /= n_f;
  }
  return s;
}

BoundaryStats boundary_metrics(const std::vector<InstanceRecord>& records, MacroPopulation population) {
  BoundaryStats s;
  size_t n_pred = 0, n_gt = 0, n_f = 0;
  for (const auto& rec : records) {
    const bool is_gt = rec.kind != InstanceRecord::Kind::unmatched_pred;
    const bool is_pred = rec.kind != InstanceRecord::Kind::unmatched_gt;
    if (is_pred) {
      s.precision += rec.bprecision;
      ++n_pred;
    }
    if (is_gt) {
      s.recall += rec.brecall;
      ++n_gt;
    }
    const bool in_f = population == MacroPopulation::gt_union_pred ? true : is_gt;
    if (in_f) {
      s.f1 += rec.bf1;
      ++n_f;
    }
  }
  if (n_pred) s.precision /= n_pred;
  if (n_gt) s.recall /= n_gt;
  if (n_f) s.f1 /= n_f;
  return s;
}

namespace {

json stats_json(const OverlapStats& o) {
  return {{"precision", o.precision}, {"recall", o.recall}, {"f1", o.f1}, {"miou", o.miou}};
}

json stats_json(const BoundaryStats& b) {
  return {{"precision", b.precision}, {"recall", b.recall}, {"f1", b.f1}};
}

}  // namespace

json MetricsReport::to_json(const EvalOptions& options) const {
  json j;
  j["schema"] = "motionbits.metrics/1";
  j["options"] = {{"boundary_tol_frac", options.boundary_tol_frac},
                  {"boundary_tol_px", options.boundary_tol_px},
                  {"population", options.population == MacroPopulation::gt_only ? "gt" : "union"},
                  {"final_frame_only", options.final_frame_only}};
  j["scenes"] = json::array();
  for (const auto& scene : scenes) {
    j["scenes"].push_back({{"name", scene.name},
                           {"overlap", stats_json(scene.overlap)},
                           {"boundary", stats_json(scene.boundary)},
                           {"gt_instances", scene.gt_instances},
                           {"pred_instances", scene.pred_instances},
                           {"matched", scene.matched}});
  }
  j["aggregate"] = {{"overlap", stats_json(overlap)},
                    {"boundary", stats_json(boundary)},
                    {"instances", instances}};
  return j;
}

std::string MetricsReport::to_csv() const {
  std::string csv =
      "scene,overlap_p,overlap_r,overlap_f1,overlap_miou,boundary_p,boundary_r,boundary_f1\n";
  auto row = [](const std::string& name, const OverlapStats& o, const BoundaryStats& b) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", name.c_str(),
                  o.precision, o.recall, o.f1, o.miou, b.precision, b.recall, b.f1);
    return std::string(buf);
  };
  for (const auto& scene : scenes) csv += row(scene.name, scene.overlap, scene.boundary);
  csv += row("aggregate", overlap, boundary);
  return csv;
}

namespace {

namespace fs = std::filesystem;

std::vector<fs::path> mask_files(const fs::path& dir) {
  fs::path base = dir;
  if (fs::is_directory(dir / "masks")) base = dir / "masks";
  std::vector<fs::path> files;
  if (!fs::is_directory(base)) return files;
  for (const auto& entry : fs::directory_iterator(base)) {
    if (entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

MetricsReport evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir,
                            const EvalOptions& options) {
  if (!fs::is_directory(pred_dir)) fail(ErrorCode::io_error, "not a directory: " + pred_dir.string());
  if (!fs::is_directory(gt_dir)) fail(ErrorCode::io_error, "not a directory: " + gt_dir.string());

  // scene discovery: matching subdirectories that contain masks, else the
  // given pair is one scene
  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> scenes;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (!entry.is_directory()) continue;
    const fs::path gt_scene = gt_dir / entry.path().filename();
    if (fs::is_directory(gt_scene) && !mask_files(entry.path()).empty() &&
        !mask_files(gt_scene).empty()) {
      scenes.push_back({entry.path().filename().string(), {entry.path(), gt_scene}});
    }
  }
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) scenes.push_back({"scene", {pred_dir, gt_dir}});

  MetricsReport report;
  std::vector<InstanceRecord> pooled;
  for (const auto& [name, dirs] : scenes) {
    const auto pred_files = mask_files(dirs.first);
    const auto gt_files = mask_files(dirs.second);
    if (pred_files.empty() || gt_files.empty()) {
      fail(ErrorCode::io_error, "no mask files for scene " + name);
    }
    // align by file name
    std::map<std::string, fs::path> gt_by_name;
    for (const auto& f : gt_files) gt_by_name[f.filename().string()] = f;
    std::vector<std::pair<fs::path, fs::path>> frame_pairs;
    for (const auto& f : pred_files) {
      const auto it = gt_by_name.find(f.filename().string());
      if (it != gt_by_name.end()) frame_pairs.push_back({f, it->second});
    }
    if (frame_pairs.empty()) fail(ErrorCode::validation, "no common frames for scene " + name);
    if (options.final_frame_only) frame_pairs = {frame_pairs.back()};

    std::vector<InstanceRecord> scene_records;
    int gt_instances = 0, pred_instances = 0, matched = 0;
    for (const auto& [pf, gf] : frame_pairs) {
      const auto pred = flow::read_labels(pf);
      const auto gt = flow::read_labels(gf);
      if (pred.width != gt.width || pred.height != gt.height) {
        fail(ErrorCode::validation, "mask dimensions differ for " + pf.string());
      }
      const auto matching = hungarian_match(pred, gt);
      const int tol = options.boundary_tolerance(pred.width, pred.height);
      const auto records = instance_records(pred, gt, matching, tol);
      scene_records.insert(scene_records.end(), records.begin(), records.end());
      matched += static_cast<int>(matching.pairs.size());
      gt_instances += static_cast<int>(matching.pairs.size() + matching.unmatched_gt.size());
      pred_instances += static_cast<int>(matching.pairs.size() + matching.unmatched_pred.size());
    }

    SceneMetrics sm;
    sm.name = name;
    sm.overlap = overlap_metrics(scene_records, options.population);
    sm.boundary = boundary_metrics(scene_records, options.population);
    sm.gt_instances = gt_instances;
    sm.pred_instances = pred_instances;
    sm.matched = matched;
    report.scenes.push_back(sm);
    pooled.insert(pooled.end(), scene_records.begin(), scene_records.end());
  }

  report.overlap = overlap_metrics(pooled, options.population);
  report.boundary = boundary_metrics(pooled, options.population);
  report.instances = static_cast<int>(pooled.size());
  return report;
}

}  // namespace mb::eval
