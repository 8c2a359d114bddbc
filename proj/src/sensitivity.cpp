// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/sensitivity.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace mb::sens {

using Eigen::Vector2d;
using Eigen::Vector3d;
using nlohmann::json;

Eigen::Matrix<double, 2, 6> interaction_matrix(double x, double y, double Z) {
  if (!(Z > 0.0)) fail(ErrorCode::domain_error, "interaction_matrix: depth must be positive");
  Eigen::Matrix<double, 2, 6> L;
  L << -1.0 / Z, 0.0, x / Z, x * y, -(1.0 + x * x), y,
       0.0, -1.0 / Z, y / Z, 1.0 + y * y, -x * y, -x;
  return L;
}

namespace {

// dL/dX, dL/dY, dL/dZ through x = X/Z, y = Y/Z
Eigen::Matrix<double, 2, 6> dL_dX(double x, double y, double Z) {
  Eigen::Matrix<double, 2, 6> d;
  d << 0.0, 0.0, 1.0 / (Z * Z), y / Z, -2.0 * x / Z, 0.0,
       0.0, 0.0, 0.0, 0.0, -y / Z, -1.0 / Z;
  return d;
}

Eigen::Matrix<double, 2, 6> dL_dY(double x, double y, double Z) {
  Eigen::Matrix<double, 2, 6> d;
  d << 0.0, 0.0, 0.0, x / Z, 0.0, 1.0 / Z,
       0.0, 0.0, 1.0 / (Z * Z), 2.0 * y / Z, -x / Z, 0.0;
  return d;
}

Eigen::Matrix<double, 2, 6> dL_dZ(double x, double y, double Z) {
  Eigen::Matrix<double, 2, 6> d;
  d << 1.0 / (Z * Z), 0.0, -2.0 * x / (Z * Z), -2.0 * x * y / Z, 2.0 * x * x / Z, -y / Z,
       0.0, 1.0 / (Z * Z), -2.0 * y / (Z * Z), -2.0 * y * y / Z, 2.0 * x * y / Z, x / Z;
  return d;
}

Eigen::Matrix<double, 6, 1> stack_twist(const geom::Twist3& t) {
  Eigen::Matrix<double, 6, 1> v;
  v << t.v, t.omega;  // interaction-matrix column order: linear first
  return v;
}

// exact perspective image velocity of a point moving with the given twist
// about the camera origin
Vector2d image_velocity(const Vector3d& P, const geom::Twist3& twist) {
  const Vector3d Pdot = twist.omega.cross(P) + twist.v;
  const double Z = P.z();
  return {Pdot.x() / Z - P.x() * Pdot.z() / (Z * Z),
          Pdot.y() / Z - P.y() * Pdot.z() / (Z * Z)};
}

}  // namespace

Eigen::Matrix<double, 2, 3> sensitivity_matrix(const Vector3d& point, const geom::Twist3& twist) {
  const double Z = point.z();
  if (!(Z > 0.0)) fail(ErrorCode::domain_error, "sensitivity_matrix: depth must be positive");
  const double x = point.x() / Z;
  const double y = point.y() / Z;
  const auto v = stack_twist(twist);
  Eigen::Matrix<double, 2, 3> psi;
  psi.col(0) = dL_dX(x, y, Z) * v;
  psi.col(1) = dL_dY(x, y, Z) * v;
  psi.col(2) = dL_dZ(x, y, Z) * v;
  return psi;
}

json McConfig::to_json() const {
  return json{{"x_extent", x_extent},
              {"y_extent", y_extent},
              {"z", z},
              {"dp_norm", dp_norm},
              {"trials", trials},
              {"angular_scale", angular_scale},
              {"mode", mode == SensitivityMode::direct ? "direct" : "analytic"},
              {"seed", seed},
              {"camera", {{"focal", camera.focal}, {"cx", camera.cx}, {"cy", camera.cy}}}};
}

McConfig McConfig::from_json(const json& j) {
  McConfig c;
  try {
    c.x_extent = j.value("x_extent", c.x_extent);
    c.y_extent = j.value("y_extent", c.y_extent);
    c.z = j.value("z", c.z);
    c.dp_norm = j.value("dp_norm", c.dp_norm);
    c.trials = j.value("trials", c.trials);
    c.angular_scale = j.value("angular_scale", c.angular_scale);
    if (j.contains("mode")) {
      const std::string mode = j["mode"].get<std::string>();
      if (mode == "direct") {
        c.mode = SensitivityMode::direct;
      } else if (mode == "analytic") {
        c.mode = SensitivityMode::analytic;
      } else {
        fail(ErrorCode::validation, "sensitivity config: unknown mode '" + mode + "'");
      }
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("camera")) {
      c.camera.focal = j["camera"].value("focal", c.camera.focal);
      c.camera.cx = j["camera"].value("cx", c.camera.cx);
      c.camera.cy = j["camera"].value("cy", c.camera.cy);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::validation, std::string("sensitivity config: ") + e.what());
  }
  if (c.trials < 1 || !(c.z > 0.0) || !(c.dp_norm > 0.0)) {
    fail(ErrorCode::validation, "sensitivity config: need trials >= 1, z > 0, dp_norm > 0");
  }
  return c;
}

McConfig McConfig::preset(const std::string& name) {
  McConfig c;
  if (name == "tabletop") {
    c.x_extent = 2.0;
    c.y_extent = 2.0;
    c.z = 1.5;
    c.dp_norm = 0.02;
  } else if (name == "in-the-wild") {
    c.x_extent = 6.0;
    c.y_extent = 6.0;
    c.z = 6.0;
    c.dp_norm = 0.08;
  } else {
    fail(ErrorCode::validation, "unknown sensitivity preset '" + name + "'");
  }
  return c;
}

json SensitivitySummary::to_json(const McConfig& config) const {
  return json{{"schema", "motionbits.sensitivity/1"},
              {"config", config.to_json()},
              {"trials", trials},
              {"mean_pct", mean_pct},
              {"std_pct", std_pct},
              {"resampled", resampled}};
}

namespace {

struct TrialResult {
  double deviation = 0.0;     // |d1 - d2| (or |Psi dp| in analytic mode)
  double displacement = 0.0;  // mean(|d1|, |d2|)
  long resamples = 0;
};

TrialResult run_trial(const McConfig& cfg, uint64_t trial_index) {
  std::mt19937_64 rng(splitmix64(cfg.seed ^ (0x5851f42d4c957f2dull + trial_index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TrialResult out;
  for (;;) {
    const Vector3d P((2.0 * unit(rng) - 1.0) * cfg.x_extent,
                     (2.0 * unit(rng) - 1.0) * cfg.y_extent, cfg.z);

    // unit-norm twist with the configured angular:linear mix
    Vector3d w(gauss(rng), gauss(rng), gauss(rng));
    Vector3d v(gauss(rng), gauss(rng), gauss(rng));
    w *= cfg.angular_scale;
    const double norm = std::sqrt(w.squaredNorm() + v.squaredNorm());
    if (norm < 1e-12) {
      ++out.resamples;
      continue;
    }
    geom::Twist3 twist{w / norm, v / norm};

    // uniform direction on the sphere for the point separation
    Vector3d dp(gauss(rng), gauss(rng), gauss(rng));
    const double dpn = dp.norm();
    if (dpn < 1e-12) {
      ++out.resamples;
      continue;
    }
    dp *= cfg.dp_norm / dpn;
    const Vector3d P2 = P + dp;
    if (P.z() <= 1e-6 || P2.z() <= 1e-6) {
      ++out.resamples;
      continue;
    }

    const Vector2d d1 = image_velocity(P, twist);
    const Vector2d d2 = image_velocity(P2, twist);
    out.displacement = 0.5 * (d1.norm() + d2.norm());
    if (out.displacement < 1e-9) {
      ++out.resamples;
      continue;
    }
    if (cfg.mode == SensitivityMode::direct) {
      out.deviation = (d1 - d2).norm();
    } else {
      out.deviation = (sensitivity_matrix(P, twist) * dp).norm();
    }
    return out;
  }
}

// The per-trial deviation is reported relative to the run's root-mean-square
// displacement magnitude. A per-trial quotient is heavy-tailed: wherever the
// projected motion locally vanishes the quotient diverges even though the
// absolute deviation stays tiny, which says nothing about the model.
double rms_displacement(const McConfig& config, long* resampled) {
  double sum2 = 0.0;
  for (long i = 0; i < config.trials; ++i) {
    const auto trial = run_trial(config, static_cast<uint64_t>(i));
    if (resampled) *resampled += trial.resamples;
    sum2 += trial.displacement * trial.displacement;
  }
  return std::sqrt(sum2 / config.trials);
}

}  // namespace

SensitivitySummary monte_carlo_sensitivity(const McConfig& config) {
  SensitivitySummary summary;
  summary.trials = config.trials;
  const double scale = rms_displacement(config, &summary.resampled);
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < config.trials; ++i) {
    const double rel = run_trial(config, static_cast<uint64_t>(i)).deviation / scale;
    sum += rel;
    sum2 += rel * rel;
  }
  const double mean = sum / config.trials;
  const double var = std::max(0.0, sum2 / config.trials - mean * mean);
  summary.mean_pct = 100.0 * mean;
  summary.std_pct = 100.0 * std::sqrt(var);
  return summary;
}

std::string sensitivity_histogram_csv(const McConfig& config, double bin_width) {
  if (!(bin_width > 0.0)) fail(ErrorCode::invalid_argument, "histogram: bin_width must be positive");
  const double scale = rms_displacement(config, nullptr);
  std::vector<long> bins;
  for (long i = 0; i < config.trials; ++i) {
    const double pct = 100.0 * run_trial(config, static_cast<uint64_t>(i)).deviation / scale;
    const size_t bin = static_cast<size_t>(pct / bin_width);
    if (bins.size() <= bin) bins.resize(bin + 1, 0);
    ++bins[bin];
  }
  std::string csv = "bin_lo_pct,bin_hi_pct,count\n";
  for (size_t b = 0; b < bins.size(); ++b) {
    char line[96];
    std::snprintf(line, sizeof(line), "%.4f,%.4f,%ld\n", b * bin_width, (b + 1) * bin_width, bins[b]);
    csv += line;
  }
  return csv;
}

}  // namespace mb::sens
