// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Planar-model sensitivity study: the image interaction matrix (pinhole
// Jacobian), its analytic spatial derivatives, and a Monte Carlo estimate of
// how much the projected image motion of two nearby points on one rigid
// body differs under an unconstrained 3D twist.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "motionbits/common.hpp"
#include "motionbits/geometry.hpp"

namespace mb::sens {

struct CameraModel {
  double focal = 600.0;  // px
  double cx = 320.0;
  double cy = 240.0;
};

/// Classical pinhole interaction matrix at normalized image point (x, y)
/// and depth Z > 0, column order (vx, vy, vz, wx, wy, wz) of a camera-frame
/// twist:
///   [ -1/Z   0    x/Z   xy      -(1+x^2)  y  ]
///   [  0    -1/Z  y/Z   1+y^2   -xy      -x  ]
Eigen::Matrix<double, 2, 6> interaction_matrix(double x, double y, double Z);

/// Analytic spatial derivatives of the interaction matrix with respect to
/// the 3D point coordinates, each contracted with the twist:
/// Psi = [dL/dX * V, dL/dY * V, dL/dZ * V], a 2x3 map from a small 3D
/// point displacement to the change of projected image velocity.
Eigen::Matrix<double, 2, 3> sensitivity_matrix(const Eigen::Vector3d& point,
                                               const geom::Twist3& twist);

enum class SensitivityMode {
  direct,    // exact perspective image velocities of both displaced points
  analytic,  // first-order numerator Psi * dp
};

struct McConfig {
  double x_extent = 2.0;  // points uniform in [-x_extent, x_extent]
  double y_extent = 2.0;
  double z = 1.5;            // working depth, m
  double dp_norm = 0.02;     // separation of the two tracked points, m
  long trials = 100000;
  double angular_scale = 1.0;  // rad of angular per m of linear twist mix
  SensitivityMode mode = SensitivityMode::direct;
  uint64_t seed = 0;
  CameraModel camera;

  nlohmann::json to_json() const;
  static McConfig from_json(const nlohmann::json& j);
  /// "tabletop" or "in-the-wild"
  static McConfig preset(const std::string& name);
};

struct SensitivitySummary {
  long trials = 0;
  double mean_pct = 0.0;
  double std_pct = 0.0;
  long resampled = 0;

  nlohmann::json to_json(const McConfig& config) const;
};

/// Per trial: a point uniform in the configured box at depth z, a unit
/// random 6D twist (isotropic angular and linear parts mixed by
/// angular_scale), and a uniformly directed displacement dp. The deviation
/// |d1 - d2| between the two projected image displacements over unit time is
/// reported relative to the run's root-mean-square displacement magnitude
/// (per-trial magnitudes are mean(|d1|, |d2|)). Trials with a point behind
/// the camera or with vanishing displacements are resampled (counted).
/// Deterministic per seed via per-trial counter-derived streams.
SensitivitySummary monte_carlo_sensitivity(const McConfig& config);

/// Optional per-trial histogram (percent bins); bin_width > 0.
std::string sensitivity_histogram_csv(const McConfig& config, double bin_width);

}  // namespace mb::sens
