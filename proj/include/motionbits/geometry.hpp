// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rigid-body kinematics: SE(2)/SE(3) transforms, adjoint maps, twist
// re-expression about the world origin, and robust planar motion fitting
// (weighted Kabsch inside a deterministic RANSAC loop).

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "motionbits/common.hpp"

namespace mb::geom {

/// Planar spatial twist: angular rate (rad/frame) and linear velocity
/// (px/frame) re-expressed about the image-origin world frame.
struct Twist2 {
  double omega = 0.0;
  Eigen::Vector2d v = Eigen::Vector2d::Zero();

  Eigen::Vector3d as_vector() const { return {omega, v.x(), v.y()}; }
};

struct Twist3 {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
};

struct RigidTransform2 {
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  static RigidTransform2 identity() { return {}; }
  static RigidTransform2 from_angle(double angle,
                                    const Eigen::Vector2d& translation = Eigen::Vector2d::Zero()) {
    RigidTransform2 T;
    const double c = std::cos(angle), s = std::sin(angle);
    T.R << c, -s, s, c;
    T.t = translation;
    return T;
  }
  /// Rotation by `angle` about a fixed point `center` (translation derived).
  static RigidTransform2 rotation_about(double angle, const Eigen::Vector2d& center) {
    RigidTransform2 T = from_angle(angle);
    T.t = center - T.R * center;
    return T;
  }

  double angle() const { return std::atan2(R(1, 0), R(0, 0)); }
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return R * p + t; }
  RigidTransform2 inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
  RigidTransform2 operator*(const RigidTransform2& o) const { return {R * o.R, R * o.t + t}; }
};

struct RigidTransform3 {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + p; }
  RigidTransform3 operator*(const RigidTransform3& o) const { return {R * o.R, R * o.p + p}; }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Throws invalid_argument unless R'R = I and det(R) = +1 within `tol`.
void validate_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

/// 6x6 adjoint of T = (R, p): [[R, 0], [skew(p)R, R]].
/// Multiplying a body twist (omega, v stacked) yields the spatial twist.
Eigen::Matrix<double, 6, 6> adjoint_se3(const RigidTransform3& T);

/// Re-express a linear velocity about the world origin: v' = v - omega x p,
/// where v is the velocity of the point at p. Angular part is unchanged.
Twist3 shift_spatial_twist(const Eigen::Vector3d& omega, const Eigen::Vector3d& v,
                           const Eigen::Vector3d& p);

/// Planar specialization of the shift rule, first order in omega:
/// v_s = v_node - omega * J * p_node with J = [[0,-1],[1,0]].
/// Exact when v_node is an instantaneous velocity.
Twist2 body_to_spatial_twist2(double omega, const Eigen::Vector2d& v_node,
                              const Eigen::Vector2d& p_node);

/// Weighted least-squares SE(2) alignment: minimizes sum w_i |R p_i + t - q_i|^2.
/// Requires |P| = |Q| = |w| >= 2, sum(w) > 0, and a non-degenerate (not all
/// coincident) weighted source set; throws degenerate_fit otherwise.
RigidTransform2 kabsch_se2_weighted(std::span<const Eigen::Vector2d> P,
                                    std::span<const Eigen::Vector2d> Q,
                                    std::span<const double> w);

struct RansacConfig {
  int max_iterations = 50;      // hypothesis budget; all C(n,2) pairs when fewer
  double inlier_threshold = 1.0;  // px reprojection residual
  uint64_t seed = 0;
};

struct RansacResult {
  RigidTransform2 transform;     // weighted Kabsch refit on the consensus set
  std::vector<uint8_t> inliers;  // 1 per correspondence inside the threshold
  std::vector<double> weights;   // exp(-r^2 / 2 sigma^2) on inliers, 0 outside
  int inlier_count = 0;
};

/// Consensus SE(2) fit. Hypotheses are 2-point minimal samples; when
/// C(n,2) <= max_iterations every pair is enumerated in index order,
/// otherwise pairs are drawn from the seeded generator. Best model by
/// (inlier count, lower inlier residual sum, earlier hypothesis).
/// Throws no_model if no hypothesis reaches 2 inliers.
RansacResult ransac_se2(std::span<const Eigen::Vector2d> P,
                        std::span<const Eigen::Vector2d> Q,
                        const RansacConfig& cfg);

}  // namespace mb::geom
