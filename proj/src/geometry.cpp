// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/geometry.hpp"

#include <cmath>
#include <random>

namespace mb::geom {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
      -v.y(), v.x(), 0;
  return s;
}

void validate_rotation(const Eigen::Matrix3d& R, double tol) {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol || std::abs(R.determinant() - 1.0) > tol) {
    fail(ErrorCode::invalid_argument, "matrix is not a rotation (orthonormality/determinant check failed)");
  }
}

Eigen::Matrix<double, 6, 6> adjoint_se3(const RigidTransform3& T) {
  validate_rotation(T.R);
  Eigen::Matrix<double, 6, 6> ad = Eigen::Matrix<double, 6, 6>::Zero();
  ad.topLeftCorner<3, 3>() = T.R;
  ad.bottomLeftCorner<3, 3>() = skew(T.p) * T.R;
  ad.bottomRightCorner<3, 3>() = T.R;
  return ad;
}

Twist3 shift_spatial_twist(const Eigen::Vector3d& omega, const Eigen::Vector3d& v,
                           const Eigen::Vector3d& p) {
  return {omega, v - omega.cross(p)};
}

Twist2 body_to_spatial_twist2(double omega, const Eigen::Vector2d& v_node,
                              const Eigen::Vector2d& p_node) {
  // omega * J * p with J = [[0,-1],[1,0]]
  const Eigen::Vector2d jp(-p_node.y(), p_node.x());
  return {omega, v_node - omega * jp};
}

RigidTransform2 kabsch_se2_weighted(std::span<const Eigen::Vector2d> P,
                                    std::span<const Eigen::Vector2d> Q,
                                    std::span<const double> w) {
  const size_t n = P.size();
  if (n < 2 || Q.size() != n || w.size() != n) {
    fail(ErrorCode::invalid_argument, "kabsch_se2_weighted: need matched P, Q, w of size >= 2");
  }
  double wsum = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0) || !std::isfinite(wi)) {
      fail(ErrorCode::invalid_argument, "kabsch_se2_weighted: weights must be finite and nonnegative");
    }
    wsum += wi;
  }
  if (!(wsum > 0.0)) fail(ErrorCode::invalid_argument, "kabsch_se2_weighted: weight sum must be positive");

  Eigen::Vector2d pc = Eigen::Vector2d::Zero(), qc = Eigen::Vector2d::Zero();
  for (size_t i = 0; i < n; ++i) {
    pc += w[i] * P[i];
    qc += w[i] * Q[i];
  }
  pc /= wsum;
  qc /= wsum;

  // 2D cross-covariance reduces the rotation to a single atan2.
  double sxx = 0.0, cross = 0.0, scatter = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d dp = P[i] - pc;
    const Eigen::Vector2d dq = Q[i] - qc;
    sxx += w[i] * dp.dot(dq);
    cross += w[i] * (dp.x() * dq.y() - dp.y() * dq.x());
    scatter += w[i] * dp.squaredNorm();
  }
  if (!(scatter > 1e-18)) {
    fail(ErrorCode::degenerate_fit, "kabsch_se2_weighted: weighted source points are coincident");
  }

  const double angle = (sxx == 0.0 && cross == 0.0) ? 0.0 : std::atan2(cross, sxx);
  RigidTransform2 T = RigidTransform2::from_angle(angle);
  T.t = qc - T.R * pc;
  return T;
}

namespace {

// Exact SE(2) from two correspondences: rotation aligns the chord, then the
// translation pins the first point.
bool fit_from_pair(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                   const Eigen::Vector2d& q0, const Eigen::Vector2d& q1,
                   RigidTransform2& out) {
  const Eigen::Vector2d dp = p1 - p0;
  const Eigen::Vector2d dq = q1 - q0;
  const double np = dp.norm();
  if (np < 1e-12) return false;
  const double angle = std::atan2(dq.y(), dq.x()) - std::atan2(dp.y(), dp.x());
  out = RigidTransform2::from_angle(angle);
  out.t = q0 - out.R * p0;
  return true;
}

}  // namespace

RansacResult ransac_se2(std::span<const Eigen::Vector2d> P,
                        std::span<const Eigen::Vector2d> Q,
                        const RansacConfig& cfg) {
  const size_t n = P.size();
  if (n < 2 || Q.size() != n) {
    fail(ErrorCode::invalid_argument, "ransac_se2: need matched P, Q of size >= 2");
  }
  if (cfg.max_iterations < 1 || !(cfg.inlier_threshold > 0.0)) {
    fail(ErrorCode::invalid_argument, "ransac_se2: bad config");
  }

  const double thresh2 = cfg.inlier_threshold * cfg.inlier_threshold;
  std::vector<double> residual2(n);

  int best_count = -1;
  double best_residual = 0.0;
  RigidTransform2 best_model;

  auto score = [&](const RigidTransform2& model) {
    int count = 0;
    double rsum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r2 = (model.apply(P[i]) - Q[i]).squaredNorm();
      if (r2 <= thresh2) {
        ++count;
        rsum += r2;
      }
    }
    if (count > best_count || (count == best_count && rsum < best_residual)) {
      best_count = count;
      best_residual = rsum;
      best_model = model;
    }
  };

  const uint64_t all_pairs = static_cast<uint64_t>(n) * (n - 1) / 2;
  RigidTransform2 model;
  if (all_pairs <= static_cast<uint64_t>(cfg.max_iterations)) {
    for (size_t a = 0; a + 1 < n; ++a) {
      for (size_t b = a + 1; b < n; ++b) {
        if (fit_from_pair(P[a], P[b], Q[a], Q[b], model)) score(model);
      }
    }
  } else {
    std::mt19937_64 rng(splitmix64(cfg.seed));
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const size_t a = pick(rng);
      size_t b = pick(rng);
      if (b == a) b = (b + 1) % n;
      if (fit_from_pair(P[a], P[b], Q[a], Q[b], model)) score(model);
    }
  }

  if (best_count < 2) fail(ErrorCode::no_model, "ransac_se2: no consensus set of size >= 2");

  RansacResult result;
  result.inliers.assign(n, 0);
  result.weights.assign(n, 0.0);
  std::vector<Eigen::Vector2d> pin, qin;
  std::vector<double> win;
  const double sigma2 = thresh2;  // sigma = inlier threshold
  for (size_t i = 0; i < n; ++i) {
    const double r2 = (best_model.apply(P[i]) - Q[i]).squaredNorm();
    if (r2 <= thresh2) {
      result.inliers[i] = 1;
      result.weights[i] = std::exp(-r2 / (2.0 * sigma2));
      pin.push_back(P[i]);
      qin.push_back(Q[i]);
      win.push_back(result.weights[i]);
    }
  }
  result.inlier_count = static_cast<int>(pin.size());
  result.transform = kabsch_se2_weighted(pin, qin, win);
  return result;
}

}  // namespace mb::geom
