#pragma once

#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace rtrack {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateMatrix = Eigen::Matrix<double, 8, 8>;
using MeasVector = Eigen::Matrix<double, 4, 1>;

/// Constant-velocity state over (cx, cy, a, h) and their per-frame velocities,
/// where a = w / h.
struct KalmanState {
  StateVector mean = StateVector::Zero();
  StateMatrix covariance = StateMatrix::Identity();
};

/// Standard deviations are expressed as multiples of the current box height.
struct NoiseConfig {
  double position_weight = 1.0 / 20.0;
  double velocity_weight = 1.0 / 160.0;
  /// Keeps the aspect-ratio velocity at zero.
  bool freeze_aspect_velocity = false;

  bool valid() const { return position_weight > 0.0 && velocity_weight > 0.0; }
};

namespace detail {

inline MeasVector box_to_measurement(const BBox& b) {
  if (!b.has_area()) throw Error(ErrorCode::DegenerateBox, "box has zero area");
  MeasVector z;
  z << b.center_x(), b.center_y(), b.width() / b.height(), b.height();
  return z;
}

inline Eigen::Matrix<double, 4, 8> observation_matrix() {
  Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
  h.leftCols<4>().setIdentity();
  return h;
}

inline StateMatrix symmetrize(const StateMatrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

inline KalmanState init_from_box(const BBox& b, const NoiseConfig& cfg) {
  const MeasVector z = detail::box_to_measurement(b);
  KalmanState s;
  s.mean.setZero();
  s.mean.head<4>() = z;

  const double h = z(3);
  StateVector std_dev;
  std_dev << 2.0 * cfg.position_weight * h, 2.0 * cfg.position_weight * h, 1e-2,
      2.0 * cfg.position_weight * h, 10.0 * cfg.velocity_weight * h,
      10.0 * cfg.velocity_weight * h, 1e-5, 10.0 * cfg.velocity_weight * h;
  s.covariance = std_dev.array().square().matrix().asDiagonal();
  return s;
}

inline KalmanState predict(const KalmanState& s, const NoiseConfig& cfg) {
  StateMatrix f = StateMatrix::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  if (cfg.freeze_aspect_velocity) f(2, 6) = 0.0;

  const double h = s.mean(3);
  StateVector std_dev;
  std_dev << cfg.position_weight * h, cfg.position_weight * h, 1e-2, cfg.position_weight * h,
      cfg.velocity_weight * h, cfg.velocity_weight * h, 1e-5, cfg.velocity_weight * h;
  const StateMatrix q = std_dev.array().square().matrix().asDiagonal();

  KalmanState out;
  out.mean = f * s.mean;
  if (cfg.freeze_aspect_velocity) out.mean(6) = 0.0;
  out.covariance = detail::symmetrize(f * s.covariance * f.transpose() + q);
  return out;
}

inline KalmanState update(const KalmanState& s, const BBox& measurement, const NoiseConfig& cfg) {
  const MeasVector z = detail::box_to_measurement(measurement);
  const auto hm = detail::observation_matrix();

  const double h = s.mean(3);
  MeasVector r_std;
  r_std << cfg.position_weight * h, cfg.position_weight * h, 1e-1, cfg.position_weight * h;
  const Eigen::Matrix4d r = r_std.array().square().matrix().asDiagonal();

  const Eigen::Matrix4d innovation_cov = hm * s.covariance * hm.transpose() + r;
  const Eigen::Matrix<double, 8, 4> pht = s.covariance * hm.transpose();
  // K = P H^T S^-1, solved through the Cholesky factor of S.
  const Eigen::Matrix<double, 8, 4> gain =
      innovation_cov.llt().solve(pht.transpose()).transpose();

  KalmanState out;
  out.mean = s.mean + gain * (z - hm * s.mean);
  if (cfg.freeze_aspect_velocity) out.mean(6) = 0.0;
  // Joseph form keeps the covariance symmetric positive semidefinite.
  const StateMatrix ikh = StateMatrix::Identity() - gain * hm;
  out.covariance =
      detail::symmetrize(ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose());
  return out;
}

inline BBox state_to_box(const KalmanState& s) {
  const double cx = s.mean(0);
  const double cy = s.mean(1);
  const double a = s.mean(2);
  const double h = s.mean(3);
  if (!(a > 0.0) || !(h > 0.0))
    throw Error(ErrorCode::DegenerateState, "aspect ratio and height must be positive");
  const double w = a * h;
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

}  // namespace rtrack
