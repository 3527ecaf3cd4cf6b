#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "mat/core.hpp"
#include "mat/warp.hpp"

namespace mat {

using Vector8d = Eigen::Matrix<double, 8, 1>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;
using Vector4d = Eigen::Matrix<double, 4, 1>;
using Matrix4d = Eigen::Matrix<double, 4, 4>;
using Matrix48d = Eigen::Matrix<double, 4, 8>;

// Constant-velocity box state [cx, cy, w, h, vcx, vcy, vw, vh] and covariance.
struct KalmanState {
  Vector8d mean = Vector8d::Zero();
  Matrix8d cov = Matrix8d::Identity();

  CenterBox center() const { return {mean(0), mean(1), mean(2), mean(3)}; }
  BoundingBox box() const { return from_center_form(center()); }
};

// Noise model. By default every standard deviation is proportional to the
// current box height; the fixed overrides replace that when set.
struct MotionParams {
  double std_weight_position = 1.0 / 20.0;
  double std_weight_velocity = 1.0 / 160.0;
  double init_position_factor = 2.0;
  double init_velocity_factor = 10.0;
  double min_extent = 1e-2;  // positivity floor for w and h

  std::optional<Matrix8d> fixed_process_noise;
  std::optional<Matrix4d> fixed_measurement_noise;

  static Matrix8d transition() {
    Matrix8d f = Matrix8d::Identity();
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
    return f;
  }

  static Matrix48d observation() {
    Matrix48d h = Matrix48d::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
    return h;
  }

  Matrix8d process_noise(const Vector8d& mean) const {
    if (fixed_process_noise) return *fixed_process_noise;
    const double h = mean(3);
    const double sp = std_weight_position * h;
    const double sv = std_weight_velocity * h;
    Vector8d d;
    d << sp * sp, sp * sp, sp * sp, sp * sp, sv * sv, sv * sv, sv * sv, sv * sv;
    return d.asDiagonal();
  }

  Matrix4d measurement_noise(const Vector8d& mean) const {
    if (fixed_measurement_noise) return *fixed_measurement_noise;
    const double sp = std_weight_position * mean(3);
    return Matrix4d::Identity() * (sp * sp);
  }
};

namespace detail {

inline void symmetrize(Matrix8d& p) { p = 0.5 * (p + p.transpose()).eval(); }

inline void floor_extent(Vector8d& mean, double min_extent) {
  mean(2) = std::max(mean(2), min_extent);
  mean(3) = std::max(mean(3), min_extent);
}

}  // namespace detail

inline KalmanState km_init(const BoundingBox& box, const MotionParams& params = {}) {
  const CenterBox c = to_center_form(box);
  KalmanState s;
  s.mean << c.cx, c.cy, c.w, c.h, 0.0, 0.0, 0.0, 0.0;
  const double sp = params.init_position_factor * params.std_weight_position * c.h;
  const double sv = params.init_velocity_factor * params.std_weight_velocity * c.h;
  Vector8d d;
  d << sp * sp, sp * sp, sp * sp, sp * sp, sv * sv, sv * sv, sv * sv, sv * sv;
  s.cov = d.asDiagonal();
  return s;
}

inline KalmanState km_predict(const KalmanState& state, const MotionParams& params = {}) {
  static const Matrix8d kF = MotionParams::transition();
  KalmanState out;
  out.mean = kF * state.mean;
  out.cov = kF * state.cov * kF.transpose() + params.process_noise(state.mean);
  detail::symmetrize(out.cov);
  detail::floor_extent(out.mean, params.min_extent);
  return out;
}

inline KalmanState km_update(const KalmanState& state, const BoundingBox& observation,
                             const MotionParams& params = {}) {
  static const Matrix48d kH = MotionParams::observation();
  const CenterBox c = to_center_form(observation);
  const Vector4d z(c.cx, c.cy, c.w, c.h);

  const Matrix4d innovation_cov = kH * state.cov * kH.transpose() + params.measurement_noise(state.mean);
  Eigen::LLT<Matrix4d> llt(innovation_cov);
  if (llt.info() != Eigen::Success) throw NumericError("km_update: singular innovation covariance");

  // K = P H^T S^-1, solved without forming the inverse.
  const Eigen::Matrix<double, 8, 4> pht = state.cov * kH.transpose();
  const Eigen::Matrix<double, 8, 4> gain = llt.solve(pht.transpose()).transpose();

  KalmanState out;
  out.mean = state.mean + gain * (z - kH * state.mean);
  out.cov = state.cov - gain * innovation_cov * gain.transpose();
  detail::symmetrize(out.cov);
  detail::floor_extent(out.mean, params.min_extent);
  return out;
}

// Kalman prediction whose box part is then carried through the camera warp.
// Velocities and covariance follow km_predict unchanged. Throws NumericError
// when the warped box degenerates; callers fall back to the identity warp.
inline KalmanState iml_predict(const KalmanState& state, const AffineWarp& warp,
                               const MotionParams& params = {}) {
  KalmanState out = km_predict(state, params);
  const auto warped = try_warp_center(warp, out.center(), params.min_extent);
  if (!warped) throw NumericError("iml_predict: warp produced a degenerate box");
  out.mean(0) = warped->cx;
  out.mean(1) = warped->cy;
  out.mean(2) = warped->w;
  out.mean(3) = warped->h;
  return out;
}

// iml_predict that degrades to km_predict instead of throwing.
inline KalmanState iml_predict_or_static(const KalmanState& state, const AffineWarp& warp,
                                         const MotionParams& params = {}) {
  try {
    return iml_predict(state, warp, params);
  } catch (const NumericError&) {
    return km_predict(state, params);
  }
}

// |V_Box| normalized by the image diagonal and clamped to [0, 1].
inline double velocity_norm(const KalmanState& state, double image_diagonal) {
  if (!(image_diagonal > 0.0)) throw InvalidArgument("velocity_norm: image diagonal must be positive");
  const double n = state.mean.tail<4>().norm();
  return std::clamp(n / image_diagonal, 0.0, 1.0);
}

}  // namespace mat
