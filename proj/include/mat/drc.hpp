#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mat/core.hpp"
#include "mat/motion.hpp"
#include "mat/track.hpp"
#include "mat/warp.hpp"

namespace mat {

struct ReconnectionPolicy {
  int l_max = 120;
  double alpha = 0.95;

  void validate() const {
    if (l_max <= 0) throw InvalidArgument("ReconnectionPolicy: l_max must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("ReconnectionPolicy: alpha must lie in [0, 1]");
  }
};

// L_rec = L_max * exp(-(alpha * I_cam + (1 - alpha) * |V|)), with I_cam clamped to [0, 1].
// A deactivated track expires once its deactivated length strictly exceeds this.
inline double reconnection_window(double i_cam, double v_norm, const ReconnectionPolicy& policy) {
  if (!(v_norm >= 0.0 && v_norm <= 1.0)) throw InvalidArgument("reconnection_window: v_norm must lie in [0, 1]");
  const double cam = std::clamp(i_cam, 0.0, 1.0);
  return policy.l_max * std::exp(-(policy.alpha * cam + (1.0 - policy.alpha) * v_norm));
}

// Everything needed to fill the frames strictly between A and B.
struct FillRequest {
  FrameIndex frame_a = 0;
  FrameIndex frame_b = 0;
  BoundingBox box_a;
  BoundingBox box_b;
  KalmanState state_a;
  // Associated boxes at frames B, B+1, ...; at least one.
  std::vector<BoundingBox> post_b_tracklet;
  // warps[i] carries frame A+i to frame A+i+1. Missing entries are identity.
  std::vector<AffineWarp> warps;

  AffineWarp warp_into(FrameIndex frame) const {
    const auto i = frame - frame_a - 1;
    if (i < 0 || i >= static_cast<FrameIndex>(warps.size())) return AffineWarp::identity();
    return warps[static_cast<std::size_t>(i)];
  }

  void validate() const {
    if (frame_b <= frame_a + 1) throw InvalidArgument("FillRequest: no missing frame between A and B");
    if (post_b_tracklet.empty()) throw InvalidArgument("FillRequest: empty backward tracklet");
    if (!box_a.valid() || !box_b.valid()) throw InvalidArgument("FillRequest: invalid endpoint box");
  }
};

struct FillResult {
  std::vector<BoundingBox> boxes;    // final fragment, forward order
  std::vector<BoundingBox> linear;   // linear initialization
  std::vector<BoundingBox> forward;  // forward-pass posteriors
  int fallbacks = 0;                 // frames that reverted to the linear box
};

// Uniform interpolation of center position and scale for frames (a, b).
inline std::vector<BoundingBox> linear_fill(FrameIndex frame_a, const BoundingBox& box_a, FrameIndex frame_b,
                                            const BoundingBox& box_b) {
  std::vector<BoundingBox> out;
  if (frame_b <= frame_a + 1) return out;
  const CenterBox ca = to_center_form(box_a);
  const CenterBox cb = to_center_form(box_b);
  const double span = static_cast<double>(frame_b - frame_a);
  out.reserve(static_cast<std::size_t>(frame_b - frame_a - 1));
  for (FrameIndex t = frame_a + 1; t < frame_b; ++t) {
    const double f = static_cast<double>(t - frame_a) / span;
    out.push_back(from_center_form({ca.cx + f * (cb.cx - ca.cx), ca.cy + f * (cb.cy - ca.cy),
                                    ca.w + f * (cb.w - ca.w), ca.h + f * (cb.h - ca.h)}));
  }
  return out;
}

// Predictions from `state_a` with no observation, one per frame in (a, b).
inline std::vector<BoundingBox> inertia_fill(const FillRequest& req, const MotionParams& params = {}) {
  std::vector<BoundingBox> out;
  KalmanState state = req.state_a;
  for (FrameIndex t = req.frame_a + 1; t < req.frame_b; ++t) {
    state = iml_predict_or_static(state, req.warp_into(t), params);
    out.push_back(state.box());
  }
  return out;
}

// Cyclic pseudo-observation filling:
//   1. linear initialization between the two endpoint boxes;
//   2. forward pass from the model at A, updated with the linear boxes;
//   3. a backward model trained on the tracklet after B in reverse time, run
//      from B back to A and updated with the forward-pass boxes.
// The backward posteriors, in forward order, form the fragment.
inline FillResult fill_fragment(const FillRequest& req, const MotionParams& params = {}) {
  req.validate();
  FillResult res;
  res.linear = linear_fill(req.frame_a, req.box_a, req.frame_b, req.box_b);
  const std::size_t gap = res.linear.size();

  res.forward.resize(gap);
  KalmanState state = req.state_a;
  for (std::size_t i = 0; i < gap; ++i) {
    const FrameIndex t = req.frame_a + 1 + static_cast<FrameIndex>(i);
    try {
      state = km_update(iml_predict_or_static(state, req.warp_into(t), params), res.linear[i], params);
      res.forward[i] = state.box();
    } catch (const Error&) {
      ++res.fallbacks;
      res.forward[i] = res.linear[i];
      state = km_init(res.linear[i], params);
    }
  }

  // Backward model: consume the tracklet from its latest box down to B. Each
  // step runs against time, so it uses the inverse of the warp into the later frame.
  const auto& tracklet = req.post_b_tracklet;
  KalmanState back = km_init(tracklet.back(), params);
  for (std::size_t j = tracklet.size() - 1; j-- > 0;) {
    const FrameIndex later = req.frame_b + static_cast<FrameIndex>(j) + 1;
    try {
      back = km_update(iml_predict_or_static(back, invert_warp(req.warp_into(later)), params), tracklet[j],
                       params);
    } catch (const Error&) {
      back = km_init(tracklet[j], params);
    }
  }

  res.boxes.resize(gap);
  for (std::size_t i = gap; i-- > 0;) {
    const FrameIndex t = req.frame_a + 1 + static_cast<FrameIndex>(i);
    try {
      back = km_update(iml_predict_or_static(back, invert_warp(req.warp_into(t + 1)), params), res.forward[i],
                       params);
      const BoundingBox b = back.box();
      if (!b.valid()) throw NumericError("fill_fragment: degenerate backward box");
      res.boxes[i] = b;
    } catch (const Error&) {
      ++res.fallbacks;
      res.boxes[i] = res.linear[i];
      back = km_init(res.linear[i], params);
    }
  }
  return res;
}

// Advances a deactivated track by one speculative prediction.
inline void hold_prediction(TrackRecord& track, const AffineWarp& warp, const MotionParams& params = {}) {
  if (track.status != TrackStatus::kDeactivated) throw InvalidArgument("hold_prediction: track is not deactivated");
  track.motion = iml_predict_or_static(track.motion, warp, params);
  track.provisional.push_back(track.motion.box());
  ++track.deactivated_len;
}

}  // namespace mat
