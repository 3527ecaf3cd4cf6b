#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mat/assign.hpp"
#include "mat/core.hpp"
#include "mat/drc.hpp"
#include "mat/ecc.hpp"
#include "mat/gate3dii.hpp"
#include "mat/image.hpp"
#include "mat/motion.hpp"
#include "mat/track.hpp"
#include "mat/warp.hpp"

namespace mat {

struct FrameGeometry {
  double width = 0.0;
  double height = 0.0;

  double diagonal() const { return std::hypot(width, height); }
};

struct FramePacket {
  FrameIndex frame = 0;
  std::vector<Detection> detections;
  std::optional<GrayImage> image;
  // Known camera motion into this frame; takes precedence over image alignment.
  std::optional<AffineWarp> warp;
};

struct FrameEvents {
  FrameIndex frame = 0;
  AffineWarp warp;
  double camera_intensity = 0.0;
  bool ecc_fallback = false;
  std::vector<std::pair<TrackId, std::size_t>> matches;  // (track id, detection index in B_t)
  std::vector<TrackId> reconnected;
  std::vector<TrackId> spawned;
  std::vector<TrackId> expired;
  std::vector<std::pair<TrackId, std::size_t>> fills;  // (track id, filled box count)
};

struct TrackStore {
  std::vector<TrackRecord> tracks;  // creation order
  TrackId next_id = 1;
  CameraMotionLog warps;
  std::optional<FrameIndex> last_frame;
  std::optional<GrayImage> last_image;
};

// Replaces B_t on the public-detection path: receives the predicted track boxes
// and raw detections and returns the refined detections.
using DetectionRefiner =
    std::function<std::vector<Detection>(const std::vector<BoundingBox>&, const std::vector<Detection>&)>;

// Per-sequence tracking loop. One instance owns one TrackStore and is not
// thread-safe; run independent sequences on independent instances.
class Tracker {
 public:
  Tracker(TrackerConfig config, FrameGeometry geometry, MotionParams motion = {}, EccParams ecc = {})
      : config_(std::move(config)), geometry_(geometry), motion_(std::move(motion)), ecc_(ecc) {
    config_.validate();
    ecc_.validate();
    if (!(geometry_.width > 0.0) || !(geometry_.height > 0.0)) {
      throw InvalidArgument("Tracker: frame geometry must be positive");
    }
    grid_ = CellGrid{config_.grid_m, config_.grid_n, geometry_.width, geometry_.height};
    grid_.validate();
  }

  void set_refiner(DetectionRefiner refiner) { refiner_ = std::move(refiner); }

  const TrackerConfig& config() const { return config_; }
  const TrackStore& store() const { return store_; }

  FrameEvents step(const FramePacket& packet) {
    if (finalized_) throw InvalidArgument("step: tracker already finalized");
    const FrameIndex t = packet.frame;
    if (store_.last_frame && t != *store_.last_frame + 1) {
      throw InvalidArgument("step: expected frame " + std::to_string(*store_.last_frame + 1) + ", got " +
                            std::to_string(t));
    }
    for (const auto& d : packet.detections) {
      if (d.frame != t) throw InvalidArgument("step: detection frame index does not match packet");
      if (!d.box.valid()) throw InvalidArgument("step: invalid detection box in frame " + std::to_string(t));
    }

    FrameEvents ev;
    ev.frame = t;

    // (1) Camera motion.
    if (packet.warp) ev.warp = *packet.warp;
    if (packet.image) {
      const GrayImage& img = *packet.image;
      if (img.width() != static_cast<int>(geometry_.width) || img.height() != static_cast<int>(geometry_.height)) {
        throw InvalidArgument("step: image size does not match frame geometry in frame " + std::to_string(t));
      }
      if (!packet.warp && store_.last_image && store_.last_frame && *store_.last_frame == t - 1) {
        const EccResult r = ecc_align(*store_.last_image, img, ecc_);
        if (r.ok()) {
          ev.warp = r.warp;
        } else {
          ev.ecc_fallback = true;
        }
      }
      store_.last_image = img;
    } else {
      store_.last_image.reset();
    }
    store_.warps.record(t, ev.warp);
    ev.camera_intensity = camera_intensity(ev.warp);
    store_.last_frame = t;

    // (2) Predict every live track.
    std::vector<std::size_t> live;
    std::vector<KalmanState> predicted;
    std::vector<BoundingBox> predicted_boxes;
    for (std::size_t i = 0; i < store_.tracks.size(); ++i) {
      if (store_.tracks[i].status == TrackStatus::kFinished) continue;
      live.push_back(i);
      predicted.push_back(iml_predict_or_static(store_.tracks[i].motion, ev.warp, motion_));
      predicted_boxes.push_back(predicted.back().box());
    }

    // (3) Observations for this frame.
    std::vector<Detection> observations;
    for (const auto& d : packet.detections) {
      if (d.confidence >= config_.confidence_floor) observations.push_back(d);
    }
    if (refiner_) observations = refiner_(predicted_boxes, observations);
    std::vector<BoundingBox> obs_boxes;
    obs_boxes.reserve(observations.size());
    for (const auto& d : observations) obs_boxes.push_back(d.box);

    // (4) Gate and associate.
    const GatedCost cost = config_.gating_mode == GatingMode::kIntegralImage
                               ? gated_cost(predicted_boxes, obs_boxes, grid_, config_)
                               : full_iou_cost(predicted_boxes, obs_boxes, config_);
    const Assignment assignment = km_solve(cost);

    // (5, 6) Matched tracks.
    for (const auto& [row, col] : assignment.matches) {
      TrackRecord& track = store_.tracks[live[row]];
      const Detection& det = observations[col];
      if (track.status == TrackStatus::kDeactivated) {
        PendingFill pending;
        pending.frame_a = *track.deactivation_frame;
        pending.frame_b = t;
        pending.box_a = track.history.at(pending.frame_a).box;
        pending.state_a = *track.deactivation_state;
        pending.inertia = track.provisional;
        track.reactivate();
        track.pending_fill = std::move(pending);
        ev.reconnected.push_back(track.id);
      }
      track.motion = update_or_reset(predicted[row], det.box);
      track.history[t] = HistoryEntry{det.box, det.confidence, false};
      ev.matches.emplace_back(track.id, col);
      if (track.pending_fill &&
          t - track.pending_fill->frame_b + 1 >= static_cast<FrameIndex>(config_.backward_tracklet_len)) {
        resolve_fill(track, ev);
      }
    }

    // (7) Unmatched tracks: hold or expire.
    for (std::size_t row : assignment.unmatched_tracks) {
      TrackRecord& track = store_.tracks[live[row]];
      if (track.status == TrackStatus::kActive) {
        if (track.pending_fill) resolve_fill(track, ev);
        track.deactivate();
      }
      track.window = window_for(predicted[row], ev.camera_intensity);
      if (static_cast<double>(track.deactivated_len) > track.window) {
        track.finish();
        ev.expired.push_back(track.id);
      } else {
        hold_prediction(track, ev.warp, motion_);
      }
    }

    // (8) Spawn.
    for (std::size_t col : assignment.unmatched_detections) {
      TrackRecord track;
      track.id = store_.next_id++;
      track.motion = km_init(observations[col].box, motion_);
      track.history[t] = HistoryEntry{observations[col].box, observations[col].confidence, false};
      ev.spawned.push_back(track.id);
      store_.tracks.push_back(std::move(track));
    }
    return ev;
  }

  // Closes every track and returns trajectories with at least min_track_len
  // committed frames, ordered by id.
  std::vector<Trajectory> finalize() {
    FrameEvents ignored;
    for (auto& track : store_.tracks) {
      if (track.pending_fill) resolve_fill(track, ignored);
      track.finish();
    }
    finalized_ = true;
    std::vector<Trajectory> out;
    for (const auto& track : store_.tracks) {
      if (track.history.size() < static_cast<std::size_t>(config_.min_track_len)) continue;
      out.push_back(Trajectory{track.id, track.history});
    }
    return out;
  }

 private:
  KalmanState update_or_reset(const KalmanState& predicted, const BoundingBox& box) const {
    try {
      return km_update(predicted, box, motion_);
    } catch (const NumericError&) {
      return km_init(box, motion_);
    }
  }

  double window_for(const KalmanState& predicted, double i_cam) const {
    if (config_.window_mode == WindowMode::kFixed) return static_cast<double>(config_.l_max);
    return reconnection_window(i_cam, velocity_norm(predicted, geometry_.diagonal()),
                               ReconnectionPolicy{config_.l_max, config_.alpha});
  }

  // Fills the gap of a reconnected track using whatever tracklet after B exists.
  void resolve_fill(TrackRecord& track, FrameEvents& ev) {
    const PendingFill pending = std::move(*track.pending_fill);
    track.pending_fill.reset();

    std::vector<BoundingBox> boxes;
    if (config_.fill_mode == FillMode::kInertia) {
      boxes = pending.inertia;
    } else {
      FillRequest req;
      req.frame_a = pending.frame_a;
      req.frame_b = pending.frame_b;
      req.box_a = pending.box_a;
      req.state_a = pending.state_a;
      for (auto it = track.history.find(pending.frame_b);
           it != track.history.end() && req.post_b_tracklet.size() < static_cast<std::size_t>(config_.backward_tracklet_len);
           ++it) {
        req.post_b_tracklet.push_back(it->second.box);
      }
      req.box_b = req.post_b_tracklet.front();
      const FrameIndex last = pending.frame_b + static_cast<FrameIndex>(req.post_b_tracklet.size()) - 1;
      for (FrameIndex f = pending.frame_a + 1; f <= last; ++f) req.warps.push_back(store_.warps.at(f));
      boxes = fill_fragment(req, motion_).boxes;
    }
    FrameIndex f = pending.frame_a + 1;
    for (const auto& b : boxes) {
      if (f >= pending.frame_b) break;
      track.history[f++] = HistoryEntry{b, -1.0, true};
    }
    ev.fills.emplace_back(track.id, boxes.size());
  }

  TrackerConfig config_;
  FrameGeometry geometry_;
  MotionParams motion_;
  EccParams ecc_;
  CellGrid grid_;
  TrackStore store_;
  DetectionRefiner refiner_;
  bool finalized_ = false;
};

// Runs a whole sequence through a fresh tracker.
inline std::vector<Trajectory> run_sequence(const std::vector<FramePacket>& packets, const TrackerConfig& config,
                                            const FrameGeometry& geometry, const MotionParams& motion = {},
                                            const EccParams& ecc = {}) {
  Tracker tracker(config, geometry, motion, ecc);
  for (const auto& p : packets) tracker.step(p);
  return tracker.finalize();
}

}  // namespace mat
