#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mat/core.hpp"
#include "mat/motion.hpp"

namespace mat {

enum class TrackStatus { kActive, kDeactivated, kFinished };

struct HistoryEntry {
  BoundingBox box;
  double confidence = 1.0;
  bool filled = false;  // produced by gap filling rather than a detection

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// Gap awaiting its backward tracklet: the track re-associated at `frame_b`
// after last being seen at `frame_a`.
struct PendingFill {
  FrameIndex frame_a = 0;
  FrameIndex frame_b = 0;
  BoundingBox box_a;
  KalmanState state_a;
  std::vector<BoundingBox> inertia;  // held predictions, used by the inertia fill mode
};

struct TrackRecord {
  TrackId id = 0;
  TrackStatus status = TrackStatus::kActive;
  std::map<FrameIndex, HistoryEntry> history;
  int deactivated_len = 0;  // consecutive unmatched frames
  double window = 0.0;      // latest reconnection window, in frames
  KalmanState motion;

  // Set while deactivated: the last associated frame and the filter state there.
  std::optional<FrameIndex> deactivation_frame;
  std::optional<KalmanState> deactivation_state;
  // Speculative predictions made while deactivated; never part of the output
  // unless the track reconnects.
  std::vector<BoundingBox> provisional;
  std::optional<PendingFill> pending_fill;

  FrameIndex last_frame() const { return history.empty() ? -1 : history.rbegin()->first; }
  BoundingBox last_box() const { return history.rbegin()->second.box; }

  void deactivate() {
    if (status != TrackStatus::kActive) throw InvalidArgument("deactivate: track is not active");
    status = TrackStatus::kDeactivated;
    deactivation_frame = last_frame();
    deactivation_state = motion;
    deactivated_len = 0;
    provisional.clear();
  }

  void reactivate() {
    if (status != TrackStatus::kDeactivated) throw InvalidArgument("reactivate: track is not deactivated");
    status = TrackStatus::kActive;
    deactivated_len = 0;
    deactivation_frame.reset();
    deactivation_state.reset();
    provisional.clear();
  }

  void finish() {
    if (status == TrackStatus::kFinished) return;
    status = TrackStatus::kFinished;
    deactivation_frame.reset();
    deactivation_state.reset();
    provisional.clear();
  }
};

// A finished track as emitted to output files.
struct Trajectory {
  TrackId id = 0;
  std::map<FrameIndex, HistoryEntry> boxes;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace mat
