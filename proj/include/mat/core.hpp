#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mat {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed inputs (bad boxes, bad config, out-of-order frames).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised when a numeric routine degenerates (singular systems, collapsed boxes).
class NumericError : public Error {
 public:
  using Error::Error;
};

using FrameIndex = std::int64_t;
using TrackId = std::int64_t;

struct CenterBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Axis-aligned box in corner form. Coordinates are never clipped to the image.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x2 > x1 && y2 > y1;
  }

  static BoundingBox from_xywh(double x, double y, double w, double h) {
    return {x, y, x + w, y + h};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline CenterBox to_center_form(const BoundingBox& box) {
  if (!box.valid()) throw InvalidArgument("to_center_form: box has non-positive extent");
  return {(box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0, box.width(), box.height()};
}

inline BoundingBox from_center_form(const CenterBox& c) {
  if (!(c.w > 0.0) || !(c.h > 0.0)) {
    throw InvalidArgument("from_center_form: width and height must be positive");
  }
  return {c.cx - c.w / 2.0, c.cy - c.h / 2.0, c.cx + c.w / 2.0, c.cy + c.h / 2.0};
}

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
  FrameIndex frame = 0;
};

enum class WindowMode { kDynamic, kFixed };
enum class GatingMode { kIntegralImage, kFullyConnected };
enum class FillMode { kCyclic, kInertia };

struct TrackerConfig {
  int l_max = 120;
  double alpha = 0.95;
  int grid_m = 16;  // horizontal cells
  int grid_n = 8;   // vertical cells
  double iou_gate = 0.3;
  int min_track_len = 5;
  int backward_tracklet_len = 3;
  double box_extension = 1.0;
  double confidence_floor = 0.0;

  // Harness toggles used by the benchmark experiments.
  WindowMode window_mode = WindowMode::kDynamic;
  GatingMode gating_mode = GatingMode::kIntegralImage;
  FillMode fill_mode = FillMode::kCyclic;

  void validate() const {
    if (l_max <= 0) throw InvalidArgument("l_max must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    if (grid_m < 1 || grid_n < 1) throw InvalidArgument("grid dimensions must be >= 1");
    if (!(iou_gate >= 0.0 && iou_gate <= 1.0)) throw InvalidArgument("iou_gate must lie in [0, 1]");
    if (min_track_len < 0) throw InvalidArgument("min_track_len must be non-negative");
    if (backward_tracklet_len < 1) throw InvalidArgument("backward_tracklet_len must be >= 1");
    if (!(box_extension >= 1.0)) throw InvalidArgument("box_extension must be >= 1");
  }
};

}  // namespace mat
