#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>

#include "mat/core.hpp"

namespace mat {

// 2x3 affine map from previous-frame to current-frame pixel coordinates,
// stored row-major: [a11 a12 tx; a21 a22 ty].
struct AffineWarp {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineWarp identity() { return {}; }
  static AffineWarp translation(double tx, double ty) { return {{1.0, 0.0, tx, 0.0, 1.0, ty}}; }
  // Rotation by `radians` about (cx, cy).
  static AffineWarp rotation(double radians, double cx, double cy) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return {{c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy}};
  }

  double a11() const { return m[0]; }
  double a12() const { return m[1]; }
  double tx() const { return m[2]; }
  double a21() const { return m[3]; }
  double a22() const { return m[4]; }
  double ty() const { return m[5]; }

  double det() const { return m[0] * m[4] - m[1] * m[3]; }
  bool is_identity() const { return *this == identity(); }

  // Sanity bound on the linear part; values outside signal a failed alignment.
  bool plausible() const {
    const double d = std::abs(det());
    for (double v : m) {
      if (!std::isfinite(v)) return false;
    }
    return d >= 0.25 && d <= 4.0;
  }

  std::array<double, 2> apply(double x, double y) const {
    return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
  }

  friend bool operator==(const AffineWarp&, const AffineWarp&) = default;
};

// (a ∘ b)(p) = a(b(p))
inline AffineWarp compose(const AffineWarp& a, const AffineWarp& b) {
  return {{a.m[0] * b.m[0] + a.m[1] * b.m[3], a.m[0] * b.m[1] + a.m[1] * b.m[4],
           a.m[0] * b.m[2] + a.m[1] * b.m[5] + a.m[2], a.m[3] * b.m[0] + a.m[4] * b.m[3],
           a.m[3] * b.m[1] + a.m[4] * b.m[4], a.m[3] * b.m[2] + a.m[4] * b.m[5] + a.m[5]}};
}

inline AffineWarp invert_warp(const AffineWarp& w) {
  const double d = w.det();
  if (!std::isfinite(d) || std::abs(d) < 1e-12) throw NumericError("invert_warp: singular linear part");
  const double i11 = w.m[4] / d;
  const double i12 = -w.m[1] / d;
  const double i21 = -w.m[3] / d;
  const double i22 = w.m[0] / d;
  return {{i11, i12, -(i11 * w.m[2] + i12 * w.m[5]), i21, i22, -(i21 * w.m[2] + i22 * w.m[5])}};
}

// Maps both diagonal corners and re-forms the axis-aligned box on them.
// Returns nullopt when the result collapses below `min_extent`.
inline std::optional<BoundingBox> try_warp_box(const AffineWarp& w, const BoundingBox& box,
                                               double min_extent = 1e-2) {
  const auto p1 = w.apply(box.x1, box.y1);
  const auto p2 = w.apply(box.x2, box.y2);
  BoundingBox out{std::min(p1[0], p2[0]), std::min(p1[1], p2[1]), std::max(p1[0], p2[0]),
                  std::max(p1[1], p2[1])};
  if (!out.valid() || out.width() < min_extent || out.height() < min_extent) return std::nullopt;
  return out;
}

inline BoundingBox warp_box(const AffineWarp& w, const BoundingBox& box) {
  auto out = try_warp_box(w, box);
  if (!out) throw NumericError("warp_box: degenerate output box");
  return *out;
}

// Same corner construction expressed in center form. The midpoint of the
// mapped corners is the mapped center, and the extents are |A·(w, h)|.
inline std::optional<CenterBox> try_warp_center(const AffineWarp& w, const CenterBox& c,
                                                double min_extent = 1e-2) {
  const auto ctr = w.apply(c.cx, c.cy);
  const double nw = std::abs(w.m[0] * c.w + w.m[1] * c.h);
  const double nh = std::abs(w.m[3] * c.w + w.m[4] * c.h);
  if (!std::isfinite(ctr[0]) || !std::isfinite(ctr[1]) || !(nw >= min_extent) ||
      !(nh >= min_extent)) {
    return std::nullopt;
  }
  return CenterBox{ctr[0], ctr[1], nw, nh};
}

// One minus the cosine similarity between the flattened warp and the static
// reference [I | 0]. Lies in [0, 2]; 0 exactly for the identity.
inline double camera_intensity(const AffineWarp& w) {
  static constexpr std::array<double, 6> kReference{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  double dot = 0.0;
  double norm_w = 0.0;
  double norm_r = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    dot += w.m[i] * kReference[i];
    norm_w += w.m[i] * w.m[i];
    norm_r += kReference[i] * kReference[i];
  }
  if (!(norm_w > 0.0)) throw NumericError("camera_intensity: zero-norm warp");
  return 1.0 - dot / std::sqrt(norm_w * norm_r);
}

// Warp from frame t-1 to frame t, keyed by t. Frames without an entry are static.
class CameraMotionLog {
 public:
  void record(FrameIndex frame, const AffineWarp& w) { warps_[frame] = w; }

  AffineWarp at(FrameIndex frame) const {
    auto it = warps_.find(frame);
    return it == warps_.end() ? AffineWarp::identity() : it->second;
  }

  std::size_t size() const { return warps_.size(); }

 private:
  std::map<FrameIndex, AffineWarp> warps_;
};

}  // namespace mat
