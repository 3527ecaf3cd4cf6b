#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mat/core.hpp"
#include "mat/image.hpp"
#include "mat/pipeline.hpp"
#include "mat/toolkit/mot_io.hpp"
#include "mat/track.hpp"
#include "mat/warp.hpp"

namespace mat::toolkit {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct OcclusionWindow {
  int target = 0;        // zero-based target index
  FrameIndex start = 0;  // first hidden frame
  int length = 0;
};

enum class CameraMode { kStatic, kPan, kShake };

struct CameraSpec {
  CameraMode mode = CameraMode::kStatic;
  double pan_x = 0.0;  // px/frame for kPan
  double pan_y = 0.0;
  double shake_translation = 0.0;  // std dev of per-frame translation, px
  double shake_rotation_deg = 0.0;  // std dev of per-frame rotation about the frame center
};

struct TextureSpec {
  int components = 24;
  double min_wavelength = 12.0;
  double max_wavelength = 48.0;
};

struct ScenarioSpec {
  int frame_width = 640;
  int frame_height = 360;
  int num_frames = 150;
  int num_targets = 5;
  Range box_height{60.0, 110.0};
  Range aspect{0.35, 0.5};  // width / height
  Range speed{0.5, 2.5};    // px/frame
  double turn_probability = 0.0;  // per target and frame
  Range lifetime{0.0, 0.0};       // frames; {0,0} means the whole sequence
  std::vector<OcclusionWindow> occlusions;
  int random_occlusions_per_target = 0;
  Range occlusion_length{20.0, 40.0};
  CameraSpec camera;
  double detection_noise = 0.0;  // std dev in px on center and size
  double miss_rate = 0.0;
  double false_positives_per_frame = 0.0;
  bool render_images = false;
  TextureSpec texture;

  void validate() const {
    if (frame_width < 8 || frame_height < 8) throw InvalidArgument("scenario: frame smaller than 8x8");
    if (num_frames < 1 || num_targets < 0) throw InvalidArgument("scenario: bad frame or target count");
    if (!(box_height.lo > 0.0) || box_height.hi < box_height.lo) throw InvalidArgument("scenario: bad box_height range");
    if (!(aspect.lo > 0.0) || aspect.hi < aspect.lo) throw InvalidArgument("scenario: bad aspect range");
    if (box_height.hi >= frame_height || box_height.hi * aspect.hi >= frame_width) {
      throw InvalidArgument("scenario: targets larger than the frame");
    }
    if (speed.lo < 0.0 || speed.hi < speed.lo) throw InvalidArgument("scenario: bad speed range");
    for (const auto& o : occlusions) {
      if (o.target < 0 || o.target >= num_targets || o.length < 0) throw InvalidArgument("scenario: bad occlusion");
    }
  }
};

inline void from_json(const nlohmann::json& j, Range& r) {
  r.lo = j.at(0).get<double>();
  r.hi = j.at(1).get<double>();
}

inline void from_json(const nlohmann::json& j, OcclusionWindow& o) {
  o.target = j.at("target").get<int>();
  o.start = j.at("start").get<FrameIndex>();
  o.length = j.at("length").get<int>();
}

inline void from_json(const nlohmann::json& j, CameraSpec& c) {
  const std::string mode = j.value("mode", std::string("static"));
  if (mode == "static") {
    c.mode = CameraMode::kStatic;
  } else if (mode == "pan") {
    c.mode = CameraMode::kPan;
  } else if (mode == "shake") {
    c.mode = CameraMode::kShake;
  } else {
    throw InvalidArgument("scenario: unknown camera mode '" + mode + "'");
  }
  c.pan_x = j.value("pan_x", c.pan_x);
  c.pan_y = j.value("pan_y", c.pan_y);
  c.shake_translation = j.value("shake_translation", c.shake_translation);
  c.shake_rotation_deg = j.value("shake_rotation_deg", c.shake_rotation_deg);
}

inline void from_json(const nlohmann::json& j, TextureSpec& t) {
  t.components = j.value("components", t.components);
  t.min_wavelength = j.value("min_wavelength", t.min_wavelength);
  t.max_wavelength = j.value("max_wavelength", t.max_wavelength);
}

inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  s.frame_width = j.value("frame_width", s.frame_width);
  s.frame_height = j.value("frame_height", s.frame_height);
  s.num_frames = j.value("num_frames", s.num_frames);
  s.num_targets = j.value("num_targets", s.num_targets);
  if (j.contains("box_height")) s.box_height = j.at("box_height").get<Range>();
  if (j.contains("aspect")) s.aspect = j.at("aspect").get<Range>();
  if (j.contains("speed")) s.speed = j.at("speed").get<Range>();
  s.turn_probability = j.value("turn_probability", s.turn_probability);
  if (j.contains("lifetime")) s.lifetime = j.at("lifetime").get<Range>();
  if (j.contains("occlusions")) s.occlusions = j.at("occlusions").get<std::vector<OcclusionWindow>>();
  s.random_occlusions_per_target = j.value("random_occlusions_per_target", s.random_occlusions_per_target);
  if (j.contains("occlusion_length")) s.occlusion_length = j.at("occlusion_length").get<Range>();
  if (j.contains("camera")) s.camera = j.at("camera").get<CameraSpec>();
  s.detection_noise = j.value("detection_noise", s.detection_noise);
  s.miss_rate = j.value("miss_rate", s.miss_rate);
  s.false_positives_per_frame = j.value("false_positives_per_frame", s.false_positives_per_frame);
  s.render_images = j.value("render_images", s.render_images);
  if (j.contains("texture")) s.texture = j.at("texture").get<TextureSpec>();
}

inline ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scenario spec " + path.string());
  try {
    return nlohmann::json::parse(in).get<ScenarioSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("scenario spec " + path.string() + ": " + e.what());
  }
}

// Seeded sum of random plane waves: band-limited and defined everywhere, so
// rendered frames stay textured under any camera motion.
class Texture {
 public:
  Texture(const TextureSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> wave(spec.min_wavelength, spec.max_wavelength);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    double norm = 0.0;
    for (int i = 0; i < spec.components; ++i) {
      const double a = angle(rng);
      const double k = 2.0 * std::numbers::pi / wave(rng);
      waves_.push_back({k * std::cos(a), k * std::sin(a), angle(rng), amp(rng)});
      norm += waves_.back().amplitude * waves_.back().amplitude;
    }
    scale_ = norm > 0.0 ? 55.0 / std::sqrt(norm / 2.0) : 0.0;
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves_) v += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
    return 128.0 + scale_ * v;
  }

  // Frame whose pixel x shows texture point to_texture(x).
  GrayImage render(int width, int height, const AffineWarp& to_texture) const {
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const auto p = to_texture.apply(x, y);
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround((*this)(p[0], p[1])), 0L, 255L));
      }
    }
    return img;
  }

 private:
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves_;
  double scale_ = 0.0;
};

struct HiddenDetection {
  FrameIndex frame = 0;
  TrackId target = 0;
  BoundingBox box;
};

struct SyntheticScenario {
  ScenarioSpec spec;
  std::uint64_t seed = 0;
  std::vector<Trajectory> ground_truth;  // ids are target index + 1
  std::vector<FramePacket> packets;      // frames 1..num_frames, detections only
  std::vector<AffineWarp> warps;         // warps[t-1]: frame t-1 -> t (identity for t = 1)
  std::vector<AffineWarp> to_texture;    // frame t pixel -> texture coordinates
  std::vector<HiddenDetection> hidden;   // detections suppressed by occlusion or misses

  FrameGeometry geometry() const {
    return {static_cast<double>(spec.frame_width), static_cast<double>(spec.frame_height)};
  }

  GrayImage render_frame(FrameIndex t) const {
    return Texture(spec.texture, seed ^ 0x9e3779b97f4a7c15ULL)
        .render(spec.frame_width, spec.frame_height, to_texture.at(static_cast<std::size_t>(t - 1)));
  }

  // Packets carrying the true camera warps, for harnesses that skip alignment.
  std::vector<FramePacket> packets_with_warps() const {
    auto out = packets;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].warp = warps[i];
    return out;
  }

  std::vector<FramePacket> packets_with_images() const {
    auto out = packets;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].image = render_frame(static_cast<FrameIndex>(i + 1));
    return out;
  }
};

inline SyntheticScenario generate(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticScenario sc;
  sc.spec = spec;
  sc.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](const Range& r) { return r.lo + (r.hi - r.lo) * unit(rng); };

  const double fw = spec.frame_width;
  const double fh = spec.frame_height;

  // Camera schedule.
  sc.warps.assign(static_cast<std::size_t>(spec.num_frames), AffineWarp::identity());
  sc.to_texture.assign(static_cast<std::size_t>(spec.num_frames), AffineWarp::identity());
  for (int t = 2; t <= spec.num_frames; ++t) {
    AffineWarp w = AffineWarp::identity();
    if (spec.camera.mode == CameraMode::kPan) {
      w = AffineWarp::translation(spec.camera.pan_x, spec.camera.pan_y);
    } else if (spec.camera.mode == CameraMode::kShake) {
      const double rot = spec.camera.shake_rotation_deg * gauss(rng) * std::numbers::pi / 180.0;
      const double tx = spec.camera.shake_translation * gauss(rng);
      const double ty = spec.camera.shake_translation * gauss(rng);
      w = compose(AffineWarp::translation(tx, ty), AffineWarp::rotation(rot, fw / 2.0, fh / 2.0));
    }
    sc.warps[static_cast<std::size_t>(t - 1)] = w;
    sc.to_texture[static_cast<std::size_t>(t - 1)] =
        compose(sc.to_texture[static_cast<std::size_t>(t - 2)], invert_warp(w));
  }

  // Occlusion windows: explicit plus random.
  std::vector<OcclusionWindow> occlusions = spec.occlusions;

  // Ground truth.
  for (int k = 0; k < spec.num_targets; ++k) {
    const double h = uniform(spec.box_height);
    const double w = h * uniform(spec.aspect);
    FrameIndex birth = 1;
    FrameIndex death = spec.num_frames;
    if (spec.lifetime.hi > 0.0) {
      const int life = std::max(1, static_cast<int>(std::lround(uniform(spec.lifetime))));
      const int latest_start = std::max(1, spec.num_frames - life + 1);
      birth = 1 + static_cast<FrameIndex>(unit(rng) * latest_start);
      birth = std::min<FrameIndex>(birth, latest_start);
      death = std::min<FrameIndex>(spec.num_frames, birth + life - 1);
    }
    CenterBox c{w / 2.0 + unit(rng) * (fw - w), h / 2.0 + unit(rng) * (fh - h), w, h};
    const double heading = unit(rng) * 2.0 * std::numbers::pi;
    double speed = uniform(spec.speed);
    double vx = speed * std::cos(heading);
    double vy = speed * std::sin(heading);

    Trajectory traj;
    traj.id = k + 1;
    for (FrameIndex t = birth; t <= death; ++t) {
      if (t > birth) {
        if (spec.turn_probability > 0.0 && unit(rng) < spec.turn_probability) {
          const double a = unit(rng) * 2.0 * std::numbers::pi;
          speed = uniform(spec.speed);
          vx = speed * std::cos(a);
          vy = speed * std::sin(a);
        }
        if (auto warped = try_warp_center(sc.warps[static_cast<std::size_t>(t - 1)], c)) c = *warped;
        c.cx += vx;
        c.cy += vy;
        // Bounce off the frame edges.
        if (c.cx - c.w / 2.0 < 0.0 || c.cx + c.w / 2.0 > fw) vx = -vx;
        if (c.cy - c.h / 2.0 < 0.0 || c.cy + c.h / 2.0 > fh) vy = -vy;
        c.w = std::min(c.w, fw - 1.0);
        c.h = std::min(c.h, fh - 1.0);
        c.cx = std::clamp(c.cx, c.w / 2.0, fw - c.w / 2.0);
        c.cy = std::clamp(c.cy, c.h / 2.0, fh - c.h / 2.0);
      }
      traj.boxes[t] = HistoryEntry{from_center_form(c), 1.0, false};
    }
    for (int i = 0; i < spec.random_occlusions_per_target; ++i) {
      const int len = static_cast<int>(std::lround(uniform(spec.occlusion_length)));
      const FrameIndex span = death - birth + 1;
      if (span < len + 10) continue;
      const FrameIndex start = birth + 5 + static_cast<FrameIndex>(unit(rng) * static_cast<double>(span - len - 9));
      occlusions.push_back({k, start, len});
    }
    sc.ground_truth.push_back(std::move(traj));
  }

  // Detections.
  sc.packets.resize(static_cast<std::size_t>(spec.num_frames));
  for (int t = 1; t <= spec.num_frames; ++t) sc.packets[static_cast<std::size_t>(t - 1)].frame = t;
  auto occluded = [&](int target, FrameIndex t) {
    return std::any_of(occlusions.begin(), occlusions.end(), [&](const OcclusionWindow& o) {
      return o.target == target && t >= o.start && t < o.start + o.length;
    });
  };
  for (std::size_t k = 0; k < sc.ground_truth.size(); ++k) {
    for (const auto& [t, entry] : sc.ground_truth[k].boxes) {
      const bool missed = spec.miss_rate > 0.0 && unit(rng) < spec.miss_rate;
      if (occluded(static_cast<int>(k), t) || missed) {
        sc.hidden.push_back({t, sc.ground_truth[k].id, entry.box});
        continue;
      }
      BoundingBox box = entry.box;
      if (spec.detection_noise > 0.0) {
        CenterBox c = to_center_form(box);
        c.cx += spec.detection_noise * gauss(rng);
        c.cy += spec.detection_noise * gauss(rng);
        c.w = std::max(2.0, c.w + spec.detection_noise * gauss(rng));
        c.h = std::max(2.0, c.h + spec.detection_noise * gauss(rng));
        box = from_center_form(c);
      }
      sc.packets[static_cast<std::size_t>(t - 1)].detections.push_back(Detection{box, 0.9, t});
    }
  }
  if (spec.false_positives_per_frame > 0.0) {
    std::poisson_distribution<int> count(spec.false_positives_per_frame);
    for (auto& p : sc.packets) {
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        const double h = uniform(spec.box_height);
        const double w = h * uniform(spec.aspect);
        const double x = unit(rng) * (fw - w);
        const double y = unit(rng) * (fh - h);
        p.detections.push_back(Detection{BoundingBox::from_xywh(x, y, w, h), 0.5, p.frame});
      }
    }
  }
  return sc;
}

// Writes det/det.txt, gt/gt.txt, hidden.txt, camera.txt, seqinfo.json and,
// when requested, img/NNNNNN.pgm.
inline void write_scenario(const SyntheticScenario& sc, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "det");
  fs::create_directories(dir / "gt");
  write_detections(sc.packets, dir / "det" / "det.txt");
  write_tracks(sc.ground_truth, dir / "gt" / "gt.txt");
  {
    std::ofstream hidden(dir / "hidden.txt");
    for (const auto& h : sc.hidden) detail::write_line(hidden, h.frame, h.target, h.box, 0.0);
  }
  {
    std::ofstream cam(dir / "camera.txt");
    cam.precision(17);
    for (std::size_t i = 0; i < sc.warps.size(); ++i) {
      cam << (i + 1);
      for (double v : sc.warps[i].m) cam << ',' << v;
      cam << '\n';
    }
  }
  {
    nlohmann::json info{{"frame_width", sc.spec.frame_width},
                        {"frame_height", sc.spec.frame_height},
                        {"num_frames", sc.spec.num_frames},
                        {"seed", sc.seed}};
    std::ofstream out(dir / "seqinfo.json");
    out << info.dump(2) << '\n';
  }
  if (sc.spec.render_images) {
    fs::create_directories(dir / "img");
    for (int t = 1; t <= sc.spec.num_frames; ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.pgm", t);
      write_pgm(sc.render_frame(t), dir / "img" / name);
    }
  }
}

}  // namespace mat::toolkit
