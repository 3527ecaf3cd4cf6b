#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include "mat/drc.hpp"
#include "mat/gate3dii.hpp"
#include "mat/motion.hpp"
#include "mat/pipeline.hpp"
#include "mat/toolkit/evaluate.hpp"
#include "mat/toolkit/synth.hpp"

namespace mat::toolkit {

// ---------------------------------------------------------------------------
// Gating speed: 3D integral image vs. fully connected IoU filter.

struct GatingBenchRow {
  std::size_t count = 0;
  int frames = 0;
  double integral_ms = 0.0;  // mean per-frame time, 3DII path
  double pairwise_ms = 0.0;  // mean per-frame time, fully connected path
  bool identical = true;     // admissible sets agreed on every frame

  double speedup() const { return integral_ms > 0.0 ? pairwise_ms / integral_ms : 0.0; }
};

struct GatingBenchOptions {
  double frame_width = 1920.0;
  double frame_height = 1080.0;
  double min_frame_ms = 250.0;  // per count, keep sampling frames until this much work is timed
  int min_frames = 5;
  std::uint64_t seed = 7;
};

// Random pedestrian-sized detections; tracks are jittered copies, shuffled.
inline void random_frame(std::size_t count, const GatingBenchOptions& opt, std::mt19937_64& rng,
                         std::vector<BoundingBox>& tracks, std::vector<BoundingBox>& detections) {
  std::uniform_real_distribution<double> height(40.0, 200.0);
  std::uniform_real_distribution<double> aspect(0.35, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.15);
  tracks.clear();
  detections.clear();
  for (std::size_t i = 0; i < count; ++i) {
    const double h = height(rng);
    const double w = h * aspect(rng);
    const double x = unit(rng) * (opt.frame_width - w);
    const double y = unit(rng) * (opt.frame_height - h);
    detections.push_back(BoundingBox::from_xywh(x, y, w, h));
    tracks.push_back(BoundingBox::from_xywh(x + jitter(rng) * w, y + jitter(rng) * h, w, h));
  }
  std::shuffle(tracks.begin(), tracks.end(), rng);
}

inline std::vector<GatingBenchRow> bench_gating(const std::vector<std::size_t>& counts,
                                                const GatingBenchOptions& opt = {}) {
  using Clock = std::chrono::steady_clock;
  const TrackerConfig config;
  const CellGrid grid{config.grid_m, config.grid_n, opt.frame_width, opt.frame_height};
  std::mt19937_64 rng(opt.seed);
  std::vector<GatingBenchRow> rows;
  std::vector<BoundingBox> tracks, dets;
  for (std::size_t count : counts) {
    if (count == 0) throw InvalidArgument("bench_gating: counts must be positive");
    GatingBenchRow row;
    row.count = count;
    double integral_total = 0.0, pairwise_total = 0.0;
    // Warm-up frame, untimed.
    random_frame(count, opt, rng, tracks, dets);
    (void)gated_cost(tracks, dets, grid, config);
    (void)full_iou_cost(tracks, dets, config);
    while (row.frames < opt.min_frames || integral_total + pairwise_total < opt.min_frame_ms) {
      random_frame(count, opt, rng, tracks, dets);
      const auto t0 = Clock::now();
      const GatedCost a = gated_cost(tracks, dets, grid, config);
      const auto t1 = Clock::now();
      const GatedCost b = full_iou_cost(tracks, dets, config);
      const auto t2 = Clock::now();
      integral_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
      pairwise_total += std::chrono::duration<double, std::milli>(t2 - t1).count();
      row.identical = row.identical && (a == b);
      ++row.frames;
    }
    row.integral_ms = integral_total / row.frames;
    row.pairwise_ms = pairwise_total / row.frames;
    rows.push_back(row);
  }
  return rows;
}

inline void write_gating_csv(const std::vector<GatingBenchRow>& rows, std::ostream& out) {
  out << "count,frames,integral_ms,pairwise_ms,speedup,identical\n";
  for (const auto& r : rows) {
    out << r.count << ',' << r.frames << ',' << r.integral_ms << ',' << r.pairwise_ms << ',' << r.speedup() << ','
        << (r.identical ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Gap filling: cyclic pseudo-observation filling vs. inertia predictions on a
// target that turns while hidden.

struct TurnScenario {
  FrameIndex frame_a = 0;
  FrameIndex frame_b = 0;
  std::vector<BoundingBox> truth;       // frames 1..frame_b + tracklet - 1
  std::vector<BoundingBox> observed;    // noisy boxes, same frames (gap entries unused)
  std::vector<AffineWarp> warps;        // warps[t-1]: frame t-1 -> t
};

enum class TurnProfile {
  kGradual,  // heading rotates at a constant rate while hidden
  kSharp,    // one instantaneous turn halfway through the gap
};

struct TurnScenarioOptions {
  TurnProfile profile = TurnProfile::kGradual;
  int frames_before = 30;
  int gap_min = 20;
  int gap_max = 40;
  double speed_min = 2.0;
  double speed_max = 4.0;
  double turn_min_deg = 30.0;
  double turn_max_deg = 90.0;
  double noise = 0.5;
  int tracklet = 3;
};

inline TurnScenario make_turn_scenario(std::uint64_t seed, const TurnScenarioOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  TurnScenario sc;
  const int gap = static_cast<int>(std::lround(in(opt.gap_min, opt.gap_max)));
  sc.frame_a = opt.frames_before;
  sc.frame_b = sc.frame_a + gap + 1;
  const FrameIndex turn_at = sc.frame_a + (gap + 1) / 2;
  const FrameIndex last = sc.frame_b + opt.tracklet - 1;

  const double h = in(60.0, 110.0);
  const double w = h * in(0.35, 0.5);
  const double speed = in(opt.speed_min, opt.speed_max);
  const double heading = in(0.0, 2.0 * std::numbers::pi);
  const double turn = (unit(rng) < 0.5 ? -1.0 : 1.0) * in(opt.turn_min_deg, opt.turn_max_deg) * std::numbers::pi / 180.0;
  double cx = 0.0, cy = 0.0;
  for (FrameIndex t = 1; t <= last; ++t) {
    if (t > 1) {
      double a = heading;
      if (opt.profile == TurnProfile::kSharp) {
        a = t <= turn_at ? heading : heading + turn;
      } else if (t > sc.frame_a) {
        const double progress = std::min(1.0, static_cast<double>(t - sc.frame_a) / static_cast<double>(gap + 1));
        a = heading + turn * progress;
      }
      cx += speed * std::cos(a);
      cy += speed * std::sin(a);
    }
    const BoundingBox truth = from_center_form({cx, cy, w, h});
    sc.truth.push_back(truth);
    sc.observed.push_back(from_center_form(
        {cx + opt.noise * gauss(rng), cy + opt.noise * gauss(rng), w + opt.noise * gauss(rng), h + opt.noise * gauss(rng)}));
    sc.warps.push_back(AffineWarp::identity());
  }
  return sc;
}

inline FillRequest fill_request_for(const TurnScenario& sc, int tracklet, const MotionParams& params = {}) {
  KalmanState state = km_init(sc.observed[0], params);
  for (FrameIndex t = 2; t <= sc.frame_a; ++t) {
    state = km_update(iml_predict(state, sc.warps[static_cast<std::size_t>(t - 1)], params),
                      sc.observed[static_cast<std::size_t>(t - 1)], params);
  }
  FillRequest req;
  req.frame_a = sc.frame_a;
  req.frame_b = sc.frame_b;
  req.box_a = sc.observed[static_cast<std::size_t>(sc.frame_a - 1)];
  req.box_b = sc.observed[static_cast<std::size_t>(sc.frame_b - 1)];
  req.state_a = state;
  for (int i = 0; i < tracklet; ++i) {
    const auto idx = static_cast<std::size_t>(sc.frame_b - 1 + i);
    if (idx < sc.observed.size()) req.post_b_tracklet.push_back(sc.observed[idx]);
  }
  const FrameIndex last = sc.frame_b + static_cast<FrameIndex>(req.post_b_tracklet.size()) - 1;
  for (FrameIndex f = sc.frame_a + 1; f <= last; ++f) req.warps.push_back(sc.warps[static_cast<std::size_t>(f - 1)]);
  return req;
}

struct FillFrameRow {
  int scenario = 0;
  FrameIndex offset = 0;  // frames after A
  double iou_inertia = 0.0;
  double iou_cyclic = 0.0;
  double iou_linear = 0.0;
};

struct FillScenarioSummary {
  int scenario = 0;
  std::size_t gap = 0;
  double mean_inertia = 0.0;
  double mean_cyclic = 0.0;
  double mean_linear = 0.0;
};

struct FillBench {
  std::vector<FillFrameRow> rows;
  std::vector<FillScenarioSummary> summaries;

  int cyclic_wins() const {
    int n = 0;
    for (const auto& s : summaries) n += s.mean_cyclic > s.mean_inertia ? 1 : 0;
    return n;
  }
  double aggregate_margin() const {
    double d = 0.0;
    for (const auto& s : summaries) d += s.mean_cyclic - s.mean_inertia;
    return summaries.empty() ? 0.0 : d / static_cast<double>(summaries.size());
  }
};

inline FillBench bench_fill_comparison(int scenarios, std::uint64_t seed, const TurnScenarioOptions& opt = {}) {
  FillBench out;
  for (int s = 0; s < scenarios; ++s) {
    const TurnScenario sc = make_turn_scenario(seed + static_cast<std::uint64_t>(s), opt);
    const FillRequest req = fill_request_for(sc, opt.tracklet);
    const FillResult cyclic_result = fill_fragment(req);
    const auto& cyclic = cyclic_result.boxes;
    const auto inertia = inertia_fill(req);
    FillScenarioSummary sum;
    sum.scenario = s;
    sum.gap = cyclic.size();
    for (std::size_t i = 0; i < cyclic.size(); ++i) {
      const BoundingBox& truth = sc.truth[static_cast<std::size_t>(sc.frame_a) + i];
      FillFrameRow row{s, static_cast<FrameIndex>(i + 1), iou(inertia[i], truth), iou(cyclic[i], truth),
                       iou(cyclic_result.linear[i], truth)};
      sum.mean_inertia += row.iou_inertia;
      sum.mean_cyclic += row.iou_cyclic;
      sum.mean_linear += row.iou_linear;
      out.rows.push_back(row);
    }
    sum.mean_inertia /= static_cast<double>(sum.gap);
    sum.mean_cyclic /= static_cast<double>(sum.gap);
    sum.mean_linear /= static_cast<double>(sum.gap);
    out.summaries.push_back(sum);
  }
  return out;
}

inline void write_fill_csv(const FillBench& bench, std::ostream& out) {
  out << "scenario,offset,iou_inertia,iou_cyclic,iou_linear\n";
  for (const auto& r : bench.rows) {
    out << r.scenario << ',' << r.offset << ',' << r.iou_inertia << ',' << r.iou_cyclic << ',' << r.iou_linear << '\n';
  }
}

// ---------------------------------------------------------------------------
// Reconnection window sweep: dynamic vs. fixed window MOTA over L_max.

struct WindowSweepRow {
  int l_max = 0;
  double mota_dynamic = 0.0;
  double mota_fixed = 0.0;
  double idf1_dynamic = 0.0;
  double idf1_fixed = 0.0;
};

// Crowded scene under a shaking camera: fast targets that turn often, appear
// and disappear, and get occluded for up to 60 frames.
inline ScenarioSpec window_sweep_scenario() {
  ScenarioSpec s;
  s.frame_width = 640;
  s.frame_height = 360;
  s.num_frames = 300;
  s.num_targets = 25;
  s.box_height = {50.0, 90.0};
  s.speed = {3.0, 8.0};
  s.turn_probability = 0.05;
  s.lifetime = {40.0, 150.0};
  s.random_occlusions_per_target = 1;
  s.occlusion_length = {10.0, 60.0};
  s.camera.mode = CameraMode::kShake;
  s.camera.shake_translation = 2.0;
  s.camera.shake_rotation_deg = 0.2;
  s.detection_noise = 1.0;
  s.miss_rate = 0.02;
  return s;
}

inline std::vector<WindowSweepRow> bench_window_sweep(const std::vector<int>& l_max_values, int scenarios,
                                                      std::uint64_t seed,
                                                      const ScenarioSpec& spec = window_sweep_scenario()) {
  std::vector<SyntheticScenario> suite;
  for (int s = 0; s < scenarios; ++s) suite.push_back(generate(spec, seed + static_cast<std::uint64_t>(s)));

  std::vector<WindowSweepRow> rows;
  for (int l_max : l_max_values) {
    WindowSweepRow row;
    row.l_max = l_max;
    for (const WindowMode mode : {WindowMode::kDynamic, WindowMode::kFixed}) {
      std::vector<SequenceMetrics> per_seq;
      for (const auto& sc : suite) {
        TrackerConfig cfg;
        cfg.l_max = l_max;
        cfg.window_mode = mode;
        per_seq.push_back(evaluate_sequence(run_sequence(sc.packets_with_warps(), cfg, sc.geometry()), sc.ground_truth));
      }
      const EvalReport rep = aggregate(std::move(per_seq));
      if (mode == WindowMode::kDynamic) {
        row.mota_dynamic = rep.mota;
        row.idf1_dynamic = rep.idf1;
      } else {
        row.mota_fixed = rep.mota;
        row.idf1_fixed = rep.idf1;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_window_csv(const std::vector<WindowSweepRow>& rows, std::ostream& out) {
  out << "l_max,mota_dynamic,mota_fixed,idf1_dynamic,idf1_fixed\n";
  for (const auto& r : rows) {
    out << r.l_max << ',' << r.mota_dynamic << ',' << r.mota_fixed << ',' << r.idf1_dynamic << ',' << r.idf1_fixed
        << '\n';
  }
}

}  // namespace mat::toolkit
