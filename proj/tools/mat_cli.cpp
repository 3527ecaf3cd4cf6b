// Command-line front end: track, eval, synth, bench-gating, bench-filling.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mat/mat.hpp"
#include "mat/toolkit/bench.hpp"
#include "mat/toolkit/evaluate.hpp"
#include "mat/toolkit/mot_io.hpp"
#include "mat/toolkit/synth.hpp"

namespace fs = std::filesystem;
using namespace mat;

namespace {

// Accepts a detection file, or a sequence directory holding det/det.txt or det.txt.
fs::path resolve_file(const fs::path& p, const std::vector<fs::path>& candidates) {
  if (fs::is_regular_file(p)) return p;
  if (fs::is_directory(p)) {
    for (const auto& c : candidates) {
      if (fs::is_regular_file(p / c)) return p / c;
    }
  }
  throw InvalidArgument("no input file found at " + p.string());
}

std::optional<FrameGeometry> geometry_from_seqinfo(const fs::path& det_file) {
  for (fs::path dir = det_file.parent_path(); !dir.empty(); dir = dir.parent_path()) {
    const fs::path info = dir / "seqinfo.json";
    if (fs::is_regular_file(info)) {
      std::ifstream in(info);
      const auto j = nlohmann::json::parse(in);
      return FrameGeometry{j.at("frame_width").get<double>(), j.at("frame_height").get<double>()};
    }
    if (dir == dir.parent_path()) break;
  }
  return std::nullopt;
}

struct TrackArgs {
  std::string detections;
  std::string images;
  std::string output;
  double frame_width = 0.0;
  double frame_height = 0.0;
  std::string gating = "3dii";
  std::string window = "dynamic";
  std::string fill = "cyclic";
  TrackerConfig config;
};

int run_track(const TrackArgs& a) {
  const fs::path det_file = resolve_file(a.detections, {"det/det.txt", "det.txt"});
  auto packets = toolkit::read_detections(det_file);

  std::map<FrameIndex, fs::path> images;
  if (!a.images.empty()) images = list_frame_images(a.images);

  FrameGeometry geom{a.frame_width, a.frame_height};
  if (!(geom.width > 0.0 && geom.height > 0.0)) {
    if (!images.empty()) {
      const GrayImage first = read_pgm(images.begin()->second);
      geom = {static_cast<double>(first.width()), static_cast<double>(first.height())};
    } else if (auto g = geometry_from_seqinfo(fs::absolute(det_file))) {
      geom = *g;
    } else {
      throw InvalidArgument("frame size unknown: pass --frame_width/--frame_height or --images");
    }
  }
  // Extend the packet list to cover trailing image frames.
  if (!images.empty()) {
    const FrameIndex last_img = images.rbegin()->first;
    for (FrameIndex f = static_cast<FrameIndex>(packets.size()) + 1; f <= last_img; ++f) {
      packets.push_back(FramePacket{f, {}, std::nullopt, std::nullopt});
    }
  }

  TrackerConfig cfg = a.config;
  cfg.gating_mode = a.gating == "full" ? GatingMode::kFullyConnected : GatingMode::kIntegralImage;
  cfg.window_mode = a.window == "fixed" ? WindowMode::kFixed : WindowMode::kDynamic;
  cfg.fill_mode = a.fill == "inertia" ? FillMode::kInertia : FillMode::kCyclic;

  Tracker tracker(cfg, geom);
  std::size_t fallbacks = 0;
  for (auto& p : packets) {
    if (auto it = images.find(p.frame); it != images.end()) p.image = read_pgm(it->second);
    const FrameEvents ev = tracker.step(p);
    fallbacks += ev.ecc_fallback ? 1 : 0;
    p.image.reset();
  }
  const auto trajectories = tracker.finalize();
  if (!a.output.empty()) {
    if (fs::path(a.output).has_parent_path()) fs::create_directories(fs::path(a.output).parent_path());
    toolkit::write_tracks(trajectories, fs::path(a.output));
  } else {
    toolkit::write_tracks(trajectories, std::cout);
  }
  std::cerr << "tracked " << packets.size() << " frames, " << trajectories.size() << " trajectories";
  if (!images.empty()) std::cerr << ", " << fallbacks << " alignment fallbacks";
  std::cerr << '\n';
  return 0;
}

int run_eval(const std::string& hyp_path, const std::string& gt_path, double threshold, bool csv) {
  const auto hyp = toolkit::read_tracks(resolve_file(hyp_path, {"tracks.txt"}));
  const auto gt = toolkit::read_tracks(resolve_file(gt_path, {"gt/gt.txt", "gt.txt"}), toolkit::TrackFileRole::kGroundTruth);
  const auto rep = toolkit::evaluate(hyp, gt, threshold);
  if (csv) {
    std::cout << "mota,idf1,fp,fn,ids,gt_boxes,hyp_boxes\n";
    std::cout << rep.mota << ',' << rep.idf1 << ',' << rep.fp << ',' << rep.fn << ',' << rep.ids << ','
              << rep.gt_boxes << ',' << rep.hyp_boxes << '\n';
  } else {
    std::printf("MOTA %.4f  IDF1 %.4f  FP %ld  FN %ld  IDS %ld  (GT boxes %ld, hypothesis boxes %ld)\n", rep.mota,
                rep.idf1, rep.fp, rep.fn, rep.ids, rep.gt_boxes, rep.hyp_boxes);
  }
  return 0;
}

int run_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir, bool images) {
  toolkit::ScenarioSpec spec = toolkit::load_scenario_spec(spec_path);
  if (images) spec.render_images = true;
  const auto sc = toolkit::generate(spec, seed);
  toolkit::write_scenario(sc, out_dir);
  std::cerr << "wrote " << spec.num_frames << " frames, " << sc.ground_truth.size() << " targets to " << out_dir
            << '\n';
  return 0;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw InvalidArgument("cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion-aware multi-object tracker"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "Track a detection sequence (MOTChallenge text)");
  track_cmd->add_option("--detections", track.detections, "Detection file or sequence directory")->required();
  track_cmd->add_option("--images", track.images, "Directory of per-frame P5 graymaps");
  track_cmd->add_option("--output", track.output, "Output track file (stdout if omitted)");
  track_cmd->add_option("--frame_width", track.frame_width, "Frame width in pixels");
  track_cmd->add_option("--frame_height", track.frame_height, "Frame height in pixels");
  track_cmd->add_option("--l_max", track.config.l_max, "Maximal reconnection window (frames)")->capture_default_str();
  track_cmd->add_option("--alpha", track.config.alpha, "Camera/target motion weight")->capture_default_str();
  track_cmd->add_option("--grid_m", track.config.grid_m, "Horizontal integral-image cells")->capture_default_str();
  track_cmd->add_option("--grid_n", track.config.grid_n, "Vertical integral-image cells")->capture_default_str();
  track_cmd->add_option("--iou_gate", track.config.iou_gate, "Minimum IoU for association")->capture_default_str();
  track_cmd->add_option("--min_track_len", track.config.min_track_len, "Drop shorter trajectories")
      ->capture_default_str();
  track_cmd->add_option("--backward_tracklet_len", track.config.backward_tracklet_len,
                        "Frames after reconnection used by the backward fill model")
      ->capture_default_str();
  track_cmd->add_option("--box_extension", track.config.box_extension, "Gating box scale")->capture_default_str();
  track_cmd->add_option("--confidence_floor", track.config.confidence_floor, "Drop detections below")
      ->capture_default_str();
  track_cmd->add_option("--gating", track.gating, "3dii or full")
      ->check(CLI::IsMember({"3dii", "full"}))
      ->capture_default_str();
  track_cmd->add_option("--window", track.window, "dynamic or fixed")
      ->check(CLI::IsMember({"dynamic", "fixed"}))
      ->capture_default_str();
  track_cmd->add_option("--fill", track.fill, "cyclic or inertia")
      ->check(CLI::IsMember({"cyclic", "inertia"}))
      ->capture_default_str();

  std::string hyp_path, gt_path;
  double eval_threshold = 0.5;
  bool eval_csv = false;
  auto* eval_cmd = app.add_subcommand("eval", "CLEAR-MOT and IDF1 against ground truth");
  eval_cmd->add_option("--hypotheses", hyp_path, "Tracker output file")->required();
  eval_cmd->add_option("--ground_truth", gt_path, "Ground-truth file or sequence directory")->required();
  eval_cmd->add_option("--iou", eval_threshold, "Match threshold")->capture_default_str();
  eval_cmd->add_flag("--csv", eval_csv, "CSV output");

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  bool synth_images = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth_cmd->add_option("--spec", spec_path, "Scenario JSON")->required();
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->required();
  synth_cmd->add_option("--output", synth_out, "Output directory")->required();
  synth_cmd->add_flag("--images", synth_images, "Render textured frames");

  std::vector<std::size_t> counts{100, 250, 500, 1000};
  std::string gating_out;
  double gating_ms = 250.0;
  auto* bg_cmd = app.add_subcommand("bench-gating", "Time 3DII gating against the fully connected IoU filter");
  bg_cmd->add_option("--counts", counts, "Track/detection counts")->delimiter(',')->capture_default_str();
  bg_cmd->add_option("--min_ms", gating_ms, "Timed work per count (ms)")->capture_default_str();
  bg_cmd->add_option("--output", gating_out, "CSV path (stdout if omitted)");

  int fill_scenarios = 20;
  int sweep_scenarios = 4;
  std::uint64_t fill_seed = 1;
  std::vector<int> l_max_values{10, 30, 60, 90, 120, 150};
  std::string fill_out = "filling.csv", sweep_out = "window_sweep.csv";
  std::string turn_profile = "gradual";
  auto* bf_cmd = app.add_subcommand("bench-filling", "Gap-filling comparison and dynamic/fixed window sweep");
  bf_cmd->add_option("--scenarios", fill_scenarios, "Turn scenarios for the fill comparison")->capture_default_str();
  bf_cmd->add_option("--sweep_scenarios", sweep_scenarios, "Sequences per window-sweep point")->capture_default_str();
  bf_cmd->add_option("--seed", fill_seed, "Base seed")->capture_default_str();
  bf_cmd->add_option("--turn", turn_profile, "gradual or sharp direction change while hidden")
      ->check(CLI::IsMember({"gradual", "sharp"}))
      ->capture_default_str();
  bf_cmd->add_option("--l_max", l_max_values, "L_max values for the sweep")->delimiter(',')->capture_default_str();
  bf_cmd->add_option("--fill_output", fill_out, "Per-frame IoU CSV")->capture_default_str();
  bf_cmd->add_option("--sweep_output", sweep_out, "Window sweep CSV")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*track_cmd) return run_track(track);
    if (*eval_cmd) return run_eval(hyp_path, gt_path, eval_threshold, eval_csv);
    if (*synth_cmd) return run_synth(spec_path, synth_seed, synth_out, synth_images);
    if (*bg_cmd) {
      toolkit::GatingBenchOptions opt;
      opt.min_frame_ms = gating_ms;
      const auto rows = toolkit::bench_gating(counts, opt);
      std::ofstream file;
      toolkit::write_gating_csv(rows, open_or_stdout(gating_out, file));
      return 0;
    }
    if (*bf_cmd) {
      toolkit::TurnScenarioOptions turn_opt;
      turn_opt.profile = turn_profile == "sharp" ? toolkit::TurnProfile::kSharp : toolkit::TurnProfile::kGradual;
      const auto fill = toolkit::bench_fill_comparison(fill_scenarios, fill_seed, turn_opt);
      {
        std::ofstream file;
        toolkit::write_fill_csv(fill, open_or_stdout(fill_out, file));
      }
      std::cerr << "fill comparison: cyclic beats inertia in " << fill.cyclic_wins() << "/" << fill.summaries.size()
                << " scenarios, mean IoU margin " << fill.aggregate_margin() << '\n';
      double inertia = 0.0, cyclic = 0.0, linear = 0.0;
      for (const auto& sm : fill.summaries) {
        inertia += sm.mean_inertia;
        cyclic += sm.mean_cyclic;
        linear += sm.mean_linear;
      }
      const double n = static_cast<double>(std::max<std::size_t>(1, fill.summaries.size()));
      std::cerr << "mean IoU: inertia " << inertia / n << ", cyclic " << cyclic / n << ", linear " << linear / n
                << '\n';
      const auto sweep = toolkit::bench_window_sweep(l_max_values, sweep_scenarios, fill_seed);
      std::ofstream file;
      toolkit::write_window_csv(sweep, open_or_stdout(sweep_out, file));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
