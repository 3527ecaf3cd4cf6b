#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "mat/toolkit/bench.hpp"
#include "mat/toolkit/evaluate.hpp"
#include "mat/toolkit/mot_io.hpp"
#include "mat/toolkit/synth.hpp"

using namespace mat;
using namespace mat::toolkit;

namespace {

std::vector<MotRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return read_records(in, "mem");
}

Trajectory line_track(TrackId id, double y, FrameIndex from, FrameIndex to) {
  Trajectory t;
  t.id = id;
  for (FrameIndex f = from; f <= to; ++f) t.boxes[f] = {from_center_form({50.0 + 3.0 * f, y, 30, 80}), 1.0, false};
  return t;
}

}  // namespace

TEST(MotIo, TrackRoundTrip) {
  std::vector<Trajectory> tracks{line_track(1, 100, 1, 20), line_track(2, 250, 5, 12)};
  tracks[0].boxes[7].filled = true;
  std::ostringstream out;
  write_tracks(tracks, out);
  const auto back = trajectories_from_records(parse(out.str()), TrackFileRole::kHypothesis);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].id, tracks[i].id);
    ASSERT_EQ(back[i].boxes.size(), tracks[i].boxes.size());
    for (const auto& [f, e] : tracks[i].boxes) {
      const auto& g = back[i].boxes.at(f).box;
      EXPECT_NEAR(g.x1, e.box.x1, 0.01);
      EXPECT_NEAR(g.y1, e.box.y1, 0.01);
      EXPECT_NEAR(g.x2, e.box.x2, 0.01);
      EXPECT_NEAR(g.y2, e.box.y2, 0.01);
      EXPECT_EQ(back[i].boxes.at(f).filled, e.filled);
    }
  }
}

TEST(MotIo, DetectionsGroupIntoPackets) {
  EXPECT_TRUE(packets_from_records(parse("")).empty());
  const auto packets = packets_from_records(parse(
      "1,-1,10,10,20,40,0.9\n2,-1,10,10,20,40,0.8\n3,-1,10,10,20,40,0.7\n"
      "3,-1,50,10,20,40,0.7\n5,-1,10,10,20,40,0.6\n"));
  ASSERT_EQ(packets.size(), 5u);
  for (std::size_t i = 0; i < packets.size(); ++i) EXPECT_EQ(packets[i].frame, static_cast<FrameIndex>(i + 1));
  EXPECT_EQ(packets[2].detections.size(), 2u);
  EXPECT_TRUE(packets[3].detections.empty());
}

TEST(MotIo, ParseErrorsCarryLineNumbers) {
  try {
    parse("1,-1,10,10,20,40,0.9\n1,-1,abc,10,20,40,0.9\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("1,2,3\n"), ParseError);
  EXPECT_THROW(parse("0,-1,10,10,20,40,1\n"), ParseError);
  EXPECT_THROW(parse("1,-1,10,10,0,40,1\n"), ParseError);
}

TEST(MotIo, GroundTruthSkipsIgnoredRows) {
  const auto recs = parse("1,1,10,10,20,40,1,1,1\n2,1,10,10,20,40,0,1,1\n3,1,10,10,20,40,1,1,1\n");
  EXPECT_EQ(trajectories_from_records(recs, TrackFileRole::kGroundTruth)[0].boxes.size(), 2u);
  EXPECT_EQ(trajectories_from_records(recs, TrackFileRole::kHypothesis)[0].boxes.size(), 3u);
}

TEST(Evaluate, IdenticalTracksArePerfect) {
  const std::vector<Trajectory> gt{line_track(1, 100, 1, 50), line_track(2, 250, 1, 50)};
  const auto rep = evaluate(gt, gt);
  EXPECT_EQ(rep.mota, 1.0);
  EXPECT_EQ(rep.idf1, 1.0);
  EXPECT_EQ(rep.ids, 0);
  EXPECT_EQ(rep.gt_boxes, 100);
}

TEST(Evaluate, SingleIdentitySwitch) {
  const std::vector<Trajectory> gt{line_track(1, 100, 1, 40)};
  const std::vector<Trajectory> hyp{line_track(7, 100, 1, 20), line_track(8, 100, 21, 40)};
  const auto rep = evaluate(hyp, gt);
  EXPECT_EQ(rep.ids, 1);
  EXPECT_EQ(rep.fp, 0);
  EXPECT_EQ(rep.fn, 0);
  EXPECT_NEAR(rep.mota, 1.0 - 1.0 / 40.0, 1e-12);
  EXPECT_NEAR(rep.idf1, 0.5, 1e-12);
}

TEST(Evaluate, MissesAndFalsePositives) {
  const std::vector<Trajectory> gt{line_track(1, 100, 1, 10)};
  const std::vector<Trajectory> hyp{line_track(1, 100, 1, 5), line_track(2, 300, 1, 2)};
  const auto rep = evaluate(hyp, gt);
  EXPECT_EQ(rep.fn, 5);
  EXPECT_EQ(rep.fp, 2);
  EXPECT_NEAR(rep.mota, 1.0 - 7.0 / 10.0, 1e-12);
}

TEST(Evaluate, InvariantUnderRelabeling) {
  ScenarioSpec spec;
  spec.num_targets = 8;
  spec.detection_noise = 2.0;
  const auto sc = generate(spec, 5);
  std::vector<Trajectory> hyp = sc.ground_truth;
  for (auto& t : hyp) t.boxes.erase(t.boxes.begin());
  const auto a = evaluate(hyp, sc.ground_truth);
  for (auto& t : hyp) t.id = 1000 - t.id;
  const auto b = evaluate(hyp, sc.ground_truth);
  EXPECT_EQ(a.mota, b.mota);
  EXPECT_EQ(a.idf1, b.idf1);
  EXPECT_EQ(a.ids, b.ids);
}

TEST(Evaluate, AggregatePoolsCounts) {
  const std::vector<Trajectory> gt{line_track(1, 100, 1, 10)};
  const auto s1 = evaluate_sequence(gt, gt);
  const auto s2 = evaluate_sequence({line_track(1, 100, 1, 5)}, gt);
  const auto rep = aggregate({s1, s2});
  EXPECT_EQ(rep.gt_boxes, 20);
  EXPECT_EQ(rep.fn, 5);
  EXPECT_NEAR(rep.mota, 0.75, 1e-12);
}

TEST(Synth, DeterministicPerSeed) {
  ScenarioSpec spec;
  spec.detection_noise = 1.0;
  spec.false_positives_per_frame = 0.5;
  std::ostringstream a, b, c;
  write_detections(generate(spec, 9).packets, a);
  write_detections(generate(spec, 9).packets, b);
  write_detections(generate(spec, 10).packets, c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, ZeroTargetsYieldsEmptyFrames) {
  ScenarioSpec spec;
  spec.num_targets = 0;
  spec.num_frames = 20;
  const auto sc = generate(spec, 1);
  ASSERT_EQ(sc.packets.size(), 20u);
  for (const auto& p : sc.packets) EXPECT_TRUE(p.detections.empty());
  EXPECT_TRUE(sc.ground_truth.empty());
}

TEST(Synth, RejectsBadSpecs) {
  ScenarioSpec spec;
  spec.box_height = {50, 400};
  EXPECT_THROW(generate(spec, 1), InvalidArgument);
  spec = {};
  spec.num_frames = 0;
  EXPECT_THROW(generate(spec, 1), InvalidArgument);
}

TEST(Bench, GatingRowsAgree) {
  GatingBenchOptions opt;
  opt.min_frame_ms = 1.0;
  const auto rows = bench_gating({10, 50}, opt);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.identical);
    EXPECT_GE(r.frames, opt.min_frames);
  }
  std::ostringstream csv;
  write_gating_csv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
