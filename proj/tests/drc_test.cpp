#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mat/drc.hpp"
#include "mat/toolkit/bench.hpp"
#include "oracles.hpp"

using namespace mat;

TEST(ReconnectionWindow, Endpoints) {
  const ReconnectionPolicy p;
  EXPECT_EQ(reconnection_window(0.0, 0.0, p), 120.0);
  EXPECT_NEAR(reconnection_window(1.0, 0.0, p), 120.0 * std::exp(-0.95), 1e-12);
  EXPECT_NEAR(reconnection_window(1.0, 0.0, p), 46.40, 0.01);
  EXPECT_NEAR(reconnection_window(0.2, 0.4, p), 97.27, 0.01);
}

TEST(ReconnectionWindow, MatchesIndependentFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const int l_max = 1 + static_cast<int>(u(rng) * 300);
    const double alpha = u(rng), i_cam = u(rng), v = u(rng);
    EXPECT_NEAR(reconnection_window(i_cam, v, {l_max, alpha}), oracle::reconnection_window(i_cam, v, l_max, alpha),
                1e-9);
  }
}

TEST(ReconnectionWindow, ShrinksWithCameraMotionAndSpeed) {
  const ReconnectionPolicy p;
  EXPECT_LT(reconnection_window(0.5, 0.0, p), reconnection_window(0.1, 0.0, p));
  EXPECT_LT(reconnection_window(0.1, 0.8, p), reconnection_window(0.1, 0.2, p));
  // Camera intensity above 1 is clamped.
  EXPECT_EQ(reconnection_window(1.7, 0.0, p), reconnection_window(1.0, 0.0, p));
}

TEST(ReconnectionWindow, Validation) {
  EXPECT_THROW(reconnection_window(0.0, 1.5, {}), InvalidArgument);
  EXPECT_THROW((ReconnectionPolicy{0, 0.5}.validate()), InvalidArgument);
  EXPECT_THROW((ReconnectionPolicy{10, -0.1}.validate()), InvalidArgument);
}

TEST(LinearFill, MidpointOfStraightGap) {
  const auto boxes = linear_fill(10, from_center_form({0, 0, 10, 20}), 20, from_center_form({10, 0, 10, 20}));
  ASSERT_EQ(boxes.size(), 9u);
  EXPECT_NEAR(to_center_form(boxes[4]).cx, 5.0, 1e-12);
  EXPECT_TRUE(linear_fill(3, {0, 0, 1, 1}, 4, {0, 0, 1, 1}).empty());
}

TEST(FillFragment, CenterStepWithTightPriors) {
  MotionParams params;
  params.fixed_process_noise = Matrix8d::Identity() * 1e-12;
  FillRequest req;
  req.frame_a = 10;
  req.frame_b = 20;
  req.box_a = from_center_form({0, 0, 10, 20});
  req.box_b = from_center_form({10, 0, 10, 20});
  req.state_a = km_init(req.box_a, params);
  req.post_b_tracklet = {req.box_b};
  const FillResult r = fill_fragment(req, params);
  ASSERT_EQ(r.boxes.size(), 9u);
  EXPECT_NEAR(to_center_form(r.linear[4]).cx, 5.0, 1e-12);
}

TEST(FillFragment, StraightLineIsRecovered) {
  auto truth = [](FrameIndex t) { return from_center_form({100.0 + 3.0 * t, 80.0 + 1.0 * t, 40.0, 90.0}); };
  KalmanState s = km_init(truth(1));
  for (FrameIndex t = 2; t <= 30; ++t) s = km_update(km_predict(s), truth(t));
  FillRequest req;
  req.frame_a = 30;
  req.frame_b = 55;
  req.box_a = truth(30);
  req.box_b = truth(55);
  req.state_a = s;
  req.post_b_tracklet = {truth(55), truth(56), truth(57)};
  const FillResult r = fill_fragment(req);
  ASSERT_EQ(r.boxes.size(), 24u);
  EXPECT_EQ(r.fallbacks, 0);
  for (std::size_t i = 0; i < r.boxes.size(); ++i) {
    const auto got = to_center_form(r.boxes[i]);
    const auto want = to_center_form(truth(31 + static_cast<FrameIndex>(i)));
    EXPECT_NEAR(got.cx, want.cx, 0.5);
    EXPECT_NEAR(got.cy, want.cy, 0.5);
  }
}

TEST(FillFragment, OutputCountAndValidity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    FillRequest req;
    req.frame_a = 5;
    req.frame_b = 7 + static_cast<FrameIndex>(rng() % 40);
    req.box_a = oracle::random_box(rng, 640, 360);
    req.box_b = oracle::random_box(rng, 640, 360);
    req.state_a = km_init(req.box_a);
    req.post_b_tracklet = {req.box_b};
    const FillResult r = fill_fragment(req);
    ASSERT_EQ(r.boxes.size(), static_cast<std::size_t>(req.frame_b - req.frame_a - 1));
    for (const auto& b : r.boxes) EXPECT_TRUE(b.valid());
  }
}

TEST(FillFragment, BeatsInertiaWhenTargetTurns) {
  toolkit::TurnScenarioOptions opt;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto sc = toolkit::make_turn_scenario(seed, opt);
    const FillRequest req = toolkit::fill_request_for(sc, opt.tracklet);
    const auto cyclic = fill_fragment(req).boxes;
    const auto inertia = inertia_fill(req);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < cyclic.size(); ++i) {
      const auto& truth = sc.truth[static_cast<std::size_t>(sc.frame_a) + i];
      a += oracle::iou(cyclic[i], truth);
      b += oracle::iou(inertia[i], truth);
    }
    EXPECT_GT(a, b) << "seed " << seed;
  }
}

TEST(FillFragment, RejectsInvalidRequests) {
  FillRequest req;
  req.frame_a = 4;
  req.frame_b = 5;
  req.box_a = req.box_b = {0, 0, 10, 10};
  req.post_b_tracklet = {req.box_b};
  EXPECT_THROW(fill_fragment(req), InvalidArgument);
  req.frame_b = 8;
  req.post_b_tracklet.clear();
  EXPECT_THROW(fill_fragment(req), InvalidArgument);
}

TEST(FillFragment, CompensatesCameraPan) {
  // Target static in the world, camera panning: image motion is pure warp.
  const AffineWarp pan = AffineWarp::translation(-2.0, 0.0);
  auto at = [](FrameIndex t) { return from_center_form({300.0 - 2.0 * t, 150.0, 30.0, 80.0}); };
  FillRequest req;
  req.frame_a = 10;
  req.frame_b = 30;
  req.box_a = at(10);
  req.box_b = at(30);
  req.state_a = km_init(at(10));
  req.post_b_tracklet = {at(30), at(31), at(32)};
  req.warps.assign(22, pan);
  const FillResult r = fill_fragment(req);
  for (std::size_t i = 0; i < r.boxes.size(); ++i) {
    EXPECT_NEAR(to_center_form(r.boxes[i]).cx, to_center_form(at(11 + static_cast<FrameIndex>(i))).cx, 0.5);
  }
  // Inertia from a zero-velocity state follows the pan exactly.
  const auto inertia = inertia_fill(req);
  EXPECT_NEAR(to_center_form(inertia.back()).cx, to_center_form(at(29)).cx, 1e-9);
}

TEST(HoldPrediction, ZeroVelocityStaticCameraKeepsBox) {
  TrackRecord t;
  t.history[1] = {{0, 0, 10, 20}, 1.0, false};
  t.motion = km_init({0, 0, 10, 20});
  t.deactivate();
  hold_prediction(t, AffineWarp::identity());
  ASSERT_EQ(t.provisional.size(), 1u);
  EXPECT_EQ(t.provisional[0], (BoundingBox{0, 0, 10, 20}));
  EXPECT_EQ(t.deactivated_len, 1);
}

TEST(HoldPrediction, RequiresDeactivatedTrack) {
  TrackRecord t;
  t.history[1] = {{0, 0, 10, 20}, 1.0, false};
  EXPECT_THROW(hold_prediction(t, AffineWarp::identity()), InvalidArgument);
}

TEST(HoldPrediction, ProvisionalLengthTracksDeactivatedLength) {
  std::mt19937_64 rng(3);
  TrackRecord t;
  t.history[1] = {{100, 100, 130, 180}, 1.0, false};
  t.motion = km_init(t.history[1].box);
  FrameIndex frame = 1;
  for (int step = 0; step < 2000; ++step) {
    ++frame;
    if (t.status == TrackStatus::kActive) {
      if (rng() % 3 == 0) {
        t.deactivate();
      } else {
        t.history[frame] = {t.last_box(), 1.0, false};
      }
    } else if (rng() % 4 == 0) {
      t.reactivate();
      t.history[frame] = {t.last_box(), 1.0, false};
    } else {
      hold_prediction(t, AffineWarp::identity());
    }
    ASSERT_EQ(t.provisional.size(), static_cast<std::size_t>(t.deactivated_len));
    if (t.status == TrackStatus::kActive) ASSERT_EQ(t.deactivated_len, 0);
  }
}
