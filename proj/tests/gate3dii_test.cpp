#include <gtest/gtest.h>

#include <cstdint>
#include <random>

#include "mat/gate3dii.hpp"
#include "oracles.hpp"

using namespace mat;

namespace {

const CellGrid kGrid4{4, 4, 400.0, 400.0};

std::vector<BoundingBox> random_boxes(std::mt19937_64& rng, std::size_t n, const CellGrid& g) {
  std::vector<BoundingBox> out(n);
  for (auto& b : out) b = oracle::random_box(rng, g.frame_width, g.frame_height);
  return out;
}

template <class Count>
void expect_integral_matches_sums(const EncodingMaps& maps) {
  const auto integral = build_integral<Count>(maps);
  for (int r = 0; r < maps.n_cells(); ++r) {
    for (int c = 0; c < maps.m_cells(); ++c) {
      for (std::size_t l = 0; l < maps.layers(); ++l) {
        ASSERT_EQ(static_cast<int>(integral.at(c, r, l)), oracle::prefix_sum(maps, c, r, l));
      }
    }
  }
}

}  // namespace

TEST(CellSpan, SnapsOutward) {
  const auto s = cell_span({50, 50, 150, 150}, kGrid4);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, (CellRect{0, 1, 0, 1}));
  // Exact cell boundaries do not spill into the neighbour.
  EXPECT_EQ(*cell_span({0, 0, 200, 200}, kGrid4), (CellRect{0, 1, 0, 1}));
}

TEST(CellSpan, ClipsToFrameAndRejectsOutside) {
  EXPECT_EQ(*cell_span({-80, -80, 20, 20}, kGrid4), (CellRect{0, 0, 0, 0}));
  EXPECT_FALSE(cell_span({410, 0, 500, 50}, kGrid4));
  EXPECT_FALSE(cell_span({-50, 0, 0, 50}, kGrid4));
}

TEST(CellSpan, MatchesCellOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cells(1, 25);
  for (int i = 0; i < 3000; ++i) {
    const CellGrid g{cells(rng), cells(rng), 640.0, 360.0};
    const auto b = oracle::random_box(rng, g.frame_width, g.frame_height, 1.0, 200.0);
    const auto want = oracle::covered_cells(b, g);
    const auto span = cell_span(b, g);
    std::set<int> got;
    if (span) {
      for (int r = span->row1; r <= span->row2; ++r) {
        for (int c = span->col1; c <= span->col2; ++c) got.insert(r * g.m_cells + c);
      }
    }
    ASSERT_EQ(got, want);
  }
}

TEST(BuildMaps, ZeroDetections) {
  const auto maps = build_maps({}, kGrid4);
  EXPECT_EQ(maps.layers(), 0u);
}

TEST(BuildMaps, TwoByTwoCornerBlock) {
  const std::vector<BoundingBox> dets{{0, 0, 200, 200}};
  const auto maps = build_maps(dets, kGrid4);
  EXPECT_EQ(maps.ones(0), 4u);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(maps.at(c, r, 0), (r <= 1 && c <= 1) ? 1 : 0);
  }
}

TEST(BuildMaps, FullFrameSetsEveryCell) {
  const std::vector<BoundingBox> dets{{0, 0, 400, 400}};
  EXPECT_EQ(build_maps(dets, kGrid4).ones(0), 16u);
}

TEST(BuildMaps, InFrameLayersAreNonEmpty) {
  std::mt19937_64 rng(2);
  const CellGrid g{16, 8, 1920, 1080};
  const auto dets = random_boxes(rng, 300, g);
  const auto maps = build_maps(dets, g);
  for (std::size_t k = 0; k < dets.size(); ++k) EXPECT_GE(maps.ones(k), 1u);
  EXPECT_TRUE(maps.empty_layers().empty());
}

TEST(BuildMaps, OutOfFrameDetectionIsRecorded) {
  const std::vector<BoundingBox> dets{{500, 500, 600, 600}};
  const auto maps = build_maps(dets, kGrid4);
  EXPECT_EQ(maps.ones(0), 0u);
  ASSERT_EQ(maps.empty_layers().size(), 1u);
}

TEST(BuildIntegral, CornerBlockValues) {
  const std::vector<BoundingBox> dets{{0, 0, 200, 200}};
  const auto integral = build_integral(build_maps(dets, kGrid4));
  EXPECT_EQ(integral.at(1, 1, 0), 4);
  EXPECT_EQ(integral.at(3, 3, 0), 4);
  EXPECT_EQ(integral.at(0, 0, 0), 1);
  EXPECT_EQ(integral.at(3, 0, 0), 2);
}

TEST(BuildIntegral, AllZeroLayer) {
  const auto integral = build_integral(EncodingMaps(kGrid4, 1));
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(integral.at(c, r, 0), 0);
  }
}

TEST(BuildIntegral, EqualsDirectSummationOnRandomMaps) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cells(1, 15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const CellGrid g{cells(rng), cells(rng), 100.0, 100.0};
    EncodingMaps maps(g, 1 + static_cast<std::size_t>(cells(rng)));
    const double density = u(rng);
    for (std::size_t l = 0; l < maps.layers(); ++l) {
      for (int r = 0; r < g.n_cells; ++r) {
        for (int c = 0; c < g.m_cells; ++c) {
          if (u(rng) < density) maps.set(c, r, l);
        }
      }
    }
    expect_integral_matches_sums<std::uint16_t>(maps);
    expect_integral_matches_sums<std::uint8_t>(maps);
  }
}

TEST(BuildIntegral, NarrowCountsRejectLargeGrids) {
  const CellGrid g{16, 16, 100.0, 100.0};
  EXPECT_THROW(build_integral<std::uint8_t>(EncodingMaps(g, 1)), InvalidArgument);
  EXPECT_NO_THROW(build_integral<std::uint16_t>(EncodingMaps(g, 1)));
}

TEST(Query, DisjointRegionIsEmpty) {
  const std::vector<BoundingBox> dets{{0, 0, 200, 200}};
  const auto integral = build_integral(build_maps(dets, kGrid4));
  std::vector<std::size_t> found;
  query(integral, CellRect{2, 3, 2, 3}, found);
  EXPECT_TRUE(found.empty());
  query(integral, CellRect{1, 2, 1, 2}, found);
  EXPECT_EQ(found, std::vector<std::size_t>{0});
}

TEST(Query, RegionSumAgreesWithCellCount) {
  const std::vector<BoundingBox> dets{{0, 0, 200, 200}, {150, 150, 400, 400}};
  const auto integral = build_integral(build_maps(dets, kGrid4));
  const auto sum = region_sum(integral, CellRect{1, 2, 1, 2});
  EXPECT_EQ(sum[0], 1);
  EXPECT_EQ(sum[1], 4);
}

TEST(Query, MatchesSharedCellOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(0, 200);
  std::uniform_int_distribution<int> cells(1, 20);
  for (int f = 0; f < 300; ++f) {
    const CellGrid g{cells(rng), cells(rng), 1280.0, 720.0};
    const auto dets = random_boxes(rng, static_cast<std::size_t>(count(rng)), g);
    const auto maps = build_maps(dets, g);
    const auto wide = build_integral<std::uint16_t>(maps);
    for (int t = 0; t < 4; ++t) {
      const auto track = oracle::random_box(rng, g.frame_width, g.frame_height);
      const auto want = oracle::shared_cells(track, dets, g);
      ASSERT_EQ(query(wide, track, g), want);
      if (g.cell_count() <= 255) ASSERT_EQ(query(build_integral<std::uint8_t>(maps), track, g), want);
    }
  }
}

TEST(Query, LayerRangeRestrictsOutput) {
  std::vector<BoundingBox> dets(40, BoundingBox{0, 0, 400, 400});
  const auto integral = build_integral(build_maps(dets, kGrid4));
  std::vector<std::size_t> found;
  query(integral, CellRect{0, 0, 0, 0}, found, 5, 29);
  ASSERT_EQ(found.size(), 24u);
  EXPECT_EQ(found.front(), 5u);
  EXPECT_EQ(found.back(), 28u);
}

TEST(GatedCost, CoincidentPairCostsZero) {
  const std::vector<BoundingBox> boxes{{10, 10, 60, 110}};
  const auto cost = gated_cost(boxes, boxes, CellGrid{16, 8, 640, 360}, TrackerConfig{});
  ASSERT_EQ(cost.entries.size(), 1u);
  EXPECT_EQ(cost.entries[0], (CostEntry{0, 0, 0.0}));
}

TEST(GatedCost, BelowGateIsForbidden) {
  // Same height, widths 10: a horizontal shift of 20/3 leaves IoU = 0.2.
  const std::vector<BoundingBox> tracks{{0, 0, 10, 10}};
  const std::vector<BoundingBox> dets{{20.0 / 3.0, 0, 10 + 20.0 / 3.0, 10}};
  ASSERT_NEAR(iou(tracks[0], dets[0]), 0.2, 1e-12);
  const auto cost = gated_cost(tracks, dets, CellGrid{16, 8, 640, 360}, TrackerConfig{});
  EXPECT_TRUE(cost.entries.empty());
  EXPECT_EQ(cost.at(0, 0), GatedCost::kForbidden);
}

TEST(GatedCost, EqualsFullyConnectedFilter) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(0, 150);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CellGrid g{16, 8, 1920, 1080};
  for (int f = 0; f < 500; ++f) {
    TrackerConfig cfg;
    cfg.iou_gate = f % 5 == 0 ? 0.0 : u(rng) * 0.6;
    const auto dets = random_boxes(rng, static_cast<std::size_t>(count(rng)), g);
    auto tracks = random_boxes(rng, static_cast<std::size_t>(count(rng)), g);
    // Near-duplicates so that many pairs pass the gate.
    for (std::size_t i = 0; i < std::min(tracks.size(), dets.size()); i += 2) {
      const double dx = (u(rng) - 0.5) * 20.0, dy = (u(rng) - 0.5) * 20.0;
      tracks[i] = {dets[i].x1 + dx, dets[i].y1 + dy, dets[i].x2 + dx, dets[i].y2 + dy};
    }
    ASSERT_EQ(gated_cost(tracks, dets, g, cfg), full_iou_cost(tracks, dets, cfg));
  }
}

TEST(GatedCost, WideGridUsesSixteenBitPathAndStaysSound) {
  std::mt19937_64 rng(6);
  const CellGrid g{40, 30, 1920, 1080};
  TrackerConfig cfg;
  cfg.grid_m = 40;
  cfg.grid_n = 30;
  for (int f = 0; f < 50; ++f) {
    const auto dets = random_boxes(rng, 120, g);
    const auto tracks = random_boxes(rng, 120, g);
    ASSERT_EQ(gated_cost(tracks, dets, g, cfg), full_iou_cost(tracks, dets, cfg));
  }
}

TEST(GatedCost, OffFrameBoxesAreScoredPairwise) {
  const CellGrid g{16, 8, 640, 360};
  // A track that has left through the left edge against a detection straddling it.
  const std::vector<BoundingBox> tracks{{-30, 100, 0, 180}, {-60, 100, -20, 180}, {200, 100, 240, 180}};
  const std::vector<BoundingBox> dets{{-20, 100, 15, 180}, {-58, 100, -22, 180}, {201, 100, 241, 180}};
  const auto cost = gated_cost(tracks, dets, g, TrackerConfig{});
  EXPECT_EQ(cost, full_iou_cost(tracks, dets, TrackerConfig{}));
  EXPECT_LT(cost.at(0, 0), GatedCost::kForbidden);
  EXPECT_LT(cost.at(1, 1), GatedCost::kForbidden);
  EXPECT_LT(cost.at(2, 2), GatedCost::kForbidden);
}

TEST(GatedCost, EqualsFullyConnectedFilterBeyondTheFrame) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> x(-200.0, 840.0), y(-200.0, 560.0), h(20.0, 150.0);
  const CellGrid g{16, 8, 640, 360};
  for (int f = 0; f < 300; ++f) {
    std::vector<BoundingBox> tracks, dets;
    for (int i = 0; i < 40; ++i) {
      const double cx = x(rng), cy = y(rng), hh = h(rng);
      tracks.push_back(from_center_form({cx, cy, 0.4 * hh, hh}));
      dets.push_back(from_center_form({cx + (x(rng) - 320) * 0.02, cy + (y(rng) - 180) * 0.02, 0.4 * hh, hh}));
    }
    std::shuffle(dets.begin(), dets.end(), rng);
    ASSERT_EQ(gated_cost(tracks, dets, g, TrackerConfig{}), full_iou_cost(tracks, dets, TrackerConfig{}));
  }
}

TEST(GatedCost, EmptyInputs) {
  const std::vector<BoundingBox> none;
  const std::vector<BoundingBox> one{{0, 0, 10, 10}};
  const auto a = gated_cost(none, one, CellGrid{}, TrackerConfig{});
  EXPECT_EQ(a.rows, 0u);
  EXPECT_EQ(a.cols, 1u);
  EXPECT_TRUE(gated_cost(one, none, CellGrid{}, TrackerConfig{}).entries.empty());
}

TEST(GatedCost, EntriesSortedByRowThenColumn) {
  std::mt19937_64 rng(7);
  const CellGrid g{16, 8, 640, 360};
  std::vector<BoundingBox> dets = random_boxes(rng, 80, g);
  std::vector<BoundingBox> tracks = dets;
  std::shuffle(tracks.begin(), tracks.end(), rng);
  TrackerConfig cfg;
  cfg.iou_gate = 0.01;
  const auto cost = gated_cost(tracks, dets, g, cfg);
  ASSERT_FALSE(cost.entries.empty());
  for (std::size_t i = 1; i < cost.entries.size(); ++i) {
    const auto& a = cost.entries[i - 1];
    const auto& b = cost.entries[i];
    EXPECT_TRUE(std::pair(a.row, a.col) < std::pair(b.row, b.col));
  }
}
