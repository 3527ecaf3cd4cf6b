#include <gtest/gtest.h>

#include <numbers>

#include "mat/ecc.hpp"
#include "mat/toolkit/synth.hpp"
#include "oracles.hpp"

using namespace mat;
using toolkit::Texture;
using toolkit::TextureSpec;

namespace {

// prev samples the texture at base(x); cur at base(W^-1(x)), so cur(W(x)) = prev(x).
std::pair<GrayImage, GrayImage> pair_under(const AffineWarp& w, std::uint64_t seed, int size = 64) {
  const Texture tex(TextureSpec{}, seed);
  const AffineWarp base = AffineWarp::translation(137.0, -59.0);
  return {tex.render(size, size, base), tex.render(size, size, compose(base, invert_warp(w)))};
}

}  // namespace

TEST(EccAlign, SelfAlignmentIsIdentity) {
  const auto [prev, cur] = pair_under(AffineWarp::identity(), 3);
  const EccResult r = ecc_align(prev, prev);
  ASSERT_TRUE(r.ok());
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(r.warp.m[k], AffineWarp::identity().m[k], 1e-3);
  EXPECT_GE(r.correlation, 0.999);
}

TEST(EccAlign, RecoversTranslation) {
  const auto [prev, cur] = pair_under(AffineWarp::translation(5, 3), 4);
  const EccResult r = ecc_align(prev, cur);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.warp.tx(), 5.0, 0.5);
  EXPECT_NEAR(r.warp.ty(), 3.0, 0.5);
}

TEST(EccAlign, RecoversRotationAboutCenter) {
  const AffineWarp w = AffineWarp::rotation(2.0 * std::numbers::pi / 180.0, 32, 32);
  const auto [prev, cur] = pair_under(w, 5);
  const EccResult r = ecc_align(prev, cur);
  ASSERT_TRUE(r.ok());
  EXPECT_LT(oracle::mean_corner_error(r.warp, w, 64, 64), 1.0);
}

TEST(EccAlign, RecoversWarpOnLargerFrame) {
  const AffineWarp w = compose(AffineWarp::translation(-6.5, 4.0), AffineWarp::rotation(0.02, 160, 120));
  const Texture tex(TextureSpec{}, 6);
  const GrayImage prev = tex.render(320, 240, AffineWarp::identity());
  const GrayImage cur = tex.render(320, 240, invert_warp(w));
  const EccResult r = ecc_align(prev, cur);
  ASSERT_TRUE(r.ok());
  EXPECT_LT(oracle::mean_corner_error(r.warp, w, 320, 240), 0.5);
  EXPECT_GE(r.correlation, 0.99);
}

TEST(EccAlign, CorrelationTraceIsNonDecreasing) {
  const auto [prev, cur] = pair_under(AffineWarp::translation(-4, 6), 7);
  const EccResult r = ecc_align(prev, cur);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1]);
  EXPECT_NEAR(r.trace.back(), r.correlation, 1e-12);
}

TEST(EccAlign, FlatImageIsReportedAsFailure) {
  const GrayImage flat(64, 64, 128);
  const EccResult r = ecc_align(flat, flat);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.status, EccStatus::kSingular);
}

TEST(EccAlign, InputValidation) {
  EXPECT_THROW(ecc_align(GrayImage(64, 64), GrayImage(64, 32)), InvalidArgument);
  EXPECT_THROW(ecc_align(GrayImage(4, 4), GrayImage(4, 4)), InvalidArgument);
  EccParams bad;
  bad.pyramid_levels = 0;
  EXPECT_THROW(ecc_align(GrayImage(64, 64), GrayImage(64, 64), bad), InvalidArgument);
}

TEST(EccAlign, PlausibilityBound) {
  EXPECT_TRUE(AffineWarp::identity().plausible());
  EXPECT_FALSE((AffineWarp{{0.1, 0, 0, 0, 0.1, 0}}).plausible());
  EXPECT_FALSE((AffineWarp{{3, 0, 0, 0, 3, 0}}).plausible());
}

TEST(PyramidScaling, FinerOfCoarserIsIdentityMap) {
  const AffineWarp w{{1.01, 0.02, 3.5, -0.01, 0.99, -2.0}};
  const AffineWarp back = detail::to_finer(detail::to_coarser(w));
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(back.m[k], w.m[k], 1e-12);
  // A pure translation halves at the coarser level.
  EXPECT_NEAR(detail::to_coarser(AffineWarp::translation(4, -2)).tx(), 2.0, 1e-12);
}
