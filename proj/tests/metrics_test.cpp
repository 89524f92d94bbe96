#include <gtest/gtest.h>

#include <random>

#include "cfile/metrics.hpp"
#include "test_support.hpp"

namespace cfile {
namespace {

using testing::uniform;

SurfaceLabeling random_labels(std::mt19937_64& rng, int w, int h) {
  SurfaceLabeling s(w, h);
  for (auto& p : s.data()) p = static_cast<std::uint8_t>(rng() % kNumSurfaces);
  return s;
}

TEST(PixelError, Examples) {
  SurfaceLabeling a(2, 2, 1);
  EXPECT_EQ(pixel_error(a, a), 0.0);
  auto b = a;
  b(1, 0) = 3;
  EXPECT_EQ(pixel_error(a, b), 0.25);
  EXPECT_THROW(pixel_error(a, SurfaceLabeling(3, 2)), Error);
}

TEST(PixelError, MatchesDoubleLoopCount) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const auto a = random_labels(rng, 16, 16);
    auto b = a;
    const int flips = rng() % 64;
    for (int f = 0; f < flips; ++f) b(rng() % 16, rng() % 16) = rng() % kNumSurfaces;
    int wrong = 0;
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) wrong += a(x, y) != b(x, y);
    EXPECT_EQ(pixel_error(a, b), wrong / 256.0);
    EXPECT_EQ(pixel_error(a, b), pixel_error(b, a));
  }
}

std::vector<CornerPoint> square_corners(Vec2 shift = {0, 0}) {
  return {{"p1", Vec2{100, 100} + shift},
          {"p2", Vec2{100, 300} + shift},
          {"p3", Vec2{300, 300} + shift},
          {"p4", Vec2{300, 100} + shift}};
}

TEST(CornerError, Examples) {
  const ImageSize dims{404, 404};
  const double diag = std::hypot(404, 404);
  EXPECT_EQ(corner_error(square_corners(), square_corners(), dims), 0.0);

  auto far = square_corners();
  far[2].xy = far[2].xy + Vec2{diag / std::sqrt(2.0), diag / std::sqrt(2.0)};
  EXPECT_NEAR(corner_error(far, square_corners(), dims), 0.25, 1e-12);

  auto missing = square_corners();
  missing.pop_back();
  EXPECT_NEAR(corner_error(missing, square_corners(), dims), 0.25, 1e-12);

  // predictions without a ground-truth partner are not penalized
  auto extra = square_corners();
  extra.push_back({"e1", {0, 0}});
  EXPECT_EQ(corner_error(extra, square_corners(), dims), 0.0);
}

TEST(CornerError, JitterBound) {
  const ImageSize dims{404, 404};
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    auto pred = square_corners();
    for (auto& c : pred) {
      const double t = uniform(rng, 0, 2 * M_PI), r = uniform(rng, 0, 5);
      c.xy = c.xy + Vec2{r * std::cos(t), r * std::sin(t)};
    }
    EXPECT_LE(corner_error(pred, square_corners(), dims), 5.0 / std::hypot(404, 404) + 1e-12);
  }
}

TEST(CornerError, TranslationInvariant) {
  const ImageSize dims{404, 404};
  std::mt19937_64 rng(13);
  for (int k = 0; k < 50; ++k) {
    const Vec2 t{uniform(rng, -50, 50), uniform(rng, -50, 50)};
    auto pred = square_corners({uniform(rng, -9, 9), uniform(rng, -9, 9)});
    const double e0 = corner_error(pred, square_corners(), dims);
    for (auto& c : pred) c.xy = c.xy + t;
    EXPECT_NEAR(corner_error(pred, square_corners(t), dims), e0, 1e-12);
  }
}

TEST(CornerError, LayoutCornersOfIdenticalLayouts) {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 50; ++k) {
    const auto L = testing::valid_random_layout(rng, 120, 90);
    const ImageSize dims{120, 90};
    EXPECT_EQ(corner_error(layout_corner_points(L, dims, false), layout_corner_points(L, dims, true), dims), 0.0);
  }
}

ContourRaster line_contour(int w, int h, int row) {
  ContourRaster c{Mask(w, h, 0), 1};
  for (int x = 0; x < w; ++x) c.mask(x, row) = 1;
  return c;
}

ProbabilityMap as_map(const Mask& m) {
  ProbabilityMap P(m.width(), m.height(), 0.0f);
  for (std::size_t i = 0; i < m.size(); ++i) P.data()[i] = m.data()[i] ? 1.0f : 0.0f;
  return P;
}

TEST(ContourFscore, PerfectAndEmpty) {
  const auto gt = line_contour(40, 30, 12);
  const auto perfect = contour_fscore({as_map(gt.mask)}, {gt});
  EXPECT_DOUBLE_EQ(perfect.ods, 1.0);
  EXPECT_DOUBLE_EQ(perfect.ois, 1.0);
  for (double f : perfect.f) EXPECT_DOUBLE_EQ(f, 1.0);
  const auto empty = contour_fscore({ProbabilityMap(40, 30, 0.0f)}, {gt});
  EXPECT_EQ(empty.ods, 0.0);
  for (double r : empty.recall) EXPECT_EQ(r, 0.0);
  EXPECT_THROW(contour_fscore({}, {}), Error);
}

TEST(ContourFscore, DilatedPredictionMatchesCounts) {
  const auto gt = line_contour(40, 30, 12);
  const auto dil = dilate_square(gt.mask, 1);
  const auto s = contour_fscore({as_map(dil)}, {gt}, {0.5}, 1.0);
  // 40 truth pixels, 120 predicted; every truth pixel is matched
  EXPECT_DOUBLE_EQ(s.recall[0], 1.0);
  EXPECT_DOUBLE_EQ(s.precision[0], 40.0 / 120.0);
  EXPECT_DOUBLE_EQ(s.f[0], 2 * (1.0 / 3.0) / (1.0 + 1.0 / 3.0));
}

TEST(ContourFscore, OneToOneMatching) {
  // two predicted pixels next to one truth pixel: only one may match
  ContourRaster gt{Mask(10, 10, 0), 1};
  gt.mask(5, 5) = 1;
  ProbabilityMap P(10, 10, 0.0f);
  P(4, 5) = P(6, 5) = 1.0f;
  const auto m = match_contours(P, gt.mask, 0.5, 2.0);
  EXPECT_EQ(m.matched, 1u);
  EXPECT_EQ(m.predicted, 2u);
}

TEST(ContourFscore, OisNeverBelowOds) {
  std::mt19937_64 rng(15);
  for (int set = 0; set < 20; ++set) {
    std::vector<ProbabilityMap> preds;
    std::vector<ContourRaster> gts;
    const int n = 1 + rng() % 4;
    for (int i = 0; i < n; ++i) {
      const auto L = testing::valid_random_layout(rng, 64, 48);
      gts.push_back(layout_to_contour(L, 64, 48, 1));
      auto P = as_map(gts.back().mask);
      for (auto& p : P.data()) p = std::clamp(p + static_cast<float>(uniform(rng, -0.6, 0.6)), 0.0f, 1.0f);
      preds.push_back(std::move(P));
    }
    const auto s = contour_fscore(preds, gts);
    EXPECT_GE(s.ois, s.ods);
    EXPECT_GE(s.ods, 0.0);
    EXPECT_LE(s.ois, 1.0);
  }
}

}  // namespace
}  // namespace cfile
