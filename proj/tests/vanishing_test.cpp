#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "cfile/segments.hpp"
#include "cfile/synth.hpp"
#include "cfile/vanishing.hpp"
#include "test_support.hpp"

namespace cfile {
namespace {

using testing::uniform;

// Segment of length `len` on the ray from `v` at angle `deg`, starting at distance r0.
LineSegment ray_segment(Vec2 v, double deg, double r0, double len, double strength) {
  const Vec2 d{std::cos(deg2rad(deg)), std::sin(deg2rad(deg))};
  return {v + d * r0, v + d * (r0 + len), strength};
}

std::vector<LineSegment> pencil_and_verticals() {
  std::vector<LineSegment> segs;
  const Vec2 v{200, 150};
  for (double a : {10.0, 35.0, 70.0, 110.0, 150.0, 200.0, 230.0, 330.0})
    segs.push_back(ray_segment(v, a, 40, 60, 50));
  for (double x : {40.0, 120.0, 290.0, 360.0}) segs.push_back({{x, 20}, {x, 100}, 40});
  return segs;
}

TEST(EstimateVanishingPoints, PencilPlusVerticals) {
  const auto t = estimate_vanishing_points(pencil_and_verticals(), ImageSize{400, 300});
  ASSERT_TRUE(t.v_horiz1.is_finite());
  EXPECT_LT(norm(t.v_horiz1.euclidean() - Vec2{200, 150}), 3.0);
  EXPECT_TRUE(t.v_vertical.is_ideal());
  EXPECT_TRUE(t.found[kVertical]);
  EXPECT_EQ(t.count[kVertical], 4);
  EXPECT_EQ(t.count[kDepth], 8);
}

TEST(EstimateVanishingPoints, TwoParallelFamiliesAreIdeal) {
  std::vector<LineSegment> segs;
  for (int i = 0; i < 5; ++i) {
    segs.push_back({{20.0 + 30 * i, 10}, {20.0 + 30 * i, 90}, 30});   // vertical family
    segs.push_back({{200, 15.0 + 25 * i}, {300, 15.0 + 25 * i}, 30});  // horizontal family
  }
  const auto t = estimate_vanishing_points(segs, ImageSize{320, 200});
  int ideal = 0;
  for (int k = 0; k < 3; ++k)
    if (t.found[k]) {
      EXPECT_TRUE(t[k].is_ideal()) << k;
      ++ideal;
    }
  EXPECT_EQ(ideal, 2);
  EXPECT_TRUE(t.found[kVertical]);
  EXPECT_NEAR(std::abs(t.v_vertical.xy().y), 1.0, 1e-9);
}

TEST(EstimateVanishingPoints, OrderInvariance) {
  auto segs = pencil_and_verticals();
  const auto a = estimate_vanishing_points(segs, ImageSize{400, 300});
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> perm(segs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<LineSegment> shuffled;
    for (int i : perm) shuffled.push_back(segs[i]);
    const auto b = estimate_vanishing_points(shuffled, ImageSize{400, 300});
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(a.found[k], b.found[k]);
      EXPECT_NEAR(a.support[k], b.support[k], 1e-9);
      EXPECT_TRUE(a[k].is_ideal() == b[k].is_ideal());
      if (a[k].is_finite()) EXPECT_LT(norm(a[k].euclidean() - b[k].euclidean()), 1e-6);
    }
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(b.assignment[i], a.assignment[perm[i]]);
  }
}

TEST(EstimateVanishingPoints, SingleDirectionIsDegenerate) {
  std::vector<LineSegment> segs;
  for (int i = 0; i < 6; ++i) segs.push_back({{10.0 * i, 0}, {10.0 * i, 50}, 10});
  try {
    estimate_vanishing_points(segs, ImageSize{100, 100});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}

// Union inlier strength of three points, counting each segment once.
double triple_strength(const std::vector<LineSegment>& segs, const std::array<Point2, 3>& vps) {
  double total = 0;
  for (const auto& s : segs)
    for (const auto& p : vps)
      if (vp_angle_error(s, p) <= kVpInlierAngle) {
        total += s.strength;
        break;
      }
  return total;
}

TEST(EstimateVanishingPoints, LocallyOptimalOnSyntheticRoom) {
  SynthOptions opt;
  opt.dims = {404, 404};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto scene = synthesize_scene(opt, seed);
    const auto segs = detect_line_segments(scene.image);
    const auto t = estimate_vanishing_points(segs, opt.dims);
    const double got = triple_strength(segs, {t.v_vertical, t.v_horiz1, t.v_horiz2});
    // random candidate triples drawn from pairwise intersections
    const auto frame = detail::frame_of(opt.dims);
    std::mt19937_64 rng(seed);
    int tried = 0;
    while (tried < 100) {
      std::array<Point2, 3> vps;
      for (auto& p : vps) {
        const auto& a = segs[rng() % segs.size()];
        const auto& b = segs[rng() % segs.size()];
        if (same_line(a.carrier(), b.carrier())) p = Point2::ideal(1, 0);
        else p = intersect_lines(a.carrier(), b.carrier());
      }
      if (!detail::admissible({&vps[0], &vps[1], &vps[2]}, frame)) continue;
      ++tried;
      EXPECT_GE(got + 1e-9, triple_strength(segs, vps)) << "seed " << seed;
    }
  }
}

TEST(EstimateVanishingPoints, SyntheticRoomDepthPoint) {
  SynthOptions opt;
  opt.dims = {404, 404};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto scene = synthesize_scene(opt, seed);
    const auto t = estimate_vanishing_points(detect_line_segments(scene.image), opt.dims);
    ASSERT_TRUE(t.found[kDepth]) << seed;
    EXPECT_LT(norm(t.v_horiz1.euclidean() - scene.layout.v.euclidean()), 6.0) << "seed " << seed;
  }
}

TEST(GridSearchCandidates, Counts) {
  const Point2 v0(100, 80);
  const auto g0 = grid_search_candidates(v0, 0, 5);
  ASSERT_EQ(g0.size(), 1u);
  EXPECT_EQ(g0[0].euclidean(), v0.euclidean());
  EXPECT_EQ(grid_search_candidates(v0, 10, 5).size(), 25u);
  EXPECT_EQ(grid_search_candidates(v0, 12, 5).size(), 25u);
  EXPECT_EQ(grid_search_candidates(v0, 20, 5).size(), 81u);
}

TEST(GridSearchCandidates, RowMajorContainsCenterAndSymmetric) {
  const Point2 v0(37.5, -12);
  for (double extent : {0.0, 4.0, 9.0, 20.0})
    for (double step : {1.0, 2.5, 5.0}) {
      const auto g = grid_search_candidates(v0, extent, step);
      std::set<std::pair<long, long>> pts;
      for (const auto& p : g)
        pts.insert({std::lround((p.x() - v0.x()) / step), std::lround((p.y() - v0.y()) / step)});
      EXPECT_EQ(pts.size(), g.size());
      EXPECT_TRUE(pts.count({0, 0}));
      for (auto [i, j] : pts) {
        EXPECT_TRUE(pts.count({-i, j}));
        EXPECT_TRUE(pts.count({i, -j}));
        EXPECT_LE(std::abs(i) * step, extent + 1e-9);
      }
      for (std::size_t k = 1; k < g.size(); ++k) {
        const bool ordered = g[k - 1].y() < g[k].y() ||
                             (g[k - 1].y() == g[k].y() && g[k - 1].x() < g[k].x());
        EXPECT_TRUE(ordered);
      }
    }
  EXPECT_THROW(grid_search_candidates(Point2::ideal(1, 0), 5, 1), Error);
  EXPECT_THROW(grid_search_candidates(v0, 5, 0), Error);
}

// Layout with corners (100,80),(300,80),(300,240),(100,240) and v at the center.
LayoutModel box_layout() {
  LayoutModel L;
  L.v = Point2(200, 160);
  L.lines[0] = join(Vec2{100, 80}, Vec2{300, 80});
  L.lines[1] = join(Vec2{100, 240}, Vec2{300, 240});
  L.lines[2] = join(Vec2{100, 80}, Vec2{100, 240});
  L.lines[3] = join(Vec2{300, 80}, Vec2{300, 240});
  return L;
}

VanishingTriple box_triple() {
  VanishingTriple t;
  t.v_vertical = Point2::ideal(0, 1);
  t.v_horiz1 = Point2(200, 160);
  t.v_horiz2 = Point2::ideal(1, 0);
  t.found = {true, true, true};
  return t;
}

ContourMask own_mask(const LayoutModel& L, ImageSize dims) {
  const auto c = layout_to_contour(L, dims.width, dims.height, 1);
  return {dilate_square(c.mask, 4), 4, false};
}

TEST(SelectCriticalLines, OutsideMaskIsEmpty) {
  const ImageSize dims{400, 320};
  const auto C = own_mask(box_layout(), dims);
  std::vector<LineSegment> segs = {{{150, 120}, {250, 120}, 10}, {{160, 130}, {160, 200}, 10}};
  const auto out = select_critical_lines(segs, box_triple(), C);
  EXPECT_TRUE(out.empty());
}

TEST(SelectCriticalLines, BoxRoomSplitsIntoRoles) {
  const ImageSize dims{400, 320};
  const auto L = box_layout();
  const auto C = own_mask(L, dims);
  std::vector<LineSegment> segs = {{{100, 80}, {300, 80}, 50},
                                   {{100, 240}, {300, 240}, 50},
                                   {{100, 80}, {100, 240}, 40},
                                   {{300, 80}, {300, 240}, 40}};
  const auto out = select_critical_lines(segs, box_triple(), C);
  ASSERT_EQ(out.ceiling.size(), 1u);
  ASSERT_EQ(out.wall.size(), 2u);
  ASSERT_EQ(out.floor.size(), 1u);
  EXPECT_TRUE(same_line(out.ceiling[0].line, *L.lines[0]));
  EXPECT_TRUE(same_line(out.floor[0].line, *L.lines[1]));
  for (const auto* group : {&out.ceiling, &out.wall, &out.floor})
    for (const auto& cl : *group)
      for (const auto& s : cl.support) EXPECT_TRUE(C.at(s.midpoint()));
}

TEST(SelectCriticalLines, DuplicatesMerge) {
  const ImageSize dims{400, 320};
  const auto C = own_mask(box_layout(), dims);
  std::vector<LineSegment> segs = {{{110, 240}, {290, 240}, 30}, {{120, 241}, {280, 241}, 50}};
  const auto out = select_critical_lines(segs, box_triple(), C);
  ASSERT_EQ(out.floor.size(), 1u);
  EXPECT_NEAR(*out.floor[0].line.y_at(200), 241.0, 1e-9);  // stronger one kept
  EXPECT_DOUBLE_EQ(out.floor[0].strength, 80.0);
  EXPECT_EQ(out.floor[0].support.size(), 2u);
}

TEST(SelectCriticalLines, SyntheticRoomEvidenceNearTruth) {
  SynthOptions opt;
  opt.dims = {404, 404};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto scene = synthesize_scene(opt, seed);
    const auto segs = detect_line_segments(scene.image);
    const auto t = estimate_vanishing_points(segs, opt.dims);
    const auto C = binarize_and_dilate(scene.coarse.prob, 0.5, 4);
    const auto out = select_critical_lines(segs, t, C);
    for (const auto* group : {&out.ceiling, &out.wall, &out.floor})
      for (const auto& cl : *group)
        for (const auto& s : cl.support) {
          EXPECT_TRUE(C.at(s.p0) && C.at(s.p1) && C.at(s.midpoint()));
        }
    // the floor line is always visible and unoccluded here
    const Line& l2 = *scene.layout.lines[1];
    bool hit = false;
    for (const auto& cl : out.floor)
      hit |= rad2deg(angle_between(cl.line, l2)) < 2.0 && std::abs(l2.value(cl.anchor())) < 3.0;
    EXPECT_TRUE(hit) << "seed " << seed;
  }
}

}  // namespace
}  // namespace cfile
