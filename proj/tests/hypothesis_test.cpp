#include <gtest/gtest.h>

#include <random>

#include "cfile/hypothesis.hpp"
#include "cfile/synth.hpp"
#include "test_support.hpp"

namespace cfile {
namespace {

using testing::brute_connected;
using testing::brute_labeling;
using testing::uniform;

const ImageSize kDims{400, 320};

LayoutModel box_layout() {
  LayoutModel L;
  L.v = Point2(200, 160);
  L.lines[0] = join(Vec2{100, 80}, Vec2{300, 80});
  L.lines[1] = join(Vec2{100, 240}, Vec2{300, 240});
  L.lines[2] = join(Vec2{100, 80}, Vec2{100, 240});
  L.lines[3] = join(Vec2{300, 80}, Vec2{300, 240});
  return L;
}

CriticalLineSet one_per_role(const LayoutModel& L) {
  CriticalLineSet crit;
  for (auto r : kAllRoles)
    if (L.line(r)) crit.original.push_back({*L.line(r), r, Provenance::Original, 10});
  return crit;
}

// Independent validity: per-pixel classifier has no contradictions, each class
// is one BFS component, and the ordering rules hold by direct substitution.
bool oracle_valid(const LayoutModel& L, ImageSize dims) {
  const CompiledLayout c(L);
  if (!c.well_formed()) return false;
  const auto lab = brute_labeling(L, dims.width, dims.height);
  for (auto p : lab.data())
    if (p == kInconsistentLabel) return false;
  if (!brute_connected(lab, kMaxSpeckPixels)) return false;
  const Vec2 v = L.v.euclidean();
  const double cx = 0.5 * (dims.width - 1);
  auto y = [](const Line& l, double x) { return -(l.a() * x + l.c()) / l.b(); };
  auto x = [](const Line& l, double yy) { return -(l.b() * yy + l.c()) / l.a(); };
  const auto &l1 = L.lines[0], &l2 = L.lines[1], &l3 = L.lines[2], &l4 = L.lines[3];
  if (l1 && std::abs(l1->b()) < 1e-12) return false;
  if (l2 && std::abs(l2->b()) < 1e-12) return false;
  if (l3 && std::abs(l3->a()) < 1e-12) return false;
  if (l4 && std::abs(l4->a()) < 1e-12) return false;
  if (l1 && l2 && y(*l1, cx) >= y(*l2, cx)) return false;
  if (l1 && y(*l1, v.x) >= v.y) return false;
  if (l2 && y(*l2, v.x) <= v.y) return false;
  if (l3 && x(*l3, v.y) >= v.x) return false;
  if (l4 && x(*l4, v.y) <= v.x) return false;
  return true;
}

TEST(ValidateHypothesis, GroundTruthScenesAreValid) {
  SynthOptions opt;
  opt.dims = {404, 404};
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    EXPECT_TRUE(validate_hypothesis(synthesize_scene(opt, seed).layout, opt.dims)) << seed;
}

TEST(ValidateHypothesis, SwappedCeilingAndFloor) {
  auto L = box_layout();
  EXPECT_TRUE(validate_hypothesis(L, kDims));
  std::swap(L.lines[0], L.lines[1]);
  EXPECT_FALSE(validate_hypothesis(L, kDims));
}

TEST(ValidateHypothesis, MatchesRasterOracleOnRandomAssignments) {
  SynthOptions opt;
  opt.dims = {160, 160};
  std::mt19937_64 rng(17);
  int valid = 0, total = 0;
  for (std::uint64_t seed = 1; total < 100; ++seed) {
    const auto scene = synthesize_scene(opt, seed);
    std::vector<Line> pool;
    for (const auto& l : scene.layout.lines)
      if (l) pool.push_back(*l);
    for (int k = 0; k < 10; ++k) {
      LayoutModel L;
      L.v = Point2(scene.layout.v.euclidean() + Vec2{uniform(rng, -20, 20), uniform(rng, -20, 20)});
      for (int r = 0; r < 4; ++r)
        if (rng() % 3) {
          const Line& base = pool[rng() % pool.size()];
          L.lines[r] = Line(base.a(), base.b(), base.c() + uniform(rng, -15, 15));
        }
      const bool got = validate_hypothesis(L, opt.dims);
      EXPECT_EQ(got, oracle_valid(L, opt.dims)) << "seed " << seed << " k " << k;
      valid += got;
      ++total;
    }
  }
  EXPECT_GT(valid, 5);  // the sample is not trivially all-invalid
}

// Left wall and floor meet within 0.01 px of pixel (114, 368), which ends up
// as a lone center pixel; the layout itself is sound.
TEST(ValidateHypothesis, CornerSpeckIsTolerated) {
  LayoutModel L;
  L.v = Point2(192.776657, 242.035096);
  L.lines[0] = Line(0.00803282041952, -0.999967736378, 97.4953332763);
  L.lines[1] = Line(0.00831775064791, 0.999965406914, -368.943738887);
  L.lines[2] = Line(0.99988312975, 0.0152881274584, -119.609800878);
  const ImageSize dims{404, 404};
  const auto runs = CompiledLayout(L).rasterize(dims.width, dims.height);
  const auto lab = to_labeling(runs);
  EXPECT_EQ(lab(114, 368), label_of(Surface::Center));
  EXPECT_NE(lab(115, 368), label_of(Surface::Center));
  EXPECT_NE(lab(114, 367), label_of(Surface::Center));
  EXPECT_FALSE(labels_connected(runs));
  EXPECT_TRUE(labels_connected(runs, kMaxSpeckPixels));
  EXPECT_TRUE(validate_hypothesis(L, dims));
  EXPECT_TRUE(oracle_valid(L, dims));
}

TEST(EnumerateHypotheses, OnePerRoleCountsTopologies) {
  const auto L = box_layout();
  int expected = 0;
  for (int mask = 1; mask < 16; ++mask) {
    LayoutModel sub;
    sub.v = L.v;
    for (int r = 0; r < 4; ++r)
      if (mask & (1 << r)) sub.lines[r] = L.lines[r];
    expected += oracle_valid(sub, kDims);
  }
  const auto H = enumerate_hypotheses(one_per_role(L), {L.v}, kDims);
  EXPECT_EQ(static_cast<int>(H.size()), expected);
  EXPECT_EQ(H.topology_counts.at("1111"), 1);
  // the strongest combination comes first
  EXPECT_EQ(H.hypotheses[0].topology().pattern(), "1111");
  for (const auto& h : H.hypotheses) EXPECT_NO_THROW(rasterize_checked(h, kDims.width, kDims.height));
}

TEST(EnumerateHypotheses, SecondFloorLineDoublesFloorTopologies) {
  const auto L = box_layout();
  auto crit = one_per_role(L);
  const auto base = enumerate_hypotheses(crit, {L.v}, kDims);
  crit.occluded.push_back({join(Vec2{100, 250}, Vec2{300, 248}), LineRole::L2, Provenance::Occluded, 5});
  const auto more = enumerate_hypotheses(crit, {L.v}, kDims);
  for (const auto& [pattern, count] : base.topology_counts) {
    const int want = pattern[1] == '1' ? 2 * count : count;
    EXPECT_EQ(more.topology_counts.at(pattern), want) << pattern;
  }
  EXPECT_GE(more.provenance_counts.at("oco" "o"), 1);
}

TEST(EnumerateHypotheses, EmptySetHasNoHypothesis) {
  try {
    enumerate_hypotheses(CriticalLineSet{}, {Point2(10, 10)}, kDims);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidHypothesis);
  }
}

TEST(EnumerateHypotheses, DeterministicAndMonotone) {
  const auto L = box_layout();
  auto crit = one_per_role(L);
  const auto vs = grid_search_candidates(L.v, 10, 5);
  std::mt19937_64 rng(2);
  std::size_t last = 0;
  for (int step = 0; step < 6; ++step) {
    const auto a = enumerate_hypotheses(crit, vs, kDims, 1000000);
    const auto b = enumerate_hypotheses(crit, vs, kDims, 1000000);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a.hypotheses[i].v.euclidean(), b.hypotheses[i].v.euclidean());
      for (int r = 0; r < 4; ++r) EXPECT_EQ(a.hypotheses[i].lines[r], b.hypotheses[i].lines[r]);
    }
    EXPECT_GE(a.size(), last);
    last = a.size();
    const auto role = kAllRoles[rng() % 4];
    const Line& base = *L.line(role);
    crit.undetected.push_back({Line(base.a(), base.b(), base.c() + uniform(rng, 6, 20)), role,
                               Provenance::Undetected, 1});
  }
}

TEST(EnumerateHypotheses, CapKeepsStrongestCombinations) {
  const auto L = box_layout();
  auto crit = one_per_role(L);
  crit.undetected.push_back({Line(0, 1, -250), LineRole::L2, Provenance::Undetected, 1});
  const auto vs = grid_search_candidates(L.v, 20, 5);
  const auto H = enumerate_hypotheses(crit, vs, kDims, 100);
  EXPECT_EQ(H.size(), 100u);
  EXPECT_TRUE(H.capped);
  for (std::size_t i = 1; i < H.size(); ++i) EXPECT_LE(H.info[i].strength, H.info[i - 1].strength);
  // the full-strength combination fills the first grid pass
  for (std::size_t i = 0; i < 81; ++i) EXPECT_EQ(H.hypotheses[i].topology().pattern(), "1111");
}

TEST(EnumerateHypotheses, NoIdenticalMembers) {
  const auto L = box_layout();
  auto crit = one_per_role(L);
  // near-duplicate of l2 and repeated v candidates collapse
  crit.occluded.push_back({Line(0, 1, -240.5), LineRole::L2, Provenance::Occluded, 1});
  const auto H = enumerate_hypotheses(crit, {L.v, Point2(200.3, 160.2), Point2(205, 160)}, kDims);
  const Vec2 ref{199.5, 159.5};
  for (std::size_t i = 0; i < H.size(); ++i)
    for (std::size_t j = i + 1; j < H.size(); ++j) {
      const auto &a = H.hypotheses[i], &b = H.hypotheses[j];
      bool same = norm(a.v.euclidean() - b.v.euclidean()) < 1.0;
      for (int r = 0; r < 4 && same; ++r) {
        if (a.lines[r].has_value() != b.lines[r].has_value()) same = false;
        else if (a.lines[r] && !near_duplicate(*a.lines[r], *b.lines[r], ref)) same = false;
      }
      EXPECT_FALSE(same) << i << " " << j;
    }
}

}  // namespace
}  // namespace cfile
