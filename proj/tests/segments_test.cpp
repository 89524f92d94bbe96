#include <gtest/gtest.h>

#include "cfile/segments.hpp"
#include "cfile/synth.hpp"

namespace cfile {
namespace {

RgbImage square_image() {
  RgbImage img(100, 100, Rgb{255, 255, 255});
  for (int y = 30; y < 70; ++y)
    for (int x = 25; x < 75; ++x) img(x, y) = Rgb{0, 0, 0};
  return img;
}

// Segment lies on the given line: both endpoints within tol.
bool on_line(const LineSegment& s, const Line& l, double tol) {
  return std::abs(l.value(s.p0)) <= tol && std::abs(l.value(s.p1)) <= tol;
}

TEST(DetectLineSegments, BlackSquareSides) {
  const auto segs = detect_line_segments(square_image());
  // square edges sit between pixel centers
  const std::array<Line, 4> sides = {Line(0, 1, -29.5), Line(0, 1, -69.5), Line(1, 0, -24.5),
                                     Line(1, 0, -74.5)};
  const double lengths[4] = {50, 50, 40, 40};
  ASSERT_EQ(segs.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    int hits = 0;
    for (const auto& s : segs)
      if (on_line(s, sides[k], 1.0)) {
        ++hits;
        EXPECT_NEAR(s.length(), lengths[k], 4.0);
        EXPECT_GT(s.strength, 0);
      }
    EXPECT_EQ(hits, 1) << "side " << k;
  }
}

TEST(DetectLineSegments, ConstantImageHasNone) {
  try {
    detect_line_segments(RgbImage(50, 40, Rgb{90, 90, 90}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSegments);
  }
}

TEST(DetectLineSegments, RotationEquivariance) {
  SynthOptions opt;
  opt.dims = {200, 200};
  const auto scene = synthesize_scene(opt, 4);
  const RgbImage& a = scene.image;
  RgbImage b(a.height(), a.width());
  // rotate 90 degrees clockwise: (x, y) -> (h - 1 - y, x)
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) b(a.height() - 1 - y, x) = a(x, y);
  auto angles = [](const std::vector<LineSegment>& segs) {
    std::vector<std::pair<double, double>> out;  // (angle mod 180, length)
    for (const auto& s : segs) {
      double t = rad2deg(std::atan2(s.p1.y - s.p0.y, s.p1.x - s.p0.x));
      t = std::fmod(t + 360.0, 180.0);
      out.emplace_back(t, s.length());
    }
    return out;
  };
  const auto sa = angles(detect_line_segments(a));
  const auto sb = angles(detect_line_segments(b));
  // each long segment of the original has a rotated twin
  int checked = 0;
  for (auto [t, len] : sa) {
    if (len < 40) continue;
    ++checked;
    const double want = std::fmod(t + 90.0, 180.0);
    bool found = false;
    for (auto [u, len2] : sb) {
      double d = std::abs(u - want);
      d = std::min(d, 180 - d);
      if (d < 1.0 && std::abs(len2 - len) < 0.2 * len) found = true;
    }
    EXPECT_TRUE(found) << "angle " << t << " length " << len;
  }
  EXPECT_GT(checked, 2);
}

TEST(DetectLineSegments, FindsRoomEdges) {
  SynthOptions opt;
  opt.dims = {404, 404};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto scene = synthesize_scene(opt, seed);
    const auto segs = detect_line_segments(scene.image);
    for (int r = 0; r < 4; ++r) {
      if (!scene.layout.lines[r]) continue;
      // visible boundary pixels of this line
      const auto runs = rasterize_checked(scene.layout, 404, 404);
      LayoutModel only;
      only.v = scene.layout.v;
      only.lines[r] = scene.layout.lines[r];
      const auto c = layout_to_contour(only, 404, 404, 1);
      const auto full = contour_from_runs(runs, 1);
      int visible = 0;
      for (std::size_t i = 0; i < c.mask.size(); ++i) visible += c.mask.data()[i] && full.mask.data()[i];
      if (visible < 60) continue;
      double best = 0;
      for (const auto& s : segs)
        if (on_line(s, *scene.layout.lines[r], 1.5)) best = std::max(best, s.length());
      EXPECT_GT(best, 30) << "seed " << seed << " role " << r;
    }
  }
}

}  // namespace
}  // namespace cfile
