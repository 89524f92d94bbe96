#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfile/error.hpp"
#include "cfile/image.hpp"

namespace cfile {

// Tolerance on unit-normalized line coefficients for identity and parallelism.
inline constexpr double kLineTolerance = 1e-9;

struct Vec2 {
  double x = 0, y = 0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  friend double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
  friend double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
  friend double norm(Vec2 a) { return std::hypot(a.x, a.y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Homogeneous image point. Finite points are stored with w = 1, ideal points
/// (directions) with w = 0 and a unit (x, y).
class Point2 {
 public:
  Point2() = default;
  Point2(double x, double y, double w = 1.0) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w))
      fail(ErrorCode::InvalidArgument, "non-finite homogeneous point");
    const double n = std::hypot(x, y);
    if (n == 0.0 && w == 0.0) fail(ErrorCode::InvalidArgument, "zero homogeneous point");
    if (w != 0.0 && std::abs(w) > 1e-12 * n) {
      x_ = x / w;
      y_ = y / w;
      w_ = 1.0;
    } else {
      x_ = x / n;
      y_ = y / n;
      w_ = 0.0;
    }
  }
  Point2(Vec2 p) : Point2(p.x, p.y, 1.0) {}

  static Point2 ideal(double dx, double dy) { return Point2(dx, dy, 0.0); }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double w() const noexcept { return w_; }
  bool is_ideal() const noexcept { return w_ == 0.0; }
  bool is_finite() const noexcept { return w_ != 0.0; }

  Vec2 euclidean() const {
    if (is_ideal()) fail(ErrorCode::InvalidArgument, "ideal point has no euclidean position");
    return {x_, y_};
  }
  // Direction of an ideal point, or position of a finite one.
  Vec2 xy() const noexcept { return {x_, y_}; }

  Point2 normalized() const { return *this; }

 private:
  double x_ = 0, y_ = 0, w_ = 1;
};

/// Homogeneous line a*x + b*y + c*w = 0 with a^2 + b^2 = 1 and the first
/// nonzero of (a, b) positive.
class Line {
 public:
  Line(double a, double b, double c) {
    const double n = std::hypot(a, b);
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(c))
      fail(ErrorCode::InvalidArgument, "degenerate line coefficients");
    a /= n;
    b /= n;
    c /= n;
    const bool flip = std::abs(a) > 1e-12 ? a < 0 : b < 0;
    if (flip) {
      a = -a;
      b = -b;
      c = -c;
    }
    a_ = a;
    b_ = b;
    c_ = c;
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }

  // Signed distance for finite points.
  double value(Vec2 p) const noexcept { return a_ * p.x + b_ * p.y + c_; }
  double value(const Point2& p) const noexcept { return a_ * p.x() + b_ * p.y() + c_ * p.w(); }
  Vec2 direction() const noexcept { return {-b_, a_}; }
  Vec2 normal() const noexcept { return {a_, b_}; }

  std::optional<double> y_at(double x) const {
    if (std::abs(b_) < 1e-12) return std::nullopt;
    return -(a_ * x + c_) / b_;
  }
  std::optional<double> x_at(double y) const {
    if (std::abs(a_) < 1e-12) return std::nullopt;
    return -(b_ * y + c_) / a_;
  }
  Vec2 foot(Vec2 p) const noexcept { return p - normal() * value(p); }

  friend bool operator==(const Line&, const Line&) = default;

 private:
  double a_ = 0, b_ = 1, c_ = 0;
};

inline bool same_line(const Line& m, const Line& n, double tol = kLineTolerance) {
  auto close = [&](double s) {
    return std::abs(m.a() - s * n.a()) <= tol && std::abs(m.b() - s * n.b()) <= tol &&
           std::abs(m.c() - s * n.c()) <= tol;
  };
  return close(1.0) || close(-1.0);
}

/// Line through two points; either may be ideal but not both.
inline Line join(const Point2& p, const Point2& q) {
  const double a = p.y() * q.w() - p.w() * q.y();
  const double b = p.w() * q.x() - p.x() * q.w();
  const double c = p.x() * q.y() - p.y() * q.x();
  if (std::hypot(a, b) <= kLineTolerance)
    fail(ErrorCode::CoincidentPoints, "cannot join coincident points");
  return Line(a, b, c);
}

inline Line join(Vec2 p, Vec2 q) { return join(Point2(p), Point2(q)); }

/// Cross-product intersection; parallel lines meet at an ideal point.
inline Point2 intersect_lines(const Line& m, const Line& n) {
  if (same_line(m, n)) fail(ErrorCode::IdenticalLines, "intersection of identical lines");
  const double x = m.b() * n.c() - m.c() * n.b();
  const double y = m.c() * n.a() - m.a() * n.c();
  double w = m.a() * n.b() - m.b() * n.a();
  if (std::abs(w) <= kLineTolerance) w = 0.0;
  if (w == 0.0) {
    const Vec2 d = m.direction();
    return Point2::ideal(d.x, d.y);
  }
  return Point2(x, y, w);
}

// Acute angle between two lines, radians in [0, pi/2].
inline double angle_between(const Line& m, const Line& n) {
  const double c = std::abs(m.a() * n.a() + m.b() * n.b());
  const double s = std::abs(m.a() * n.b() - m.b() * n.a());
  return std::atan2(s, c);
}

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

struct LineSegment {
  Vec2 p0, p1;
  double strength = 0;

  Vec2 midpoint() const { return (p0 + p1) * 0.5; }
  double length() const { return norm(p1 - p0); }
  Line carrier() const { return join(p0, p1); }
};

// ---------------------------------------------------------------------------
// Layout model

enum class Surface : std::uint8_t { Ceiling = 0, Floor = 1, Left = 2, Center = 3, Right = 4 };
inline constexpr std::uint8_t kUnusedLabel = 255;
inline constexpr std::uint8_t kInconsistentLabel = 254;
inline constexpr int kNumSurfaces = 5;

inline std::uint8_t label_of(Surface s) { return static_cast<std::uint8_t>(s); }

// l1: ceiling | center wall, l2: floor | center wall, l3: left | center, l4: right | center.
enum class LineRole : int { L1 = 0, L2 = 1, L3 = 2, L4 = 3 };
inline constexpr std::array<LineRole, 4> kAllRoles = {LineRole::L1, LineRole::L2, LineRole::L3,
                                                      LineRole::L4};

inline const char* role_name(LineRole r) {
  static constexpr const char* names[] = {"l1", "l2", "l3", "l4"};
  return names[static_cast<int>(r)];
}

// Surface separated from the center wall by the given line.
inline Surface surface_of(LineRole r) {
  static constexpr Surface s[] = {Surface::Ceiling, Surface::Floor, Surface::Left, Surface::Right};
  return s[static_cast<int>(r)];
}

/// Presence pattern of the four boundary lines, written "1111" in l1..l4 order.
class Topology {
 public:
  constexpr Topology() = default;
  constexpr explicit Topology(std::uint8_t mask) : mask_(mask & 0xF) {}

  static Topology from_pattern(const std::string& s) {
    if (s.size() != 4) fail(ErrorCode::ParseError, "topology pattern must have 4 characters");
    std::uint8_t m = 0;
    for (int i = 0; i < 4; ++i) {
      if (s[i] == '1')
        m |= std::uint8_t(1u << i);
      else if (s[i] != '0')
        fail(ErrorCode::ParseError, "topology pattern must be 0/1");
    }
    return Topology(m);
  }

  std::string pattern() const {
    std::string s(4, '0');
    for (int i = 0; i < 4; ++i)
      if (mask_ & (1u << i)) s[i] = '1';
    return s;
  }

  constexpr bool has(LineRole r) const { return mask_ & (1u << static_cast<int>(r)); }
  constexpr bool has_surface(Surface s) const {
    switch (s) {
      case Surface::Center: return true;
      case Surface::Ceiling: return has(LineRole::L1);
      case Surface::Floor: return has(LineRole::L2);
      case Surface::Left: return has(LineRole::L3);
      case Surface::Right: return has(LineRole::L4);
    }
    return false;
  }
  constexpr std::uint8_t mask() const { return mask_; }
  friend constexpr bool operator==(Topology, Topology) = default;

 private:
  std::uint8_t mask_ = 0;
};

struct LayoutModel {
  std::array<std::optional<Line>, 4> lines;
  Point2 v;

  const std::optional<Line>& line(LineRole r) const { return lines[static_cast<int>(r)]; }
  std::optional<Line>& line(LineRole r) { return lines[static_cast<int>(r)]; }

  Topology topology() const {
    std::uint8_t m = 0;
    for (int i = 0; i < 4; ++i)
      if (lines[i]) m |= std::uint8_t(1u << i);
    return Topology(m);
  }
};

/// Affine remap x' = sx*x + tx, y' = sy*y + ty applied to a layout.
inline Line transform_line(const Line& l, double sx, double tx, double sy, double ty) {
  return Line(l.a() / sx, l.b() / sy, l.c() - l.a() * tx / sx - l.b() * ty / sy);
}

inline LayoutModel transform_layout(const LayoutModel& L, double sx, double tx, double sy,
                                    double ty) {
  LayoutModel out;
  for (int i = 0; i < 4; ++i)
    if (L.lines[i]) out.lines[i] = transform_line(*L.lines[i], sx, tx, sy, ty);
  if (L.v.is_finite())
    out.v = Point2(sx * L.v.x() + tx, sy * L.v.y() + ty);
  else
    out.v = Point2::ideal(sx * L.v.x(), sy * L.v.y());
  return out;
}

/// Mirror about the vertical image axis x -> (width - 1) - x; swaps l3 and l4.
inline LayoutModel mirror_horizontal(const LayoutModel& L, int width) {
  LayoutModel m = transform_layout(L, -1.0, width - 1.0, 1.0, 0.0);
  std::swap(m.lines[2], m.lines[3]);
  return m;
}

/// Maps a layout between two resolutions under pixel-center aligned resampling.
inline LayoutModel rescale_layout(const LayoutModel& L, ImageSize from, ImageSize to) {
  const double sx = double(to.width) / from.width;
  const double sy = double(to.height) / from.height;
  return transform_layout(L, sx, 0.5 * sx - 0.5, sy, 0.5 * sy - 0.5);
}

// ---------------------------------------------------------------------------
// Rasterization

struct LabelRun {
  int x0 = 0, x1 = -1;  // inclusive
  std::uint8_t label = 0;
};

/// Run-length labeling: each row is tiled left to right by runs of distinct labels.
struct LabelRuns {
  int width = 0, height = 0;
  std::vector<LabelRun> runs;
  std::vector<int> row_begin;  // height + 1 offsets into runs
  bool consistent = true;

  std::span<const LabelRun> row(int y) const {
    return {runs.data() + row_begin[y], static_cast<std::size_t>(row_begin[y + 1] - row_begin[y])};
  }
};

// Monotone in atan2 over [0, 4) without trig.
inline double pseudo_angle(Vec2 d) {
  const double s = std::abs(d.x) + std::abs(d.y);
  if (s == 0) return 0;
  if (d.y >= 0) return d.x >= 0 ? d.y / s : 1 - d.x / s;
  return d.x < 0 ? 2 - d.y / s : 3 + d.x / s;
}

/// Precomputed form of a LayoutModel for per-pixel classification.
///
/// Pixels inside every present line (on v's side) are center wall. Any other
/// pixel is assigned by the angular sector around v it falls in; sectors are
/// bounded by the rays from v through the corners p1 (l1,l3), p4 (l1,l4),
/// p3 (l2,l4), p2 (l2,l3). When a corner's line is absent the ray runs
/// parallel to the present line. On-line ties go to the lower label id.
class CompiledLayout {
 public:
  explicit CompiledLayout(const LayoutModel& L) { compile(L); }

  bool well_formed() const noexcept { return ok_; }
  const std::string& problem() const noexcept { return problem_; }
  Topology topology() const noexcept { return topology_; }
  Vec2 v() const noexcept { return v_; }
  // Outward boundary direction at corner k (0..3 = p1, p2, p3, p4).
  Vec2 ray(int k) const noexcept { return ray_[k]; }

  std::uint8_t classify(double x, double y) const {
    bool inside = true;
    for (int i = 0; i < 4; ++i) {
      if (!present_[i]) continue;
      const double val = a_[i] * x + b_[i] * y + c_[i];
      // l4 ties resolve to center (3 < 4); the others to the outer surface.
      if (i == 3 ? val < 0 : val <= 0) {
        inside = false;
        break;
      }
    }
    if (inside) return label_of(Surface::Center);
    const Vec2 u{x - v_.x, y - v_.y};
    double r = pseudo_angle(u) - base_;
    if (r < 0) r += 4;
    int role;
    if (r <= rel_[3])
      role = 0;  // top sector, ceiling
    else if (r < rel_[2])
      role = 3;  // right
    else if (r <= rel_[1])
      role = 1;  // bottom, floor
    else
      role = 2;  // left
    if (!present_[role]) return kInconsistentLabel;
    const double val = a_[role] * x + b_[role] * y + c_[role];
    if (val > 1e-7) return kInconsistentLabel;
    return label_of(surface_of(static_cast<LineRole>(role)));
  }

  LabelRuns rasterize(int width, int height) const {
    LabelRuns out;
    out.width = width;
    out.height = height;
    out.row_begin.reserve(height + 1);
    out.runs.reserve(static_cast<std::size_t>(height) * 8);
    std::vector<std::pair<int, int>> dense;
    dense.reserve(16);
    for (int y = 0; y < height; ++y) {
      out.row_begin.push_back(static_cast<int>(out.runs.size()));
      dense.clear();
      auto add_break = [&](double bx) {
        if (!std::isfinite(bx) || bx < -2.0 || bx > width + 1.0) return;
        const int lo = std::max(0, static_cast<int>(std::floor(bx)) - 1);
        const int hi = std::min(width - 1, static_cast<int>(std::ceil(bx)) + 1);
        if (lo <= hi) dense.emplace_back(lo, hi);
      };
      for (int i = 0; i < 4; ++i)
        if (present_[i] && a_[i] != 0.0) add_break(-(b_[i] * y + c_[i]) / a_[i]);
      for (int k = 0; k < 4; ++k) {
        // carrier of the ray through v: -d.y * (x - vx) + d.x * (y - vy) = 0
        const Vec2 d = ray_[k];
        if (d.y != 0.0) add_break(v_.x + d.x * (y - v_.y) / d.y);
      }
      std::sort(dense.begin(), dense.end());
      std::size_t merged = 0;
      for (std::size_t i = 0; i < dense.size(); ++i) {
        if (merged > 0 && dense[i].first <= dense[merged - 1].second + 1)
          dense[merged - 1].second = std::max(dense[merged - 1].second, dense[i].second);
        else
          dense[merged++] = dense[i];
      }
      dense.resize(merged);

      auto emit = [&](int x0, int x1, std::uint8_t lab) {
        if (lab == kInconsistentLabel) out.consistent = false;
        const int begin = out.row_begin.back();
        if (static_cast<int>(out.runs.size()) > begin && out.runs.back().label == lab)
          out.runs.back().x1 = x1;
        else
          out.runs.push_back({x0, x1, lab});
      };
      int x = 0;
      std::size_t idx = 0;
      while (x < width) {
        if (idx < dense.size() && x >= dense[idx].first) {
          for (int xx = x; xx <= dense[idx].second; ++xx) emit(xx, xx, classify(xx, y));
          x = dense[idx].second + 1;
          ++idx;
        } else {
          const int end = idx < dense.size() ? dense[idx].first - 1 : width - 1;
          emit(x, end, classify(x, y));
          x = end + 1;
        }
      }
    }
    out.row_begin.push_back(static_cast<int>(out.runs.size()));
    return out;
  }

 private:
  void reject(const char* why) {
    ok_ = false;
    problem_ = why;
  }

  void compile(const LayoutModel& L) {
    topology_ = L.topology();
    if (L.v.is_ideal()) return reject("vanishing point must be finite");
    v_ = L.v.euclidean();
    for (int i = 0; i < 4; ++i) {
      present_[i] = L.lines[i].has_value();
      if (!present_[i]) continue;
      const Line& ln = *L.lines[i];
      double a = ln.a(), b = ln.b(), c = ln.c();
      const double val = ln.value(v_);
      if (std::abs(val) < 1e-9) return reject("vanishing point lies on a boundary line");
      if (val < 0) {
        a = -a;
        b = -b;
        c = -c;
      }
      a_[i] = a;
      b_[i] = b;
      c_[i] = c;
      lines_[i] = ln;
      // v must sit on the center-wall side of every present line.
      if (i < 2) {
        const auto yl = ln.y_at(v_.x);
        if (!yl || std::abs(ln.b()) < 1e-9) return reject("ceiling/floor line is vertical");
        if (i == 0 && !(*yl < v_.y)) return reject("vanishing point above ceiling line");
        if (i == 1 && !(*yl > v_.y)) return reject("vanishing point below floor line");
      } else {
        const auto xl = ln.x_at(v_.y);
        if (!xl || std::abs(ln.a()) < 1e-9) return reject("wall line is horizontal");
        if (i == 2 && !(*xl < v_.x)) return reject("vanishing point left of l3");
        if (i == 3 && !(*xl > v_.x)) return reject("vanishing point right of l4");
      }
    }
    // corner k: horizontal role, vertical role, outward signs
    static constexpr int kH[4] = {0, 1, 1, 0};
    static constexpr int kV[4] = {2, 2, 3, 3};
    static constexpr double kSx[4] = {-1, -1, 1, 1};
    static constexpr double kSy[4] = {-1, 1, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const bool hp = present_[kH[k]], vp = present_[kV[k]];
      Vec2 d;
      if (hp && vp) {
        const Point2 p = intersect_lines(*lines_[kH[k]], *lines_[kV[k]]);
        if (p.is_ideal()) return reject("parallel adjacent boundary lines");
        d = p.euclidean() - v_;
      } else if (hp) {
        d = lines_[kH[k]]->direction();
        if (d.x * kSx[k] < 0) d = -d;
      } else if (vp) {
        d = lines_[kV[k]]->direction();
        if (d.y * kSy[k] < 0) d = -d;
      } else {
        d = {kSx[k], kSy[k]};
      }
      if (norm(d) < 1e-9) return reject("corner coincides with vanishing point");
      ray_[k] = d * (1.0 / norm(d));
    }
    // An absent line leaves an empty sector. When the rays bounding it cross
    // (its two neighbor lines converge on that side) they collapse into one ray
    // towards the meeting point of the neighbors.
    // clockwise corner pair per absent role and the neighbor line behind each
    static constexpr int kPairA[4] = {0, 2, 1, 3}, kPairB[4] = {3, 1, 0, 2};
    static constexpr int kNbA[4] = {2, 3, 1, 0}, kNbB[4] = {3, 2, 0, 1};
    std::array<bool, 4> collapsed{};
    for (int i = 0; i < 4; ++i) {
      if (present_[i]) continue;
      const int a = kPairA[i], b = kPairB[i];
      if (cross(ray_[a], ray_[b]) > 1e-12) continue;
      Vec2 d = present_[kNbA[i]] ? ray_[a] : ray_[b];
      if (present_[kNbA[i]] && present_[kNbB[i]]) {
        const Point2 q = intersect_lines(*lines_[kNbA[i]], *lines_[kNbB[i]]);
        if (q.is_finite() && norm(q.euclidean() - v_) > 1e-9) {
          const Vec2 dq = q.euclidean() - v_;
          if (dot(dq, ray_[a] + ray_[b]) > 0) d = dq * (1.0 / norm(dq));
        }
      }
      ray_[a] = ray_[b] = d;
      collapsed[i] = true;
    }
    base_ = pseudo_angle(ray_[0]);
    for (int k = 0; k < 4; ++k) {
      double r = pseudo_angle(ray_[k]) - base_;
      if (r < 0) r += 4;
      rel_[k] = r;
    }
    if (collapsed[2]) rel_[1] = 4;  // p2 shares p1's ray: empty left sector
    // clockwise on screen: p1 -> p4 -> p3 -> p2
    auto before = [&](double lo, double hi, bool may_touch) {
      return may_touch ? lo <= hi : lo < hi;
    };
    if (!(before(0, rel_[3], collapsed[0]) && before(rel_[3], rel_[2], collapsed[3]) &&
          before(rel_[2], rel_[1], collapsed[1]) && before(rel_[1], 4, collapsed[2])))
      return reject("corner rays out of order");
  }

  bool ok_ = true;
  std::string problem_;
  Topology topology_;
  Vec2 v_;
  std::array<bool, 4> present_{};
  std::array<std::optional<Line>, 4> lines_;
  std::array<double, 4> a_{}, b_{}, c_{};
  std::array<Vec2, 4> ray_{};
  std::array<double, 4> rel_{};
  double base_ = 0;
};

/// Per-pixel surface labels in {0..4}; 255 marks unused pixels.
class SurfaceLabeling : public Image<std::uint8_t> {
 public:
  using Image<std::uint8_t>::Image;
  SurfaceLabeling(Image<std::uint8_t> img) : Image<std::uint8_t>(std::move(img)) {}
};

inline SurfaceLabeling to_labeling(const LabelRuns& runs) {
  SurfaceLabeling out(runs.width, runs.height, kUnusedLabel);
  for (int y = 0; y < runs.height; ++y) {
    auto row = out.row(y);
    for (const auto& r : runs.row(y)) std::fill(row.begin() + r.x0, row.begin() + r.x1 + 1, r.label);
  }
  return out;
}

/// Every label class forms at most one 4-connected region.
/// True when every label class is one 4-connected region, ignoring components
/// of at most max_speck pixels (isolated lattice points at a region's apex).
inline bool labels_connected(const LabelRuns& runs, int max_speck = 0) {
  std::vector<int> parent(runs.runs.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int y = 1; y < runs.height; ++y) {
    const int ua = runs.row_begin[y - 1], ea = runs.row_begin[y];
    const int ub = runs.row_begin[y], eb = runs.row_begin[y + 1];
    int i = ua, j = ub;
    while (i < ea && j < eb) {
      const auto& a = runs.runs[i];
      const auto& b = runs.runs[j];
      if (a.label == b.label && std::max(a.x0, b.x0) <= std::min(a.x1, b.x1))
        parent[find(i)] = find(j);
      if (a.x1 < b.x1)
        ++i;
      else
        ++j;
    }
  }
  std::vector<long> size(runs.runs.size(), 0);
  for (std::size_t i = 0; i < runs.runs.size(); ++i)
    size[find(static_cast<int>(i))] += runs.runs[i].x1 - runs.runs[i].x0 + 1;
  std::array<int, 256> root;
  root.fill(-1);
  for (std::size_t i = 0; i < runs.runs.size(); ++i) {
    const int r = find(static_cast<int>(i));
    if (size[r] <= max_speck) continue;
    int& slot = root[runs.runs[i].label];
    if (slot == -1)
      slot = r;
    else if (slot != r)
      return false;
  }
  return true;
}

struct BoundarySpan {
  int y = 0, x0 = 0, x1 = -1;
};

/// Pixels with a 4-neighbor of a different label, keeping only the lower-label
/// side of each adjacency, as horizontal spans.
inline std::vector<BoundarySpan> boundary_spans(const LabelRuns& runs) {
  std::vector<BoundarySpan> out;
  out.reserve(static_cast<std::size_t>(runs.height) * 4);
  for (int y = 0; y < runs.height; ++y) {
    const auto row = runs.row(y);
    for (std::size_t i = 1; i < row.size(); ++i) {
      const auto& a = row[i - 1];
      const auto& b = row[i];
      if (a.label < b.label)
        out.push_back({y, a.x1, a.x1});
      else
        out.push_back({y, b.x0, b.x0});
    }
    if (y + 1 >= runs.height) continue;
    const auto next = runs.row(y + 1);
    std::size_t i = 0, j = 0;
    while (i < row.size() && j < next.size()) {
      const auto& a = row[i];
      const auto& b = next[j];
      const int lo = std::max(a.x0, b.x0), hi = std::min(a.x1, b.x1);
      if (lo <= hi && a.label != b.label) out.push_back({a.label < b.label ? y : y + 1, lo, hi});
      if (a.x1 < b.x1)
        ++i;
      else
        ++j;
    }
  }
  return out;
}

// Square stroke offsets for an integer line width: [lo, lo + width - 1].
inline int stroke_low(int line_width) { return -((line_width - 1) / 2); }

struct ContourRaster {
  Mask mask;
  int line_width = 1;

  int width() const { return mask.width(); }
  int height() const { return mask.height(); }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), 1));
  }
};

inline ContourRaster contour_from_runs(const LabelRuns& runs, int line_width) {
  ContourRaster out{Mask(runs.width, runs.height, 0), line_width};
  const int lo = stroke_low(line_width), hi = lo + line_width - 1;
  for (const auto& s : boundary_spans(runs)) {
    const int y0 = std::max(0, s.y + lo), y1 = std::min(runs.height - 1, s.y + hi);
    const int x0 = std::max(0, s.x0 + lo), x1 = std::min(runs.width - 1, s.x1 + hi);
    for (int y = y0; y <= y1; ++y) {
      auto row = out.mask.row(y);
      std::fill(row.begin() + x0, row.begin() + x1 + 1, std::uint8_t{1});
    }
  }
  return out;
}

inline LabelRuns rasterize_checked(const LayoutModel& L, int width, int height) {
  if (width < 2 || height < 2) fail(ErrorCode::InvalidArgument, "raster must be at least 2x2");
  const CompiledLayout c(L);
  if (!c.well_formed()) fail(ErrorCode::InvalidTopology, c.problem());
  LabelRuns runs = c.rasterize(width, height);
  if (!runs.consistent)
    fail(ErrorCode::InvalidTopology, "region partition contradicts the ray ordering");
  return runs;
}

inline SurfaceLabeling layout_to_labeling(const LayoutModel& L, int width, int height) {
  return to_labeling(rasterize_checked(L, width, height));
}

inline ContourRaster layout_to_contour(const LayoutModel& L, int width, int height,
                                       int line_width) {
  if (line_width < 1) fail(ErrorCode::InvalidArgument, "line width must be >= 1");
  return contour_from_runs(rasterize_checked(L, width, height), line_width);
}

// ---------------------------------------------------------------------------
// Corners

enum class CornerStatus { Inside, OutOfBounds, Ideal };

struct Corner {
  std::string id;  // p1..p4 (line intersections), e1..e4 (border exits)
  Point2 point;
  CornerStatus status = CornerStatus::Inside;
};

// Liang-Barsky clip of origin + t*dir against [0, w-1] x [0, h-1]; returns
// the exit point. With bounded_below the parameter is restricted to t >= 0.
inline std::optional<Vec2> border_exit(Vec2 origin, Vec2 dir, int width, int height,
                                       bool bounded_below) {
  double t0 = bounded_below ? 0.0 : -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double lo[2] = {0.0, 0.0};
  const double hi[2] = {width - 1.0, height - 1.0};
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  for (int i = 0; i < 2; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < lo[i] || o[i] > hi[i]) return std::nullopt;
      continue;
    }
    double ta = (lo[i] - o[i]) / d[i];
    double tb = (hi[i] - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || !std::isfinite(t1)) return std::nullopt;
  return origin + dir * t1;
}

inline bool in_image(Vec2 p, int width, int height, double eps = 1e-9) {
  return p.x >= -eps && p.y >= -eps && p.x <= width - 1 + eps && p.y <= height - 1 + eps;
}

inline std::vector<Corner> extract_corners(const LayoutModel& L, int width, int height) {
  const CompiledLayout c(L);
  if (!c.well_formed()) fail(ErrorCode::InvalidTopology, c.problem());
  static constexpr int kH[4] = {0, 1, 1, 0};
  static constexpr int kV[4] = {2, 2, 3, 3};
  // the other corner sharing the horizontal / vertical line
  static constexpr int kAcrossH[4] = {3, 2, 1, 0};
  static constexpr int kAcrossV[4] = {1, 0, 3, 2};
  std::array<std::optional<Vec2>, 4> finite;
  for (int k = 0; k < 4; ++k)
    if (L.lines[kH[k]] && L.lines[kV[k]]) {
      const Point2 p = intersect_lines(*L.lines[kH[k]], *L.lines[kV[k]]);
      if (p.is_finite()) finite[k] = p.euclidean();
    }
  std::vector<Corner> out;
  for (int k = 0; k < 4; ++k) {
    Corner cn{"p" + std::to_string(k + 1), Point2::ideal(c.ray(k).x, c.ray(k).y),
              CornerStatus::Ideal};
    if (finite[k]) {
      cn.point = Point2(*finite[k]);
      cn.status = in_image(*finite[k], width, height) ? CornerStatus::Inside
                                                      : CornerStatus::OutOfBounds;
    }
    out.push_back(cn);
  }
  for (int k = 0; k < 4; ++k) {
    Corner cn{"e" + std::to_string(k + 1), Point2::ideal(c.ray(k).x, c.ray(k).y),
              CornerStatus::Ideal};
    const Vec2 d = c.ray(k);
    std::optional<Vec2> exit;
    std::optional<Vec2> origin;
    bool bounded = true;
    if (finite[k]) {
      origin = finite[k];
    } else if (L.lines[kH[k]] || L.lines[kV[k]]) {
      // boundary follows the present line from its other corner, if any
      const int across = L.lines[kH[k]] ? kAcrossH[k] : kAcrossV[k];
      const Line& ln = L.lines[kH[k]] ? *L.lines[kH[k]] : *L.lines[kV[k]];
      if (finite[across]) {
        origin = finite[across];
      } else {
        origin = ln.foot(c.v());
        bounded = false;
      }
    }
    if (origin) {
      exit = border_exit(*origin, d, width, height, bounded);
      if (exit) {
        cn.point = Point2(*exit);
        cn.status = CornerStatus::Inside;
      } else {
        cn.point = Point2(*origin);
        cn.status = CornerStatus::OutOfBounds;
      }
    }
    out.push_back(cn);
  }
  return out;
}

}  // namespace cfile
