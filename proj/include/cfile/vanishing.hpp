#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"

namespace cfile {

inline constexpr double kVpInlierAngle = 2.0;  // degrees
inline constexpr double kDedupAngle = 2.0;     // degrees
inline constexpr double kDedupOffset = 5.0;    // pixels

enum VpGroup : int { kVertical = 0, kDepth = 1, kLateral = 2, kNoGroup = -1 };

/// Manhattan vanishing points. v_horiz1 is the depth direction (the layout's
/// v), v_horiz2 the lateral one. Directions without evidence get a placeholder
/// and found[k] = false.
struct VanishingTriple {
  Point2 v_vertical = Point2::ideal(0, 1);
  Point2 v_horiz1;
  Point2 v_horiz2 = Point2::ideal(1, 0);
  std::array<bool, 3> found{};
  std::array<double, 3> support{};  // summed inlier strength
  std::array<int, 3> count{};
  std::vector<int> assignment;  // per input segment: VpGroup

  const Point2& operator[](int k) const {
    return k == kVertical ? v_vertical : k == kDepth ? v_horiz1 : v_horiz2;
  }
  Point2& operator[](int k) { return k == kVertical ? v_vertical : k == kDepth ? v_horiz1 : v_horiz2; }
  double total_support() const { return support[0] + support[1] + support[2]; }
};

inline constexpr double kVpClearance = 10.0;  // pixels between a segment and its own vp

// Angle in degrees between a segment and the direction from its midpoint to vp.
// A point on or next to the segment is never its vanishing point (it would
// otherwise attract every segment ending at a junction): 90 is returned.
inline double vp_angle_error(const LineSegment& s, const Point2& vp) {
  const Vec2 d = s.p1 - s.p0;
  Vec2 to;
  if (vp.is_ideal()) {
    to = vp.xy();
  } else {
    const Vec2 p = vp.euclidean();
    const double t = std::clamp(dot(p - s.p0, d) / dot(d, d), 0.0, 1.0);
    if (norm(p - (s.p0 + d * t)) < kVpClearance) return 90.0;
    to = p - s.midpoint();
  }
  const double c = std::abs(dot(d, to)) / (norm(d) * norm(to));
  return rad2deg(std::acos(std::min(1.0, c)));
}

namespace detail {

// Dense bitset over segment indices.
struct Bits {
  std::vector<std::uint64_t> w;
  explicit Bits(std::size_t n = 0) : w((n + 63) / 64, 0) {}
  void set(std::size_t i) { w[i / 64] |= std::uint64_t(1) << (i % 64); }
  bool test(std::size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
};

struct VpCandidate {
  Point2 p;
  Bits inliers;
  double support = 0;
};

struct Frame {
  Vec2 c;
  double s = 1;
};

inline Frame frame_of(ImageSize dims) {
  return {{0.5 * (dims.width - 1), 0.5 * (dims.height - 1)},
          0.5 * std::max(dims.width, dims.height)};
}

inline Frame frame_of(const std::vector<LineSegment>& segs) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& s : segs)
    for (Vec2 p : {s.p0, s.p1}) {
      x0 = std::min(x0, p.x), y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
    }
  return {{0.5 * (x0 + x1), 0.5 * (y0 + y1)}, std::max(1.0, 0.5 * std::max(x1 - x0, y1 - y0))};
}

// Image-plane orthogonality screen for two vanishing points with the principal
// point near the frame center: finite pairs lie on opposite sides of it,
// a finite/ideal pair is roughly perpendicular, two ideal points are far apart.
// Points beyond 10 frame radii are judged by direction only, since noise can
// push a near-ideal intersection to either side of the image.
inline Point2 far_as_ideal(const Point2& p, const Frame& f) {
  if (p.is_ideal()) return p;
  const Vec2 d = p.euclidean() - f.c;
  return norm(d) > 10.0 * f.s ? Point2::ideal(d.x, d.y) : p;
}

inline bool admissible_pair(const Point2& pa, const Point2& pb, const Frame& f) {
  const Point2 a = far_as_ideal(pa, f), b = far_as_ideal(pb, f);
  if (a.is_finite() && b.is_finite()) {
    const Vec2 da = a.euclidean() - f.c, db = b.euclidean() - f.c;
    return dot(da, db) <= -(0.5 * f.s) * (0.5 * f.s);
  }
  if (a.is_ideal() && b.is_ideal()) return std::abs(dot(a.xy(), b.xy())) < 0.5;
  const Point2& fin = a.is_finite() ? a : b;
  const Point2& inf = a.is_finite() ? b : a;
  const Vec2 d = fin.euclidean() - f.c;
  if (norm(d) <= 0.5 * f.s) return true;
  return std::abs(dot(d, inf.xy())) / norm(d) < 0.5;
}

inline bool admissible(const std::vector<const Point2*>& vps, const Frame& f) {
  for (std::size_t i = 0; i < vps.size(); ++i)
    for (std::size_t j = i + 1; j < vps.size(); ++j)
      if (!admissible_pair(*vps[i], *vps[j], f)) return false;
  return true;
}

inline double union_support(const std::vector<const Bits*>& sets, const std::vector<double>& w) {
  double total = 0;
  for (std::size_t k = 0; k < sets[0]->w.size(); ++k) {
    std::uint64_t m = 0;
    for (const Bits* b : sets) m |= b->w[k];
    while (m) {
      const int bit = __builtin_ctzll(m);
      total += w[k * 64 + bit];
      m &= m - 1;
    }
  }
  return total;
}

// Weighted least squares vanishing point of a line family: the unit vector v
// minimizing sum w_i (l_i . v)^2 in normalized coordinates.
inline Point2 refine_vp(const std::vector<LineSegment>& segs, const std::vector<int>& members,
                        const Frame& f) {
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  for (int i : members) {
    const auto& s = segs[i];
    const Vec2 a = (s.p0 - f.c) * (1.0 / f.s), b = (s.p1 - f.c) * (1.0 / f.s);
    Eigen::Vector3d l(a.y - b.y, b.x - a.x, a.x * b.y - a.y * b.x);
    l /= l.head<2>().norm();
    M += s.strength * l * l.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
  const Eigen::Vector3d v = es.eigenvectors().col(0);
  if (std::abs(v.z()) <= 1e-12 * v.head<2>().norm()) return Point2::ideal(v.x(), v.y());
  return Point2(f.s * v.x() + f.c.x * v.z(), f.s * v.y() + f.c.y * v.z(), v.z());
}

}  // namespace detail

namespace detail {

// Role eligibility for an upright camera with the principal point near the
// frame center: the vertical point lies far above or below, the lateral one
// far to a side, the depth one near the center.
inline bool eligible(int role, const Point2& p, const Frame& f) {
  const double cos30 = 0.8660254037844386;
  if (role == kDepth) return p.is_finite() && norm(p.euclidean() - f.c) <= f.s;
  const Vec2 d = p.is_ideal() ? p.xy() : p.euclidean() - f.c;
  if (p.is_finite() && norm(d) < (role == kVertical ? 2.0 : 1.0) * f.s) return false;
  const double along = role == kVertical ? std::abs(d.y) : std::abs(d.x);
  return along >= cos30 * norm(d);
}

// The principal point is the orthocenter of the vanishing triangle, so the
// depth point lies on the line through c perpendicular to the join of the
// other two.
inline Line depth_altitude(const Point2& vertical, const Point2& lateral, const Frame& f) {
  const Vec2 d = vertical.is_ideal() && lateral.is_ideal() ? Vec2{0, 1}
                 : vertical.is_ideal()                    ? vertical.xy()
                 : lateral.is_ideal()                     ? lateral.xy()
                                    : lateral.euclidean() - vertical.euclidean();
  return Line(d.x, d.y, -(d.x * f.c.x + d.y * f.c.y));
}

}  // namespace detail

/// Manhattan triple from segment-intersection candidates scored by
/// strength-weighted angular consensus, then refined by weighted least squares.
/// A depth point backed by fewer than two segments is completed from the
/// orthocenter constraint.
inline VanishingTriple estimate_vanishing_points(const std::vector<LineSegment>& segments,
                                                 const detail::Frame& frame) {
  using detail::Bits;
  using detail::VpCandidate;
  const std::size_t n = segments.size();
  if (n < 2) fail(ErrorCode::DegenerateConfiguration, "fewer than two segments");
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = segments[i].strength;

  // strongest segments seed the candidates; ordering is keyed on geometry so
  // permuted inputs give the same candidate set
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](int i) {
    const auto& s = segments[i];
    return std::make_tuple(-s.strength, std::min(s.p0.x, s.p1.x), std::min(s.p0.y, s.p1.y),
                           std::max(s.p0.x, s.p1.x), std::max(s.p0.y, s.p1.y));
  };
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
  const std::size_t k = std::min<std::size_t>(n, 80);

  std::vector<VpCandidate> cands;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      Point2 p;
      try {
        p = intersect_lines(segments[idx[a]].carrier(), segments[idx[b]].carrier());
      } catch (const Error&) {
        continue;  // collinear pair
      }
      VpCandidate c{p, Bits(n), 0};
      for (std::size_t i = 0; i < n; ++i)
        if (vp_angle_error(segments[i], p) <= kVpInlierAngle) {
          c.inliers.set(i);
          c.support += weight[i];
        }
      if (c.support > 0) cands.push_back(std::move(c));
    }
  // deterministic order by support, then position
  auto ckey = [](const VpCandidate& c) {
    return std::make_tuple(-c.support, c.p.w(), c.p.x(), c.p.y());
  };
  std::stable_sort(cands.begin(), cands.end(),
                   [&](const VpCandidate& a, const VpCandidate& b) { return ckey(a) < ckey(b); });

  // per role: all eligible candidates, and a short list of distinct ones
  std::array<std::vector<int>, 3> pool, top;
  for (int role = 0; role < 3; ++role)
    for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
      if (!detail::eligible(role, cands[i].p, frame)) continue;
      pool[role].push_back(i);
      if (top[role].size() >= 15) continue;
      bool distinct = true;
      for (int j : top[role]) {
        double shared = 0;
        for (std::size_t s = 0; s < n; ++s)
          if (cands[i].inliers.test(s) && cands[j].inliers.test(s)) shared += weight[s];
        if (shared > 0.5 * cands[i].support) distinct = false;
      }
      if (distinct) top[role].push_back(i);
    }

  // pick[role] = candidate index or -1; at least two roles must be filled
  using Pick = std::array<int, 3>;
  auto score = [&](const Pick& pick) {
    std::vector<const Bits*> sets;
    std::vector<const Point2*> pts;
    for (int i : pick)
      if (i >= 0) {
        sets.push_back(&cands[i].inliers);
        pts.push_back(&cands[i].p);
      }
    if (pts.size() < 2 || !detail::admissible(pts, frame)) return -1.0;
    return detail::union_support(sets, weight);
  };

  Pick best{-1, -1, -1};
  double best_score = -1;
  auto with_empty = [](std::vector<int> v) {
    v.insert(v.begin(), -1);
    return v;
  };
  const auto t0 = with_empty(top[0]), t1 = with_empty(top[1]), t2 = with_empty(top[2]);
  for (int a : t0)
    for (int b : t1)
      for (int c : t2) {
        const double s = score({a, b, c});
        if (s > best_score) best_score = s, best = {a, b, c};
      }
  if (best_score < 0) fail(ErrorCode::DegenerateConfiguration, "fewer than two distinct directions");

  // coordinate ascent over every eligible candidate
  for (int round = 0; round < 4; ++round) {
    bool improved = false;
    for (int role = 0; role < 3; ++role)
      for (int i : with_empty(pool[role])) {
        Pick trial = best;
        trial[role] = i;
        const double s = score(trial);
        if (s > best_score + 1e-12) best_score = s, best = trial, improved = true;
      }
    if (!improved) break;
  }

  // assignment to the nearest chosen direction, then refinement (twice)
  VanishingTriple t;
  t.v_horiz1 = Point2(frame.c);
  for (int role = 0; role < 3; ++role)
    if (best[role] >= 0) t[role] = cands[best[role]].p, t.found[role] = true;
  // segments consistent with two chosen points are assigned to the nearer one
  // but do not take part in refinement
  std::vector<int> assign(n, kNoGroup);
  std::array<std::vector<int>, 3> members;
  for (int iter = 0; iter < 3; ++iter) {
    for (auto& m : members) m.clear();
    for (std::size_t s = 0; s < n; ++s) {
      double err = kVpInlierAngle;
      int hits = 0;
      assign[s] = kNoGroup;
      for (int role = 0; role < 3; ++role) {
        if (!t.found[role]) continue;
        const double e = vp_angle_error(segments[s], t[role]);
        if (e <= kVpInlierAngle) ++hits;
        if (e <= err) err = e, assign[s] = role;
      }
      if (assign[s] != kNoGroup && hits == 1) members[assign[s]].push_back(static_cast<int>(s));
    }
    if (iter == 2) break;
    for (int role = 0; role < 3; ++role)
      if (members[role].size() >= 2) {
        const Point2 r = detail::refine_vp(segments, members[role], frame);
        if (detail::eligible(role, r, frame)) t[role] = r;
      }
  }

  if (members[kDepth].size() < 2) {
    // one segment fixes a line through the depth point; the altitude fixes the rest
    const Line alt = t.found[kVertical] || t.found[kLateral]
                         ? detail::depth_altitude(t.v_vertical, t.v_horiz2, frame)
                         : Line(0, 1, -frame.c.y);
    Point2 v(frame.c);
    if (members[kDepth].size() == 1) {
      const Line seg = segments[members[kDepth][0]].carrier();
      if (angle_between(seg, alt) > deg2rad(5.0)) {
        const Point2 q = intersect_lines(seg, alt);
        if (detail::eligible(kDepth, q, frame)) v = q;
      }
    } else {
      v = Point2(alt.foot(frame.c));
    }
    t.v_horiz1 = v;
    t.found[kDepth] = !members[kDepth].empty();
  }
  t.assignment = assign;
  for (std::size_t s = 0; s < n; ++s)
    if (assign[s] != kNoGroup) {
      ++t.count[assign[s]];
      t.support[assign[s]] += weight[s];
    }
  return t;
}

inline VanishingTriple estimate_vanishing_points(const std::vector<LineSegment>& segments,
                                                 ImageSize dims) {
  return estimate_vanishing_points(segments, detail::frame_of(dims));
}

inline VanishingTriple estimate_vanishing_points(const std::vector<LineSegment>& segments) {
  if (segments.size() < 2) fail(ErrorCode::DegenerateConfiguration, "fewer than two segments");
  return estimate_vanishing_points(segments, detail::frame_of(segments));
}

/// Grid v0 + (i*step, j*step) for |i*step|, |j*step| <= extent, row-major.
inline std::vector<Point2> grid_search_candidates(const Point2& v0, double extent, double step) {
  if (!v0.is_finite()) fail(ErrorCode::InvalidArgument, "grid center must be finite");
  if (!(step > 0) || extent < 0) fail(ErrorCode::InvalidArgument, "bad grid extent/step");
  const int r = static_cast<int>(std::floor(extent / step + 1e-9));
  std::vector<Point2> out;
  out.reserve(std::size_t(2 * r + 1) * (2 * r + 1));
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) out.emplace_back(v0.x() + i * step, v0.y() + j * step);
  return out;
}

// ---------------------------------------------------------------------------
// Critical line selection

struct ClassifiedLine {
  Line line{0, 1, 0};
  double strength = 0;
  std::vector<LineSegment> support;
  int group = kNoGroup;  // VpGroup of the supporting segments

  Vec2 anchor() const {
    if (support.empty()) return line.foot({0, 0});
    Vec2 m{0, 0};
    for (const auto& s : support) m = m + s.midpoint();
    return m * (1.0 / support.size());
  }
};

struct ClassifiedLines {
  std::vector<ClassifiedLine> ceiling, wall, floor;
  bool empty() const { return ceiling.empty() && wall.empty() && floor.empty(); }
  std::size_t size() const { return ceiling.size() + wall.size() + floor.size(); }
};

// Two carriers are duplicates when nearly parallel and close near `ref`.
inline bool near_duplicate(const Line& a, const Line& b, Vec2 ref) {
  if (rad2deg(angle_between(a, b)) >= kDedupAngle) return false;
  return std::abs(b.value(a.foot(ref))) < kDedupOffset;
}

// Greedy merge, strongest first; merged support and strength accumulate on the keeper.
inline std::vector<ClassifiedLine> merge_duplicates(std::vector<ClassifiedLine> lines) {
  std::stable_sort(lines.begin(), lines.end(), [](const ClassifiedLine& a, const ClassifiedLine& b) {
    return a.strength > b.strength;
  });
  std::vector<ClassifiedLine> out;
  for (auto& l : lines) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ClassifiedLine& k) {
      return near_duplicate(k.line, l.line, l.anchor());
    });
    if (it == out.end()) {
      out.push_back(std::move(l));
    } else {
      it->strength += l.strength;
      it->support.insert(it->support.end(), l.support.begin(), l.support.end());
    }
  }
  return out;
}

/// Keeps segments lying in C (both endpoints and midpoint), groups them by
/// vanishing direction: vertical ones are wall lines, the rest ceiling or
/// floor lines by their side of the depth vanishing point.
inline ClassifiedLines select_critical_lines(const std::vector<LineSegment>& segments,
                                             const VanishingTriple& triple, const ContourMask& C) {
  ClassifiedLines out;
  const Point2& v0 = triple.v_horiz1;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!C.at(s.p0) || !C.at(s.p1) || !C.at(s.midpoint())) continue;
    int group = i < triple.assignment.size() ? triple.assignment[i] : kNoGroup;
    if (group == kNoGroup) {
      // segments that miss the assignment still join the nearest found direction
      double err = kVpInlierAngle;
      for (int g = 0; g < 3; ++g)
        if (triple.found[g] && vp_angle_error(s, triple[g]) <= err)
          err = vp_angle_error(s, triple[g]), group = g;
    }
    if (group == kNoGroup) continue;
    ClassifiedLine cl{s.carrier(), s.strength, {s}, group};
    if (group == kVertical) {
      out.wall.push_back(std::move(cl));
    } else {
      const Vec2 m = s.midpoint();
      const bool above = v0.is_finite() ? m.y < v0.y() : m.y < C.height() / 2.0;
      (above ? out.ceiling : out.floor).push_back(std::move(cl));
    }
  }
  out.ceiling = merge_duplicates(std::move(out.ceiling));
  out.wall = merge_duplicates(std::move(out.wall));
  out.floor = merge_duplicates(std::move(out.floor));
  return out;
}

}  // namespace cfile
