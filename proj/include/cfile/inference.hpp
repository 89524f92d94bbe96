#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"
#include "cfile/vanishing.hpp"

namespace cfile {

enum class Provenance { Original, Occluded, Undetected };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Original: return "original";
    case Provenance::Occluded: return "occluded";
    case Provenance::Undetected: return "undetected";
  }
  return "?";
}

/// A candidate boundary line tagged with its layout role and origin.
struct RoleLine {
  Line line{0, 1, 0};
  LineRole role = LineRole::L1;
  Provenance provenance = Provenance::Original;
  double strength = 0;
  bool low_confidence = false;
};

// ---------------------------------------------------------------------------
// Line extension

struct ExtensionCheck {
  Line line{0, 1, 0};
  double in_mask_fraction = 0;  // over in-image, unoccluded samples
  bool low_confidence = true;
};

inline constexpr double kExtensionConfidence = 0.6;

namespace detail {

// Unit-step samples of a line inside the image.
inline std::vector<Vec2> line_samples(const Line& l, ImageSize dims) {
  std::vector<Vec2> out;
  if (std::abs(l.b()) >= std::abs(l.a())) {
    for (int x = 0; x < dims.width; ++x) {
      const double y = *l.y_at(x);
      if (y > -0.5 && y < dims.height - 0.5) out.push_back({double(x), y});
    }
  } else {
    for (int y = 0; y < dims.height; ++y) {
      const double x = *l.x_at(y);
      if (x > -0.5 && x < dims.width - 0.5) out.push_back({x, double(y)});
    }
  }
  return out;
}

inline bool inside_any(Vec2 p, const std::vector<PixelRect>& rects) {
  const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
  for (const auto& r : rects)
    if (x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1) return true;
  return false;
}

}  // namespace detail

/// The carrier of a partial floor line already spans the image; this checks
/// that the extension is supported: at least 60% of its unoccluded in-image
/// samples must fall in C, else it is flagged low-confidence.
inline ExtensionCheck extend_partial_floor_line(const Line& partial, const ContourMask& C,
                                                const std::vector<PixelRect>& occlusions = {}) {
  ExtensionCheck out{partial, 0.0, true};
  int total = 0, hit = 0;
  for (Vec2 p : detail::line_samples(partial, {C.width(), C.height()})) {
    if (detail::inside_any(p, occlusions)) continue;
    ++total;
    hit += C.at(p);
  }
  if (total == 0) return out;
  out.in_mask_fraction = static_cast<double>(hit) / total;
  out.low_confidence = out.in_mask_fraction < kExtensionConfidence;
  return out;
}

// ---------------------------------------------------------------------------
// Wall lines from ceiling corners

inline Line infer_wall_line_from_ceiling(const Point2& corner, const Point2& v_vertical) {
  if (!corner.is_finite()) fail(ErrorCode::InvalidArgument, "ceiling corner must be finite");
  return join(corner, v_vertical);
}

// ---------------------------------------------------------------------------
// Logistic-regression boundary

inline constexpr int kRegressionMinPixels = 30;
inline constexpr int kRegressionIterations = 200;

/// Decision boundary of a two-class logistic regression on normalized pixel
/// coordinates (plus bias) between the pixels of labels a and b lying within
/// a narrow band of each other. Newton iterations from the centroid-separating
/// line; a small ridge keeps separable data bounded.
inline Line regression_line_from_labeling(const SurfaceLabeling& S, std::uint8_t a, std::uint8_t b) {
  if (a == b) fail(ErrorCode::InvalidArgument, "regression needs two distinct labels");
  if (a > b) std::swap(a, b);  // the fit is order-free; one canonical order makes it exact
  const int w = S.width(), h = S.height();
  Mask ma(w, h, 0), mb(w, h, 0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    ma.data()[i] = S.data()[i] == a;
    mb.data()[i] = S.data()[i] == b;
  }
  // boundary-adjacent counts (4-neighbour of the other label)
  int adj_a = 0, adj_b = 0;
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = S(x, y);
      if (l != a && l != b) continue;
      const auto other = l == a ? b : a;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (S.contains(nx, ny) && S(nx, ny) == other) {
          ++(l == a ? adj_a : adj_b);
          break;
        }
      }
    }
  if (adj_a < kRegressionMinPixels || adj_b < kRegressionMinPixels)
    fail(ErrorCode::InsufficientSupport, "too few boundary pixels between the label pair");

  constexpr int kBand = 3;
  const Mask near_a = dilate_square(ma, kBand), near_b = dilate_square(mb, kBand);
  const auto frame = detail::frame_of(ImageSize{w, h});
  std::vector<Eigen::Vector3d> X;
  std::vector<double> t;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool is_a = ma(x, y) && near_b(x, y), is_b = mb(x, y) && near_a(x, y);
      if (!is_a && !is_b) continue;
      X.emplace_back((x - frame.c.x) / frame.s, (y - frame.c.y) / frame.s, 1.0);
      t.push_back(is_a ? 1.0 : 0.0);
    }
  // balanced classes: each contributes total weight one
  double na = 0, nb = 0;
  for (double ti : t) (ti > 0 ? na : nb) += 1;
  Eigen::Vector3d mu_a = Eigen::Vector3d::Zero(), mu_b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < X.size(); ++i) (t[i] > 0 ? mu_a : mu_b) += X[i];
  mu_a /= na;
  mu_b /= nb;

  Eigen::Vector3d theta;
  {
    Eigen::Vector2d d = (mu_a - mu_b).head<2>();
    if (d.norm() < 1e-12) d = Eigen::Vector2d(1, 0);
    d *= 10.0 / d.norm();
    const Eigen::Vector2d m = 0.5 * (mu_a + mu_b).head<2>();
    theta << d, -d.dot(m);
  }
  const double ridge = 1e-4;
  auto softplus = [](double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); };
  auto objective = [&](const Eigen::Vector3d& th) {
    double J = 0.5 * ridge * th.head<2>().squaredNorm();
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double z = th.dot(X[i]);
      J += (t[i] > 0 ? softplus(-z) / na : softplus(z) / nb);
    }
    return J;
  };
  // damped Newton: halve the step until the objective decreases
  double J = objective(theta);
  for (int it = 0; it < kRegressionIterations; ++it) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double wi = t[i] > 0 ? 1.0 / na : 1.0 / nb;
      const double p = 1.0 / (1.0 + std::exp(-theta.dot(X[i])));
      g += wi * (p - t[i]) * X[i];
      H += wi * std::max(p * (1 - p), 1e-12) * X[i] * X[i].transpose();
    }
    g.head<2>() += ridge * theta.head<2>();
    H(0, 0) += ridge;
    H(1, 1) += ridge;
    Eigen::Vector3d step = H.ldlt().solve(g);
    bool moved = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const double Jn = objective(theta - step);
      if (Jn < J) {
        theta -= step;
        J = Jn;
        moved = true;
        break;
      }
    }
    if (!moved || step.norm() < 1e-10 * std::max(1.0, theta.norm())) break;
  }
  if (theta.head<2>().norm() < 1e-12) fail(ErrorCode::InsufficientSupport, "degenerate regression");
  // back to pixels: a (x - cx)/s + b (y - cy)/s + c = 0
  const double A = theta(0) / frame.s, B = theta(1) / frame.s;
  return Line(A, B, theta(2) - A * frame.c.x - B * frame.c.y);
}

// ---------------------------------------------------------------------------
// Occluded floor line

enum class FloorBranch { FromP2, FromP3, Regression };

struct FloorRecovery {
  Line line{0, 1, 0};
  FloorBranch branch = FloorBranch::Regression;
  Provenance provenance = Provenance::Occluded;
};

/// Every construction of the cascade that succeeds, corner-based ones first:
/// p2 = l3 x e2v (or p3 = l4 x e3v) joined with the floor-direction vanishing
/// point; the floor|center regression on S only when no corner exists.
inline std::vector<FloorRecovery> occluded_floor_candidates(
    const std::optional<Line>& l3, const std::optional<Line>& l4, const std::optional<Line>& e2v,
    const std::optional<Line>& e3v, const Point2& floor_vp, const SurfaceLabeling* S) {
  std::vector<FloorRecovery> out;
  auto corner_branch = [&](const std::optional<Line>& wall, const std::optional<Line>& ray,
                           FloorBranch branch) {
    if (!wall || !ray) return;
    try {
      const Point2 p = intersect_lines(*wall, *ray);
      if (!p.is_finite()) return;
      out.push_back({join(p, floor_vp), branch, Provenance::Occluded});
    } catch (const Error&) {
      // identical lines or a corner on the vanishing point: branch unavailable
    }
  };
  corner_branch(l3, e2v, FloorBranch::FromP2);
  corner_branch(l4, e3v, FloorBranch::FromP3);
  if (out.empty() && S)
    out.push_back({regression_line_from_labeling(*S, label_of(Surface::Floor), label_of(Surface::Center)),
                   FloorBranch::Regression, Provenance::Occluded});
  return out;
}

inline FloorRecovery recover_occluded_floor(const std::optional<Line>& l3, const std::optional<Line>& l4,
                                            const std::optional<Line>& e2v,
                                            const std::optional<Line>& e3v, const Point2& floor_vp,
                                            const SurfaceLabeling* S) {
  const auto all = occluded_floor_candidates(l3, l4, e2v, e3v, floor_vp, S);
  if (all.empty()) fail(ErrorCode::InsufficientSupport, "no branch could recover the floor line");
  return all.front();
}

// ---------------------------------------------------------------------------
// Critical line union

struct CriticalLineSet {
  ClassifiedLines classes;  // the mask-selected lines these came from
  std::vector<RoleLine> original, occluded, undetected;

  std::size_t size() const { return original.size() + occluded.size() + undetected.size(); }
  bool empty() const { return size() == 0; }

  // Candidates for a role in priority order: original, occluded, undetected.
  std::vector<RoleLine> for_role(LineRole r) const {
    std::vector<RoleLine> out;
    for (const auto* group : {&original, &occluded, &undetected})
      for (const auto& l : *group)
        if (l.role == r) out.push_back(l);
    return out;
  }
};

/// Role tags for mask-selected lines: lateral-group ceiling and floor lines are
/// l1 and l2, wall lines split into l3 and l4 by their side of v. Depth-group
/// lines are the rays e_i v and get no role.
inline std::vector<RoleLine> tag_roles(const ClassifiedLines& cl, const Point2& v) {
  std::vector<RoleLine> out;
  for (const auto& l : cl.ceiling)
    if (l.group == kLateral) out.push_back({l.line, LineRole::L1, Provenance::Original, l.strength});
  for (const auto& l : cl.floor)
    if (l.group == kLateral) out.push_back({l.line, LineRole::L2, Provenance::Original, l.strength});
  for (const auto& l : cl.wall) {
    const auto x = l.line.x_at(v.y());
    if (!x) continue;
    out.push_back({l.line, *x < v.x() ? LineRole::L3 : LineRole::L4, Provenance::Original, l.strength});
  }
  return out;
}

/// Disjoint union of the three provenance groups; a recovered line that
/// duplicates a higher-priority line of the same role is dropped.
inline CriticalLineSet assemble_critical_lines(const ClassifiedLines& original, const Point2& v,
                                               const std::vector<RoleLine>& occluded,
                                               const std::vector<RoleLine>& undetected,
                                               ImageSize dims) {
  CriticalLineSet out;
  out.classes = original;
  out.original = tag_roles(original, v);
  const Vec2 ref{0.5 * (dims.width - 1), 0.5 * (dims.height - 1)};
  auto duplicated = [&](const RoleLine& l) {
    for (const auto* group : {&out.original, &out.occluded, &out.undetected})
      for (const auto& k : *group)
        if (k.role == l.role && near_duplicate(k.line, l.line, ref)) return true;
    return false;
  };
  for (auto l : occluded) {
    l.provenance = Provenance::Occluded;
    if (!duplicated(l)) out.occluded.push_back(l);
  }
  for (auto l : undetected) {
    l.provenance = Provenance::Undetected;
    if (!duplicated(l)) out.undetected.push_back(l);
  }
  return out;
}

/// Fills the gaps of the mask-selected lines: a missing or unconfirmed floor
/// line goes through the occlusion cascade, missing walls come from ceiling
/// corners and the vertical vanishing point, then from regression on S, a
/// missing ceiling line from regression only.
inline CriticalLineSet build_critical_lines(const ClassifiedLines& cl, const VanishingTriple& t,
                                            const ContourMask& C, const SurfaceLabeling* S) {
  const ImageSize dims{C.width(), C.height()};
  const Point2& v = t.v_horiz1;
  const auto tagged = tag_roles(cl, v);

  double mean = 0;
  for (const auto& l : tagged) mean += l.strength;
  const double recovered_strength = tagged.empty() ? 1.0 : 0.5 * mean / tagged.size();

  auto strongest = [&](LineRole r) -> std::optional<Line> {
    const RoleLine* best = nullptr;
    for (const auto& l : tagged)
      if (l.role == r && (!best || l.strength > best->strength)) best = &l;
    return best ? std::optional<Line>(best->line) : std::nullopt;
  };
  // strongest depth-group line on one side of v among ceiling or floor lines
  auto ray = [&](const std::vector<ClassifiedLine>& lines, bool left) -> std::optional<Line> {
    const ClassifiedLine* best = nullptr;
    for (const auto& l : lines)
      if (l.group == kDepth && (l.anchor().x < v.x()) == left && (!best || l.strength > best->strength))
        best = &l;
    return best ? std::optional<Line>(best->line) : std::nullopt;
  };
  const auto l1 = strongest(LineRole::L1), l3 = strongest(LineRole::L3), l4 = strongest(LineRole::L4);
  const auto e1v = ray(cl.ceiling, true), e4v = ray(cl.ceiling, false);
  const auto e2v = ray(cl.floor, true), e3v = ray(cl.floor, false);

  std::vector<RoleLine> occluded, undetected;
  auto regression = [&](LineRole role, Surface a, Surface b) {
    if (!S) return;
    try {
      undetected.push_back({regression_line_from_labeling(*S, label_of(a), label_of(b)), role,
                            Provenance::Undetected, recovered_strength});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSupport) throw;
    }
  };

  // floor line: confirmed originals stand; otherwise run the cascade
  bool confirmed_floor = false;
  for (const auto& l : tagged)
    if (l.role == LineRole::L2 && !extend_partial_floor_line(l.line, C).low_confidence)
      confirmed_floor = true;
  if (!confirmed_floor) {
    try {
      for (const auto& r : occluded_floor_candidates(l3, l4, e2v, e3v, t.v_horiz2, S))
        occluded.push_back({r.line, LineRole::L2, Provenance::Occluded, recovered_strength});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSupport) throw;
    }
  }

  auto wall = [&](LineRole role, const std::optional<Line>& ceiling_ray, Surface side) {
    if (strongest(role)) return;
    if (l1 && ceiling_ray) {
      try {
        const Point2 corner = intersect_lines(*l1, *ceiling_ray);
        if (corner.is_finite()) {
          undetected.push_back({infer_wall_line_from_ceiling(corner, t.v_vertical), role,
                                Provenance::Undetected, recovered_strength});
          return;
        }
      } catch (const Error&) {
        // fall through to regression
      }
    }
    if (side == Surface::Left) regression(role, Surface::Left, Surface::Center);
    else regression(role, Surface::Center, Surface::Right);
  };
  wall(LineRole::L3, e1v, Surface::Left);
  wall(LineRole::L4, e4v, Surface::Right);
  if (!l1) regression(LineRole::L1, Surface::Ceiling, Surface::Center);

  auto out = assemble_critical_lines(cl, v, occluded, undetected, dims);
  // flag unconfirmed floor originals for inspection
  for (auto& l : out.original)
    if (l.role == LineRole::L2) l.low_confidence = extend_partial_floor_line(l.line, C).low_confidence;
  return out;
}

}  // namespace cfile
