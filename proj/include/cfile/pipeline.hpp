#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfile/coarse.hpp"
#include "cfile/hypothesis.hpp"
#include "cfile/inference.hpp"
#include "cfile/ranking.hpp"
#include "cfile/segments.hpp"
#include "cfile/vanishing.hpp"

namespace cfile {

inline constexpr int kWorkingSize = 404;

struct PipelineConfig {
  double threshold = 0.5;         // (0, 1)
  int dilation_radius = 4;        // [0, 50]
  int line_width_score = kDefaultScoreWidth;  // [1, 31]
  double grid_extent = 20;        // [0, 200] px
  double grid_step = 5;           // (0, 100] px
  std::size_t max_hypotheses = kDefaultMaxHypotheses;  // [1, 1e6]
  double min_segment_length = 15;  // [2, 404] px
  std::uint64_t seed = 0;          // the pipeline is deterministic; kept for reproducible extensions

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) fail(ErrorCode::InvalidArgument, what);
    };
    need(threshold > 0 && threshold < 1, "threshold must lie in (0, 1)");
    need(dilation_radius >= 0 && dilation_radius <= 50, "dilation_radius must lie in [0, 50]");
    need(line_width_score >= 1 && line_width_score <= 31, "line_width_score must lie in [1, 31]");
    need(grid_extent >= 0 && grid_extent <= 200, "grid_extent must lie in [0, 200]");
    need(grid_step > 0 && grid_step <= 100, "grid_step must lie in (0, 100]");
    need(max_hypotheses >= 1 && max_hypotheses <= 1000000, "max_hypotheses must lie in [1, 1e6]");
    need(min_segment_length >= 2 && min_segment_length <= kWorkingSize, "min_segment_length must lie in [2, 404]");
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"threshold", c.threshold},
          {"dilation_radius", c.dilation_radius},
          {"line_width_score", c.line_width_score},
          {"grid_extent", c.grid_extent},
          {"grid_step", c.grid_step},
          {"max_hypotheses", c.max_hypotheses},
          {"min_segment_length", c.min_segment_length},
          {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "dilation_radius") c.dilation_radius = value.get<int>();
      else if (key == "line_width_score") c.line_width_score = value.get<int>();
      else if (key == "grid_extent") c.grid_extent = value.get<double>();
      else if (key == "grid_step") c.grid_step = value.get<double>();
      else if (key == "max_hypotheses") c.max_hypotheses = value.get<std::size_t>();
      else if (key == "min_segment_length") c.min_segment_length = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else fail(ErrorCode::ParseError, "unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

struct RefineResult {
  LayoutModel layout;              // original resolution
  LayoutModel working_layout;      // 404 x 404
  double score = 0;
  ImageSize original, working;
  std::vector<LineSegment> segments;
  VanishingTriple triple;
  ContourMask mask;
  ClassifiedLines classified;
  CriticalLineSet critical;
  Point2 v0;
  std::array<bool, 4> required{};  // roles whose surface the heatmap shows
  HypothesisSet hypotheses;
  std::vector<ScoredLayout> ranked;  // working resolution, best first
};

namespace detail {

inline ProbabilityMap to_working(const ProbabilityMap& P, ImageSize w) {
  auto out = resize_bilinear(P, w.width, w.height);
  for (auto& p : out.data()) p = std::clamp(p, 0.0f, 1.0f);
  return out;
}

inline SemanticHeatmap to_working(const SemanticHeatmap& S, ImageSize w) {
  SemanticHeatmap out;
  for (int k = 0; k < kNumSurfaces; ++k) out.channels[k] = resize_bilinear(S.channels[k], w.width, w.height);
  out.normalize();
  return out;
}

// Depth vanishing point from the heatmap: least-squares meeting point of the
// regression boundaries that run toward it (ceiling and floor against the side walls).
inline std::optional<Point2> depth_point_from_labels(const SurfaceLabeling& S) {
  const std::pair<Surface, Surface> pairs[] = {{Surface::Ceiling, Surface::Left},
                                               {Surface::Ceiling, Surface::Right},
                                               {Surface::Floor, Surface::Left},
                                               {Surface::Floor, Surface::Right}};
  std::vector<Line> lines;
  for (auto [a, b] : pairs) {
    try {
      lines.push_back(regression_line_from_labeling(S, label_of(a), label_of(b)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSupport) throw;
    }
  }
  if (lines.size() < 2) return std::nullopt;
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (const auto& l : lines) {
    const double n = std::hypot(l.a(), l.b());
    const Eigen::Vector2d u(l.a() / n, l.b() / n);
    A += u * u.transpose();
    rhs -= u * (l.c() / n);
  }
  if (std::abs(A.determinant()) < 1e-6) return std::nullopt;
  const Eigen::Vector2d p = A.ldlt().solve(rhs);
  return Point2(p.x(), p.y());
}

inline constexpr double kVisibleSurfaceFraction = 0.00005;

// A surface holding a visible share of the argmax labeling needs its boundary line.
inline std::array<bool, 4> required_roles(const SurfaceLabeling* S) {
  std::array<bool, 4> out{};
  if (!S || S->empty()) return out;
  std::array<std::size_t, kNumSurfaces> hist{};
  for (auto l : S->data())
    if (l < kNumSurfaces) ++hist[l];
  for (auto r : kAllRoles)
    out[static_cast<int>(r)] = hist[label_of(surface_of(r))] >= kVisibleSurfaceFraction * S->size();
  return out;
}

}  // namespace detail

/// Full refinement: working-resolution resize, mask, segments, vanishing
/// points, critical lines, hypothesis grid around v, ranking by the coarse
/// contour, and rescale of the winner to the input resolution.
inline RefineResult refine(const RgbImage& image, const ProbabilityMap& P_in, const SemanticHeatmap* S_in,
                           const PipelineConfig& cfg = {}) {
  cfg.validate();
  check_probability_range(P_in);
  if (image.width() < 2 || image.height() < 2) fail(ErrorCode::InvalidArgument, "image too small");
  RefineResult r;
  r.original = {image.width(), image.height()};
  r.working = {kWorkingSize, kWorkingSize};
  const ImageSize wd = r.working;

  const auto img = resize_bilinear(image, wd.width, wd.height);
  const auto P = detail::to_working(P_in, wd);
  std::optional<SurfaceLabeling> S;
  if (S_in) S = argmax_surfaces(detail::to_working(*S_in, wd));

  r.mask = binarize_and_dilate(P, cfg.threshold, cfg.dilation_radius);
  SegmentDetectorParams sp;
  sp.min_length = cfg.min_segment_length;
  try {
    r.segments = detect_line_segments(img, sp);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSegments) throw;  // regression lines still apply
  }

  try {
    r.triple = estimate_vanishing_points(r.segments, wd);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateConfiguration) throw;
    r.triple = VanishingTriple{};
    r.triple.v_horiz1 = Point2(0.5 * (wd.width - 1), 0.5 * (wd.height - 1));
    r.triple.assignment.assign(r.segments.size(), kNoGroup);
  }
  if (S)
    if (auto p = detail::depth_point_from_labels(*S)) {
      // the grid search can only absorb errors up to grid_extent
      const bool weak = r.triple.count[kDepth] < 2 || !r.triple.v_horiz1.is_finite() ||
                        norm(r.triple.v_horiz1.euclidean() - p->euclidean()) > std::max(cfg.grid_extent, 2 * cfg.grid_step);
      if (weak) r.triple.v_horiz1 = *p;
    }
  r.v0 = r.triple.v_horiz1;

  r.classified = select_critical_lines(r.segments, r.triple, r.mask);
  r.critical = build_critical_lines(r.classified, r.triple, r.mask, S ? &*S : nullptr);
  r.required = detail::required_roles(S ? &*S : nullptr);
  r.hypotheses = enumerate_hypotheses(r.critical, grid_search_candidates(r.v0, cfg.grid_extent, cfg.grid_step),
                                      wd, cfg.max_hypotheses, r.required);
  r.ranked = rank_hypotheses(r.hypotheses.hypotheses, P, cfg.line_width_score);
  if (r.ranked.empty()) fail(ErrorCode::NoValidHypothesis, "no hypothesis has contour pixels in the image");
  r.working_layout = r.ranked.front().layout;
  r.score = r.ranked.front().score;
  r.layout = rescale_layout(r.working_layout, wd, r.original);
  return r;
}

}  // namespace cfile
