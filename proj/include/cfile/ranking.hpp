#pragma once

#include <algorithm>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"
#include "cfile/hypothesis.hpp"

namespace cfile {

inline constexpr int kDefaultScoreWidth = 5;

struct ScoredLayout {
  LayoutModel layout;
  double score = 0;
  std::size_t layout_pixels = 0;  // N, the contour pixel count
  std::size_t index = 0;          // position in the scored set
};

/// Row prefix sums of P so a contour, kept as merged row intervals, is scored
/// without touching every pixel.
class ScoreContext {
 public:
  explicit ScoreContext(const ProbabilityMap& P) : w_(P.width()), h_(P.height()) {
    prefix_.assign(std::size_t(w_ + 1) * h_, 0.0);
    for (int y = 0; y < h_; ++y) {
      double* row = &prefix_[std::size_t(y) * (w_ + 1)];
      for (int x = 0; x < w_; ++x) row[x + 1] = row[x] + P(x, y);
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }

  ScoredLayout score(const LayoutModel& L, int line_width) const {
    const auto runs = rasterize_checked(L, w_, h_);
    const int lo = stroke_low(line_width), hi = lo + line_width - 1;
    std::vector<std::vector<std::pair<int, int>>> rows(h_);
    for (const auto& s : boundary_spans(runs)) {
      const int y0 = std::max(0, s.y + lo), y1 = std::min(h_ - 1, s.y + hi);
      const int x0 = std::max(0, s.x0 + lo), x1 = std::min(w_ - 1, s.x1 + hi);
      for (int y = y0; y <= y1; ++y) rows[y].emplace_back(x0, x1);
    }
    double sum = 0;
    std::size_t n = 0;
    for (int y = 0; y < h_; ++y) {
      auto& iv = rows[y];
      if (iv.empty()) continue;
      std::sort(iv.begin(), iv.end());
      const double* pre = &prefix_[std::size_t(y) * (w_ + 1)];
      int a = iv[0].first, b = iv[0].second;
      auto flush = [&] {
        sum += pre[b + 1] - pre[a];
        n += static_cast<std::size_t>(b - a + 1);
      };
      for (std::size_t i = 1; i < iv.size(); ++i) {
        if (iv[i].first <= b + 1) {
          b = std::max(b, iv[i].second);
        } else {
          flush();
          a = iv[i].first, b = iv[i].second;
        }
      }
      flush();
    }
    if (n == 0) fail(ErrorCode::ZeroContour, "layout has no contour pixel in the image");
    return {L, sum / static_cast<double>(n), n, 0};
  }

 private:
  int w_, h_;
  std::vector<double> prefix_;
};

/// Mean of P over the layout's contour drawn at line_width.
inline ScoredLayout score_layout(const LayoutModel& L, const ProbabilityMap& P,
                                 int line_width = kDefaultScoreWidth) {
  if (line_width < 1) fail(ErrorCode::InvalidArgument, "line width must be positive");
  return ScoreContext(P).score(L, line_width);
}

/// Every scorable hypothesis, best first; equal scores keep hypothesis order.
inline std::vector<ScoredLayout> rank_hypotheses(const std::vector<LayoutModel>& H, const ProbabilityMap& P,
                                                 int line_width = kDefaultScoreWidth) {
  const ScoreContext ctx(P);
  std::vector<ScoredLayout> out;
  out.reserve(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    try {
      auto s = ctx.score(H[i], line_width);
      s.index = i;
      out.push_back(std::move(s));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroContour) throw;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredLayout& a, const ScoredLayout& b) { return a.score > b.score; });
  return out;
}

/// Highest score; ties go to the lower index.
inline ScoredLayout select_best(const std::vector<LayoutModel>& H, const ProbabilityMap& P,
                                int line_width = kDefaultScoreWidth) {
  if (H.empty()) fail(ErrorCode::InvalidArgument, "empty hypothesis set");
  const ScoreContext ctx(P);
  std::optional<ScoredLayout> best;
  for (std::size_t i = 0; i < H.size(); ++i) {
    try {
      auto s = ctx.score(H[i], line_width);
      s.index = i;
      if (!best || s.score > best->score) best = std::move(s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroContour) throw;
    }
  }
  if (!best) fail(ErrorCode::ZeroContour, "no hypothesis has contour pixels in the image");
  return *best;
}

inline ScoredLayout select_best(const HypothesisSet& H, const ProbabilityMap& P,
                                int line_width = kDefaultScoreWidth) {
  return select_best(H.hypotheses, P, line_width);
}

}  // namespace cfile
