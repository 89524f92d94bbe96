#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"

namespace cfile {

/// Fraction of pixels whose label differs, with fixed label correspondence.
inline double pixel_error(const SurfaceLabeling& pred, const SurfaceLabeling& gt) {
  if (!pred.same_size(gt)) fail(ErrorCode::DimensionMismatch, "label maps differ in size");
  if (gt.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) wrong += pred.data()[i] != gt.data()[i];
  return static_cast<double>(wrong) / static_cast<double>(gt.size());
}

struct CornerPoint {
  std::string id;  // p1..p4, e1..e4
  Vec2 xy;
};

/// Finite corners of L. Ground truth keeps only those inside the image;
/// predictions keep off-image ones too so a corner just across the border
/// is scored by its distance rather than the miss penalty.
inline std::vector<CornerPoint> layout_corner_points(const LayoutModel& L, ImageSize dims, bool inside_only) {
  std::vector<CornerPoint> out;
  for (const auto& c : extract_corners(L, dims.width, dims.height)) {
    if (c.status == CornerStatus::Ideal) continue;
    if (inside_only && c.status != CornerStatus::Inside) continue;
    out.push_back({c.id, c.point.euclidean()});
  }
  return out;
}

/// Mean over ground-truth corners of the distance to the same-id prediction,
/// as a fraction of the image diagonal. A missing prediction costs one
/// diagonal; distances are capped at one diagonal.
inline double corner_error(const std::vector<CornerPoint>& pred, const std::vector<CornerPoint>& gt,
                           ImageSize dims) {
  if (gt.empty()) return 0.0;
  const double diag = std::hypot(dims.width, dims.height);
  double sum = 0;
  for (const auto& g : gt) {
    const auto it = std::find_if(pred.begin(), pred.end(), [&](const CornerPoint& p) { return p.id == g.id; });
    sum += it == pred.end() ? diag : std::min(diag, norm(it->xy - g.xy));
  }
  return sum / (static_cast<double>(gt.size()) * diag);
}

// ---------------------------------------------------------------------------
// Contour F-score

inline constexpr double kMatchToleranceFraction = 0.0075;

struct MatchCounts {
  std::size_t matched = 0;    // one-to-one pairs
  std::size_t predicted = 0;  // pred pixels at or above the threshold
  std::size_t truth = 0;      // ground-truth contour pixels

  double precision() const { return predicted ? double(matched) / predicted : 1.0; }
  double recall() const { return truth ? double(matched) / truth : 1.0; }
  double f() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  MatchCounts& operator+=(const MatchCounts& o) {
    matched += o.matched, predicted += o.predicted, truth += o.truth;
    return *this;
  }
};

struct ContourScore {
  double ods = 0;         // best threshold for the whole set (mean per-image F)
  double ois = 0;         // mean of per-image best F
  double ods_pooled = 0;  // best F of counts pooled over the set
  std::vector<double> thresholds;
  std::vector<double> precision, recall, f;  // pooled, per threshold
};

inline std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 1; k < 20; ++k) t.push_back(k / 20.0);
  return t;
}

/// Greedy one-to-one matching: predicted pixels in raster order each take the
/// nearest still-unmatched truth pixel within tolerance.
inline MatchCounts match_contours(const ProbabilityMap& pred, const Mask& truth, double threshold,
                                  double tolerance) {
  if (!pred.same_size(truth)) fail(ErrorCode::DimensionMismatch, "prediction and contour differ in size");
  const int r = static_cast<int>(std::floor(tolerance));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= tolerance * tolerance) offsets.emplace_back(dx, dy);
  std::stable_sort(offsets.begin(), offsets.end(), [](auto a, auto b) {
    return a.first * a.first + a.second * a.second < b.first * b.first + b.second * b.second;
  });

  MatchCounts m;
  Mask free = truth;
  for (auto t : truth.data()) m.truth += t != 0;
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (!(pred(x, y) >= threshold)) continue;
      ++m.predicted;
      for (auto [dx, dy] : offsets) {
        const int u = x + dx, v = y + dy;
        if (free.contains(u, v) && free(u, v)) {
          free(u, v) = 0;
          ++m.matched;
          break;
        }
      }
    }
  return m;
}

inline ContourScore contour_fscore(const std::vector<ProbabilityMap>& pred, const std::vector<ContourRaster>& truth,
                                   std::vector<double> thresholds = default_thresholds(),
                                   double match_tolerance = -1) {
  if (pred.empty()) fail(ErrorCode::EmptyDataset, "no images to score");
  if (pred.size() != truth.size()) fail(ErrorCode::DimensionMismatch, "prediction and truth lists differ");
  if (thresholds.empty()) fail(ErrorCode::InvalidArgument, "no thresholds");
  const std::size_t n = pred.size(), nt = thresholds.size();
  std::vector<std::vector<MatchCounts>> counts(n, std::vector<MatchCounts>(nt));
  for (std::size_t i = 0; i < n; ++i) {
    const double tol = match_tolerance >= 0 ? match_tolerance
                                            : kMatchToleranceFraction * std::hypot(pred[i].width(), pred[i].height());
    for (std::size_t k = 0; k < nt; ++k) counts[i][k] = match_contours(pred[i], truth[i].mask, thresholds[k], tol);
  }

  ContourScore s;
  s.thresholds = thresholds;
  for (std::size_t k = 0; k < nt; ++k) {
    MatchCounts pooled;
    double mean_f = 0;
    for (std::size_t i = 0; i < n; ++i) pooled += counts[i][k], mean_f += counts[i][k].f();
    mean_f /= static_cast<double>(n);
    s.precision.push_back(pooled.precision());
    s.recall.push_back(pooled.recall());
    s.f.push_back(pooled.f());
    s.ods = std::max(s.ods, mean_f);
    s.ods_pooled = std::max(s.ods_pooled, pooled.f());
  }
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0;
    for (const auto& c : counts[i]) best = std::max(best, c.f());
    s.ois += best;
  }
  s.ois /= static_cast<double>(n);
  return s;
}

}  // namespace cfile
