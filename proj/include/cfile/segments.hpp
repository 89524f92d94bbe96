#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cfile/geometry.hpp"
#include "cfile/image.hpp"

namespace cfile {

struct SegmentDetectorParams {
  double min_length = 15;
  double angle_tolerance = deg2rad(22.5);
  double pre_blur = 1.0;
  double min_density = 0.7;
  // Gradient threshold q / sin(tau) with quantization error q = 2.
  double magnitude_threshold() const { return 2.0 / std::sin(angle_tolerance); }
};

namespace detail {

struct GradientField {
  int width = 0, height = 0;  // (w-1) x (h-1); sample (x, y) sits at pixel corner (x+.5, y+.5)
  std::vector<double> mag, angle;  // level-line angle, perpendicular to the gradient
};

inline GradientField gradient_2x2(const Image<double>& I) {
  GradientField g;
  g.width = I.width() - 1;
  g.height = I.height() - 1;
  g.mag.assign(std::size_t(std::max(0, g.width)) * std::max(0, g.height), 0.0);
  g.angle.assign(g.mag.size(), 0.0);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const double a = I(x, y), b = I(x + 1, y), c = I(x, y + 1), d = I(x + 1, y + 1);
      const double gx = 0.5 * (b + d - a - c);
      const double gy = 0.5 * (c + d - a - b);
      const std::size_t i = std::size_t(y) * g.width + x;
      g.mag[i] = std::hypot(gx, gy);
      g.angle[i] = std::atan2(gx, -gy);
    }
  return g;
}

inline double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2 * M_PI);
  return d > M_PI ? 2 * M_PI - d : d;
}

// Region of aligned gradient samples grown from a seed; `used` marks taken samples.
inline std::vector<int> grow_region(const GradientField& g, int seed, double tau, double rho,
                                    std::vector<unsigned char>& used) {
  std::vector<int> region{seed};
  used[seed] = 1;
  double sx = std::cos(g.angle[seed]), sy = std::sin(g.angle[seed]);
  double theta = g.angle[seed];
  for (std::size_t head = 0; head < region.size(); ++head) {
    const int px = region[head] % g.width, py = region[head] / g.width;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = px + dx, ny = py + dy;
        if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
        const int n = ny * g.width + nx;
        if (used[n] || g.mag[n] <= rho || angle_diff(g.angle[n], theta) > tau) continue;
        used[n] = 1;
        region.push_back(n);
        sx += std::cos(g.angle[n]);
        sy += std::sin(g.angle[n]);
        theta = std::atan2(sy, sx);
      }
  }
  return region;
}

struct RegionRect {
  Vec2 p0, p1;
  double length = 0, width = 0, density = 0, strength = 0;
};

// Magnitude-weighted principal-axis rectangle of a region.
inline RegionRect fit_rect(const GradientField& g, const std::vector<int>& region) {
  double sw = 0, cx = 0, cy = 0;
  for (int i : region) {
    const double w = g.mag[i];
    sw += w;
    cx += w * (i % g.width);
    cy += w * (i / g.width);
  }
  cx /= sw;
  cy /= sw;
  double ixx = 0, iyy = 0, ixy = 0;
  for (int i : region) {
    const double w = g.mag[i], dx = i % g.width - cx, dy = i / g.width - cy;
    ixx += w * dx * dx;
    iyy += w * dy * dy;
    ixy += w * dx * dy;
  }
  const double phi = 0.5 * std::atan2(2 * ixy, ixx - iyy);
  const Vec2 dir{std::cos(phi), std::sin(phi)}, perp{-dir.y, dir.x};
  double lmin = 1e300, lmax = -1e300, wsum = 0, wsq = 0;
  for (int i : region) {
    const Vec2 d{i % g.width - cx, i / g.width - cy};
    lmin = std::min(lmin, dot(d, dir));
    lmax = std::max(lmax, dot(d, dir));
    wsum += dot(d, perp);
    wsq += dot(d, perp) * dot(d, perp);
  }
  // band width from the perpendicular spread (uniform band: width = sqrt(12) sigma),
  // so a few stray samples do not inflate it the way the extent would
  const double n = static_cast<double>(region.size());
  const double var = std::max(0.0, wsq / n - (wsum / n) * (wsum / n));
  RegionRect r;
  const Vec2 c{cx + 0.5, cy + 0.5};
  r.p0 = c + dir * lmin;
  r.p1 = c + dir * lmax;
  r.length = lmax - lmin;
  r.width = std::max(1.0, std::sqrt(12.0 * var + 1.0));
  r.density = n / ((r.length + 1) * r.width);
  r.strength = sw;
  return r;
}

}  // namespace detail

/// Line segments from gradient-orientation region growing. Segments are at
/// least `min_length` long; strength is the summed gradient magnitude.
inline std::vector<LineSegment> detect_line_segments(const RgbImage& image,
                                                     const SegmentDetectorParams& params = {}) {
  if (image.width() < 2 || image.height() < 2) fail(ErrorCode::InvalidArgument, "image too small");
  const auto g = detail::gradient_2x2(gaussian_blur(to_gray(image), params.pre_blur));
  const double rho = params.magnitude_threshold();
  const double tau = params.angle_tolerance;

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(g.mag.size()); ++i)
    if (g.mag[i] > rho) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g.mag[a] > g.mag[b]; });

  std::vector<unsigned char> used(g.mag.size(), 0);
  std::vector<LineSegment> out;
  for (int seed : order) {
    if (used[seed]) continue;
    auto region = detail::grow_region(g, seed, tau, rho, used);
    if (static_cast<double>(region.size()) < 0.5 * params.min_length) continue;
    auto rect = detail::fit_rect(g, region);
    if (rect.density < params.min_density) {
      // retry once with a tighter tolerance, releasing the loose region
      for (int i : region) used[i] = 0;
      region = detail::grow_region(g, seed, 0.5 * tau, rho, used);
      rect = detail::fit_rect(g, region);
      if (rect.density < params.min_density) continue;
    }
    if (rect.length < params.min_length) continue;
    out.push_back({rect.p0, rect.p1, rect.strength});
  }
  if (out.empty()) fail(ErrorCode::NoSegments, "no line segments found");
  return out;
}

}  // namespace cfile
