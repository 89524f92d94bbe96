#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "cfile/geometry.hpp"
#include "cfile/image.hpp"

namespace cfile {

/// Per-pixel layout-contour confidence in [0, 1].
using ProbabilityMap = Image<float>;

inline void check_probability_range(const ProbabilityMap& P) {
  for (float p : P.data())
    if (!(p >= 0.0f && p <= 1.0f)) fail(ErrorCode::InvalidArgument, "probability outside [0,1]");
}

/// Five per-pixel surface scores in Surface order (ceiling, floor, left, center, right).
struct SemanticHeatmap {
  std::array<Image<float>, kNumSurfaces> channels;

  SemanticHeatmap() = default;
  SemanticHeatmap(int width, int height) {
    for (auto& c : channels) c = Image<float>(width, height, 0.0f);
  }

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
  Image<float>& operator[](Surface s) { return channels[static_cast<int>(s)]; }
  const Image<float>& operator[](Surface s) const { return channels[static_cast<int>(s)]; }

  // Rescales each pixel's channel vector to sum to one; all-zero pixels stay zero.
  void normalize() {
    for (std::size_t i = 0; i < channels[0].size(); ++i) {
      double sum = 0;
      for (const auto& c : channels) sum += c.data()[i];
      if (sum <= 0) continue;
      for (auto& c : channels) c.data()[i] = static_cast<float>(c.data()[i] / sum);
    }
  }

  friend bool operator==(const SemanticHeatmap&, const SemanticHeatmap&) = default;
};

struct ContourMask {
  Mask mask;
  int dilation_radius = 0;
  bool empty = true;  // nothing reached the threshold; callers fall back to regression

  int width() const { return mask.width(); }
  int height() const { return mask.height(); }
  bool at(int x, int y) const { return mask.contains(x, y) && mask(x, y) != 0; }
  bool at(Vec2 p) const {
    return at(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)));
  }
};

inline ContourMask binarize_and_dilate(const ProbabilityMap& P, double threshold, int radius) {
  if (!(threshold > 0 && threshold < 1)) fail(ErrorCode::InvalidArgument, "threshold must be in (0,1)");
  if (radius < 0) fail(ErrorCode::InvalidArgument, "negative dilation radius");
  Mask seed(P.width(), P.height(), 0);
  bool any = false;
  for (std::size_t i = 0; i < P.size(); ++i)
    if (P.data()[i] >= threshold) seed.data()[i] = 1, any = true;
  return {dilate_square(seed, radius), radius, !any};
}

// Two-class argmax: a pixel is contour when P beats 1 - P; ties go to background.
inline Mask argmax_labeling(const ProbabilityMap& P) {
  Mask out(P.width(), P.height(), 0);
  for (std::size_t i = 0; i < P.size(); ++i) out.data()[i] = P.data()[i] > 1.0f - P.data()[i];
  return out;
}

inline SurfaceLabeling argmax_surfaces(const SemanticHeatmap& S) {
  SurfaceLabeling out(S.width(), S.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int best = 0;
    for (int c = 1; c < kNumSurfaces; ++c)
      if (S.channels[c].data()[i] > S.channels[best].data()[i]) best = c;
    out.data()[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

struct CoarseMaps {
  ProbabilityMap prob;
  SemanticHeatmap heat;
};

inline constexpr int kSynthStrokeWidth = 7;

// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Emulates a coarse network output for a known layout: stroked contour,
/// blurred, with seeded uniform noise, zeroed inside occluders.
inline CoarseMaps synthesize_coarse(const LayoutModel& L, ImageSize dims, double blur_sigma,
                                    double noise_amp, const std::vector<PixelRect>& occlusions,
                                    std::uint64_t seed) {
  if (blur_sigma < 0) fail(ErrorCode::InvalidArgument, "negative blur");
  if (!(noise_amp >= 0 && noise_amp < 0.5)) fail(ErrorCode::InvalidArgument, "noise_amp outside [0,0.5)");
  const auto runs = rasterize_checked(L, dims.width, dims.height);
  const auto contour = contour_from_runs(runs, kSynthStrokeWidth);
  const auto labels = to_labeling(runs);

  ProbabilityMap P(dims.width, dims.height, 0.0f);
  for (std::size_t i = 0; i < P.size(); ++i) P.data()[i] = contour.mask.data()[i] ? 1.0f : 0.0f;
  P = gaussian_blur(P, blur_sigma);
  if (noise_amp > 0) {
    std::mt19937_64 rng(seed);
    for (auto& p : P.data()) p += static_cast<float>(noise_amp * (2.0 * unit_uniform(rng) - 1.0));
  }
  for (auto& p : P.data()) p = std::clamp(p, 0.0f, 1.0f);
  for (const auto& r : occlusions)
    for (int y = std::max(0, r.y0); y <= std::min(dims.height - 1, r.y1); ++y)
      for (int x = std::max(0, r.x0); x <= std::min(dims.width - 1, r.x1); ++x) P(x, y) = 0.0f;

  SemanticHeatmap S(dims.width, dims.height);
  for (std::size_t i = 0; i < labels.size(); ++i) S.channels[labels.data()[i]].data()[i] = 1.0f;
  for (auto& c : S.channels) c = gaussian_blur(c, blur_sigma);
  S.normalize();
  return {std::move(P), std::move(S)};
}

}  // namespace cfile
