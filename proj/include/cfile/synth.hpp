#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"
#include "cfile/image.hpp"

namespace cfile {

/// Axis-aligned 3D box room seen by a pinhole camera. World frame: x right,
/// y up, z forward; floor y = 0, ceiling y = height, back (center) wall z = depth.
struct RoomCamera {
  double x_left = -2, x_right = 2, height = 2.8, depth = 5;
  Eigen::Vector3d center{0, 1.5, 0};
  double yaw = 0, pitch = 0;  // radians
  double focal = 300, cx = 200, cy = 150;

  // Optional furniture box against the back wall and a picture on it.
  bool has_furniture = false;
  Eigen::Vector3d furniture_min{0, 0, 0}, furniture_max{0, 0, 0};
  bool has_picture = false;
  double picture_x0 = 0, picture_x1 = 0, picture_y0 = 0, picture_y1 = 0;

  Eigen::Matrix3d rotation() const {
    const double cy_ = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    Eigen::Matrix3d ry, rx;
    ry << cy_, 0, sy, 0, 1, 0, -sy, 0, cy_;
    rx << 1, 0, 0, 0, cp, sp, 0, -sp, cp;
    return ry * rx;  // camera to world
  }

  // Homogeneous image point of a world point (or direction when w = 0).
  Point2 project(const Eigen::Vector3d& p, bool direction = false) const {
    const Eigen::Vector3d pc = rotation().transpose() * (direction ? p : Eigen::Vector3d(p - center));
    return Point2(focal * pc.x() + cx * pc.z(), -focal * pc.y() + cy * pc.z(), pc.z());
  }

  Eigen::Vector3d pixel_ray(double u, double v) const {
    return rotation() * Eigen::Vector3d((u - cx) / focal, -(v - cy) / focal, 1.0);
  }
};

/// Nearest-surface hit of a camera ray: a Surface label, or kUnusedLabel when
/// nothing is hit. `furniture` reports whether the furniture box is nearer.
struct RayHit {
  std::uint8_t label = kUnusedLabel;
  double t = 0;
  Eigen::Vector3d point;
  bool furniture = false;
};

inline RayHit cast_ray(const RoomCamera& cam, const Eigen::Vector3d& d) {
  const Eigen::Vector3d& o = cam.center;
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  auto consider = [&](double t, Surface s) {
    if (t > 1e-12 && t < best.t) {
      best.t = t;
      best.label = label_of(s);
    }
  };
  if (d.y() < 0) consider(-o.y() / d.y(), Surface::Floor);
  if (d.y() > 0) consider((cam.height - o.y()) / d.y(), Surface::Ceiling);
  if (d.x() < 0) consider((cam.x_left - o.x()) / d.x(), Surface::Left);
  if (d.x() > 0) consider((cam.x_right - o.x()) / d.x(), Surface::Right);
  if (d.z() > 0) consider((cam.depth - o.z()) / d.z(), Surface::Center);
  if (cam.has_furniture) {
    // slab test
    double t0 = 0, t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (std::abs(d[i]) < 1e-15) {
        if (o[i] < cam.furniture_min[i] || o[i] > cam.furniture_max[i]) t0 = t1 + 1;
        continue;
      }
      double a = (cam.furniture_min[i] - o[i]) / d[i], b = (cam.furniture_max[i] - o[i]) / d[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    if (t0 <= t1 && t0 > 1e-12 && t0 < best.t) {
      best.t = t0;
      best.furniture = true;
    }
  }
  best.point = o + best.t * d;
  return best;
}

/// Per-pixel ray-cast surface labels (furniture is transparent, as in
/// layout annotations that label the surface behind clutter).
inline SurfaceLabeling raycast_labels(const RoomCamera& cam, ImageSize dims) {
  RoomCamera bare = cam;
  bare.has_furniture = false;
  SurfaceLabeling out(dims.width, dims.height, kUnusedLabel);
  for (int y = 0; y < dims.height; ++y)
    for (int x = 0; x < dims.width; ++x) out(x, y) = cast_ray(bare, bare.pixel_ray(x, y)).label;
  return out;
}

/// Box layout implied by the room: the four back-wall edges and the depth
/// vanishing point. Lines whose outer surface is invisible are dropped.
inline LayoutModel room_layout(const RoomCamera& cam, const SurfaceLabeling& visible) {
  const double xl = cam.x_left, xr = cam.x_right, h = cam.height, d = cam.depth;
  const Point2 c1 = cam.project({xl, h, d}), c2 = cam.project({xl, 0, d});
  const Point2 c3 = cam.project({xr, 0, d}), c4 = cam.project({xr, h, d});
  std::array<bool, kNumSurfaces> seen{};
  for (auto l : visible.data())
    if (l < kNumSurfaces) seen[l] = true;
  LayoutModel L;
  L.v = cam.project({0, 0, 1}, true);
  if (seen[label_of(Surface::Ceiling)]) L.lines[0] = join(c1, c4);
  if (seen[label_of(Surface::Floor)]) L.lines[1] = join(c2, c3);
  if (seen[label_of(Surface::Left)]) L.lines[2] = join(c1, c2);
  if (seen[label_of(Surface::Right)]) L.lines[3] = join(c4, c3);
  return L;
}

struct SynthOptions {
  ImageSize dims{480, 360};
  double noise_amp = 0.15;
  double blur_sigma = 2.0;
  double occlusion_level = 0.0;  // fraction of the visible floor line hidden by furniture
  bool clutter = true;
};

struct SynthScene {
  RoomCamera camera;
  LayoutModel layout;
  SurfaceLabeling labels;
  RgbImage image;
  CoarseMaps coarse;
  std::vector<PixelRect> occlusions;
  double l2_coverage = 0;  // fraction of floor|center boundary pixels inside the occluders
  std::array<Point2, 4> room_corners;  // projected back-wall corners p1..p4
};

namespace detail {

inline double draw(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

inline Rgb shade(Rgb base, double k, double noise) {
  auto ch = [&](std::uint8_t c) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(c * k + noise), 0L, 255L));
  };
  return {ch(base.r), ch(base.g), ch(base.b)};
}

inline PixelRect furniture_silhouette(const RoomCamera& cam, ImageSize dims) {
  PixelRect r{dims.width, dims.height, -1, -1};
  for (int y = 0; y < dims.height; ++y)
    for (int x = 0; x < dims.width; ++x)
      if (cast_ray(cam, cam.pixel_ray(x, y)).furniture) {
        r.x0 = std::min(r.x0, x);
        r.y0 = std::min(r.y0, y);
        r.x1 = std::max(r.x1, x);
        r.y1 = std::max(r.y1, y);
      }
  return r;
}

inline double floor_line_coverage(const SurfaceLabeling& lab, const std::vector<PixelRect>& occ) {
  const std::uint8_t F = label_of(Surface::Floor), C = label_of(Surface::Center);
  int total = 0, covered = 0;
  for (int y = 0; y + 1 < lab.height(); ++y)
    for (int x = 0; x < lab.width(); ++x) {
      const bool edge = (lab(x, y) == C && lab(x, y + 1) == F) ||
                        (x + 1 < lab.width() && ((lab(x, y) == C && lab(x + 1, y) == F) ||
                                                 (lab(x, y) == F && lab(x + 1, y) == C)));
      if (!edge) continue;
      ++total;
      for (const auto& r : occ)
        if (r.contains(x, y)) {
          ++covered;
          break;
        }
    }
  return total ? double(covered) / total : 0.0;
}

}  // namespace detail

inline RgbImage render_room(const RoomCamera& cam, ImageSize dims, std::mt19937_64& rng) {
  using detail::draw;
  std::array<Rgb, kNumSurfaces> base;
  const double wall = draw(rng, 150, 200);
  const double tint_r = draw(rng, -20, 20), tint_b = draw(rng, -20, 20);
  auto col = [&](double g) {
    return Rgb{static_cast<std::uint8_t>(std::clamp(g + tint_r, 0.0, 255.0)),
               static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0)),
               static_cast<std::uint8_t>(std::clamp(g + tint_b, 0.0, 255.0))};
  };
  base[label_of(Surface::Ceiling)] = col(std::min(250.0, wall + draw(rng, 35, 50)));
  base[label_of(Surface::Center)] = col(wall);
  base[label_of(Surface::Left)] = col(wall - draw(rng, 25, 40));
  base[label_of(Surface::Right)] = col(wall + draw(rng, 20, 35));
  base[label_of(Surface::Floor)] =
      Rgb{static_cast<std::uint8_t>(draw(rng, 95, 130)), static_cast<std::uint8_t>(draw(rng, 70, 95)),
          static_cast<std::uint8_t>(draw(rng, 45, 70))};
  const Rgb furniture{static_cast<std::uint8_t>(draw(rng, 40, 70)),
                      static_cast<std::uint8_t>(draw(rng, 40, 60)),
                      static_cast<std::uint8_t>(draw(rng, 50, 80))};
  const Rgb picture{static_cast<std::uint8_t>(draw(rng, 60, 200)),
                    static_cast<std::uint8_t>(draw(rng, 60, 200)),
                    static_cast<std::uint8_t>(draw(rng, 60, 200))};

  RgbImage img(dims.width, dims.height);
  for (int y = 0; y < dims.height; ++y)
    for (int x = 0; x < dims.width; ++x) {
      const RayHit hit = cast_ray(cam, cam.pixel_ray(x, y));
      const double noise = draw(rng, -6, 6);
      const double falloff = 1.0 - 0.02 * std::min(hit.t, 10.0);
      if (hit.furniture) {
        // top face lighter than the front
        const bool top = std::abs(hit.point.y() - cam.furniture_max.y()) < 1e-6;
        img(x, y) = detail::shade(furniture, top ? 1.4 : 1.0, noise);
        continue;
      }
      Rgb c = hit.label < kNumSurfaces ? base[hit.label] : Rgb{0, 0, 0};
      if (cam.has_picture && hit.label == label_of(Surface::Center) &&
          hit.point.x() > cam.picture_x0 && hit.point.x() < cam.picture_x1 &&
          hit.point.y() > cam.picture_y0 && hit.point.y() < cam.picture_y1)
        c = picture;
      img(x, y) = detail::shade(c, falloff, noise);
    }
  return img;
}

/// Seeded random room with ground truth, rendered image and coarse maps.
inline SynthScene synthesize_scene(const SynthOptions& opt, std::uint64_t seed) {
  using detail::draw;
  std::mt19937_64 rng(seed);
  const ImageSize dims = opt.dims;
  for (int attempt = 0; attempt < 200; ++attempt) {
    RoomCamera cam;
    const double W = draw(rng, 3, 6);
    const double offset = draw(rng, -0.3, 0.3) * W;
    cam.x_left = -W / 2 - offset;
    cam.x_right = W / 2 - offset;
    cam.height = draw(rng, 2.4, 3.2);
    cam.depth = draw(rng, 3, 7);
    cam.center = Eigen::Vector3d(0, draw(rng, 1.2, 1.7), 0);
    cam.yaw = deg2rad(draw(rng, -15, 15));
    cam.pitch = deg2rad(draw(rng, -8, 8));
    cam.focal = draw(rng, 0.7, 1.0) * dims.width;
    cam.cx = 0.5 * (dims.width - 1);
    cam.cy = 0.5 * (dims.height - 1);
    if (opt.clutter) {
      cam.has_picture = true;
      const double pw = draw(rng, 0.5, 1.2);
      const double px = draw(rng, cam.x_left + 0.3, cam.x_right - 0.3 - pw);
      cam.picture_x0 = px;
      cam.picture_x1 = px + pw;
      cam.picture_y0 = draw(rng, 1.3, 1.6);
      cam.picture_y1 = cam.picture_y0 + draw(rng, 0.4, 0.7);
    }

    SynthScene s;
    const auto visible = raycast_labels(cam, dims);
    s.layout = room_layout(cam, visible);
    const CompiledLayout compiled(s.layout);
    if (!compiled.well_formed()) continue;
    const auto runs = compiled.rasterize(dims.width, dims.height);
    if (!runs.consistent || !labels_connected(runs)) continue;
    s.labels = to_labeling(runs);
    const auto center_px =
        std::count(s.labels.data().begin(), s.labels.data().end(), label_of(Surface::Center));
    if (center_px < 0.04 * s.labels.size() || !s.layout.lines[1]) continue;

    if (opt.occlusion_level > 0) {
      // visible stretch of the back floor edge, in world x
      double vx0 = cam.x_right, vx1 = cam.x_left;
      for (int i = 0; i <= 400; ++i) {
        const double x = cam.x_left + (cam.x_right - cam.x_left) * i / 400.0;
        const Point2 p = cam.project({x, 0, cam.depth});
        if (p.is_finite() && in_image(p.euclidean(), dims.width, dims.height)) {
          vx0 = std::min(vx0, x);
          vx1 = std::max(vx1, x);
        }
      }
      if (vx1 <= vx0) continue;
      const double span = std::min(1.0, opt.occlusion_level * 1.08) * (vx1 - vx0);
      const double start = draw(rng, vx0, vx1 - span);
      const double fx0 = opt.occlusion_level >= 1 ? cam.x_left : start;
      const double fx1 = opt.occlusion_level >= 1 ? cam.x_right : start + span;
      const double fd = draw(rng, 0.4, 0.6);
      cam.has_furniture = true;
      cam.furniture_min = Eigen::Vector3d(fx0, 0, cam.depth - fd);
      cam.furniture_max = Eigen::Vector3d(fx1, draw(rng, 0.6, 1.0), cam.depth);
      const PixelRect r = detail::furniture_silhouette(cam, dims);
      if (r.x1 < r.x0) continue;
      s.occlusions.push_back(r);
      s.l2_coverage = detail::floor_line_coverage(s.labels, s.occlusions);
      if (s.l2_coverage < std::min(1.0, opt.occlusion_level) - 1e-9) continue;
    }

    s.camera = cam;
    s.room_corners = {cam.project({cam.x_left, cam.height, cam.depth}),
                      cam.project({cam.x_left, 0, cam.depth}),
                      cam.project({cam.x_right, 0, cam.depth}),
                      cam.project({cam.x_right, cam.height, cam.depth})};
    s.image = render_room(cam, dims, rng);
    s.coarse = synthesize_coarse(s.layout, dims, opt.blur_sigma, opt.noise_amp, s.occlusions,
                                 rng());
    return s;
  }
  fail(ErrorCode::DegenerateConfiguration, "could not sample a valid synthetic room");
}

}  // namespace cfile
