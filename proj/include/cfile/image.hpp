#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cfile/error.hpp"

namespace cfile {

// Dense row-major raster. Pixel (x, y) has its center at integer coordinates.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) fail(ErrorCode::InvalidArgument, "negative image size");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_size(int w, int h) const noexcept { return w == width_ && h == height_; }
  template <typename U>
  bool same_size(const Image<U>& other) const noexcept {
    return other.width() == width_ && other.height() == height_;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Image<Rgb>;
using Mask = Image<std::uint8_t>;

struct ImageSize {
  int width = 0;
  int height = 0;
  double diagonal() const { return std::hypot(double(width), double(height)); }
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

template <typename T>
ImageSize size_of(const Image<T>& img) {
  return {img.width(), img.height()};
}

// Axis-aligned pixel rectangle, inclusive bounds.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool contains(int x, int y) const noexcept { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Chebyshev (square) dilation, separable running-window max over a binary mask.
inline Mask dilate_square(const Mask& src, int radius) {
  if (radius <= 0) return src;
  const int w = src.width(), h = src.height();
  Mask horiz(w, h, 0), out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    auto in = src.row(y);
    auto o = horiz.row(y);
    int last = -1'000'000;  // last set column seen
    for (int x = 0; x < w; ++x) {
      if (in[x]) last = x;
      if (x - last <= radius) o[x] = 1;
    }
    last = 1'000'000;
    for (int x = w - 1; x >= 0; --x) {
      if (in[x]) last = x;
      if (last - x <= radius) o[x] = 1;
    }
  }
  for (int x = 0; x < w; ++x) {
    int last = -1'000'000;
    for (int y = 0; y < h; ++y) {
      if (horiz(x, y)) last = y;
      if (y - last <= radius) out(x, y) = 1;
    }
    last = 1'000'000;
    for (int y = h - 1; y >= 0; --y) {
      if (horiz(x, y)) last = y;
      if (last - y <= radius) out(x, y) = 1;
    }
  }
  return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with replicated borders, so a partition of unity stays one.
template <typename T>
Image<T> gaussian_blur(const Image<T>& src, double sigma) {
  if (sigma <= 0) return src;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = src.width(), h = src.height();
  Image<double> tmp(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  }
  Image<T> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = static_cast<T>(acc);
    }
  }
  return out;
}

// Bilinear resampling with pixel-center alignment.
template <typename T, typename Lerp>
Image<T> resize_bilinear_with(const Image<T>& src, int width, int height, Lerp lerp) {
  if (src.width() == width && src.height() == height) return src;
  Image<T> out(width, height);
  const double sx = double(src.width()) / width;
  const double sy = double(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      out(x, y) = lerp(src(x0, y0), src(x1, y0), src(x0, y1), src(x1, y1), tx, ty);
    }
  }
  return out;
}

template <typename T>
Image<T> resize_bilinear(const Image<T>& src, int width, int height) {
  return resize_bilinear_with(src, width, height,
                              [](T a, T b, T c, T d, double tx, double ty) {
                                const double top = a + (b - a) * tx;
                                const double bot = c + (d - c) * tx;
                                return static_cast<T>(top + (bot - top) * ty);
                              });
}

inline RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  return resize_bilinear_with(src, width, height,
                              [](Rgb a, Rgb b, Rgb c, Rgb d, double tx, double ty) {
                                auto ch = [&](auto get) {
                                  const double top = get(a) + (get(b) - get(a)) * tx;
                                  const double bot = get(c) + (get(d) - get(c)) * tx;
                                  return static_cast<std::uint8_t>(
                                      std::clamp(std::lround(top + (bot - top) * ty), 0L, 255L));
                                };
                                return Rgb{ch([](Rgb p) { return double(p.r); }),
                                           ch([](Rgb p) { return double(p.g); }),
                                           ch([](Rgb p) { return double(p.b); })};
                              });
}

inline Image<double> to_gray(const RgbImage& img) {
  Image<double> out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Rgb p = img.data()[i];
    out.data()[i] = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
  }
  return out;
}

}  // namespace cfile
