#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cfile/coarse.hpp"
#include "cfile/geometry.hpp"

namespace cfile {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temp file and renames, so readers never see a partial file.
inline void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::OutputFailed, "cannot write " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail(ErrorCode::OutputFailed, "short write to " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::OutputFailed, "cannot rename into " + path.string());
  }
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

// ---------------------------------------------------------------------------
// PNG

namespace detail {

struct PngRaw {
  int width = 0, height = 0, channels = 0, depth = 0;
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit samples big-endian
  std::string error;

  unsigned sample(std::size_t i) const {
    return depth == 16 ? (unsigned(bytes[2 * i]) << 8) | bytes[2 * i + 1] : bytes[i];
  }
};

inline void png_error_to_string(png_structp png, png_const_charp msg) {
  static_cast<PngRaw*>(png_get_error_ptr(png))->error = msg;
  png_longjmp(png, 1);
}
inline void png_warning_ignore(png_structp, png_const_charp) {}

// Plain C control flow only between setjmp and any longjmp.
inline bool png_decode(std::FILE* f, PngRaw* out) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, out, png_error_to_string, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  png_bytep* volatile rows = nullptr;
  if (!info || setjmp(png_jmpbuf(png))) {
    std::free(rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->channels = png_get_channels(png, info);
  out->depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out->bytes.resize(stride * out->height);
  rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * out->height));
  for (int y = 0; y < out->height; ++y) rows[y] = out->bytes.data() + stride * y;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  std::free(rows);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline PngRaw read_png(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
  PngRaw raw;
  const bool ok = png_decode(f, &raw);
  std::fclose(f);
  if (!ok) fail(ErrorCode::ParseError, "bad PNG " + path.string() + ": " + raw.error);
  return raw;
}

inline void png_append(png_structp png, png_bytep data, png_size_t n) {
  auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  buf->insert(buf->end(), data, data + n);
}
inline void png_flush_noop(png_structp) {}

inline bool png_encode(const PngRaw* in, std::vector<std::uint8_t>* out, PngRaw* err) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_to_string, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, png_append, png_flush_noop);
  const int color = in->channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, in->width, in->height, in->depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = std::size_t(in->width) * in->channels * (in->depth / 8);
  for (int y = 0; y < in->height; ++y)
    png_write_row(png, const_cast<png_bytep>(in->bytes.data() + stride * y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline void write_png(const fs::path& path, const PngRaw& raw) {
  std::vector<std::uint8_t> buf;
  PngRaw err;
  if (!png_encode(&raw, &buf, &err))
    fail(ErrorCode::OutputFailed, "PNG encode failed for " + path.string() + ": " + err.error);
  write_file_atomic(path, buf.data(), buf.size());
}

}  // namespace detail

inline RgbImage read_rgb_png(const fs::path& path) {
  const auto raw = detail::read_png(path);
  RgbImage img(raw.width, raw.height);
  const int shift = raw.depth == 16 ? 8 : 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::size_t base = i * raw.channels;
    auto s = [&](int c) { return static_cast<std::uint8_t>(raw.sample(base + c) >> shift); };
    img.data()[i] = raw.channels >= 3 ? Rgb{s(0), s(1), s(2)} : Rgb{s(0), s(0), s(0)};
  }
  return img;
}

inline void write_rgb_png(const fs::path& path, const RgbImage& img) {
  detail::PngRaw raw{img.width(), img.height(), 3, 8, {}, {}};
  raw.bytes.reserve(img.size() * 3);
  for (const Rgb& p : img.data()) raw.bytes.insert(raw.bytes.end(), {p.r, p.g, p.b});
  detail::write_png(path, raw);
}

// Single-channel reader; the first channel is used for color inputs.
inline Image<float> read_gray_png_unit(const fs::path& path) {
  const auto raw = detail::read_png(path);
  Image<float> img(raw.width, raw.height);
  const double scale = raw.depth == 16 ? 65535.0 : 255.0;
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<float>(raw.sample(i * raw.channels) / scale);
  return img;
}

/// Probability maps are 16-bit grayscale scaled by 65535 (8-bit input accepted).
inline ProbabilityMap read_probability_png(const fs::path& path) {
  return read_gray_png_unit(path);
}

inline void write_gray16_png(const fs::path& path, const Image<float>& img) {
  detail::PngRaw raw{img.width(), img.height(), 1, 16, {}, {}};
  raw.bytes.reserve(img.size() * 2);
  for (float p : img.data()) {
    const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0f, 1.0f) * 65535.0));
    raw.bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    raw.bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  detail::write_png(path, raw);
}

inline void write_probability_png(const fs::path& path, const ProbabilityMap& P) {
  write_gray16_png(path, P);
}

inline SurfaceLabeling read_label_png(const fs::path& path) {
  const auto raw = detail::read_png(path);
  if (raw.depth != 8) fail(ErrorCode::ParseError, "label PNG must be 8-bit: " + path.string());
  SurfaceLabeling lab(raw.width, raw.height);
  for (std::size_t i = 0; i < lab.size(); ++i)
    lab.data()[i] = static_cast<std::uint8_t>(raw.sample(i * raw.channels));
  return lab;
}

inline void write_gray8_png(const fs::path& path, const Image<std::uint8_t>& img) {
  detail::write_png(path, {img.width(), img.height(), 1, 8, img.data(), {}});
}

inline void write_label_png(const fs::path& path, const SurfaceLabeling& lab) {
  write_gray8_png(path, lab);
}

// ---------------------------------------------------------------------------
// Semantic heatmaps: five 16-bit PNGs or one CFH1 binary file

inline constexpr const char* kHeatmapSuffixes[kNumSurfaces] = {"_ceil", "_floor", "_left",
                                                               "_center", "_right"};

inline fs::path heatmap_png_path(const fs::path& stem, int channel) {
  return stem.string() + kHeatmapSuffixes[channel] + ".png";
}

inline void write_heatmap_pngs(const fs::path& stem, const SemanticHeatmap& S) {
  for (int c = 0; c < kNumSurfaces; ++c) write_gray16_png(heatmap_png_path(stem, c), S.channels[c]);
}

inline SemanticHeatmap read_heatmap_pngs(const fs::path& stem) {
  SemanticHeatmap S;
  for (int c = 0; c < kNumSurfaces; ++c) {
    S.channels[c] = read_gray_png_unit(heatmap_png_path(stem, c));
    if (!S.channels[c].same_size(S.channels[0]))
      fail(ErrorCode::DimensionMismatch, "heatmap channels differ in size");
  }
  return S;
}

namespace detail {
inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
}  // namespace detail

// "CFH1", u32 width, u32 height, then 5 planes of little-endian float32, row-major.
inline void write_heatmap_cfh(const fs::path& path, const SemanticHeatmap& S) {
  std::vector<std::uint8_t> out{'C', 'F', 'H', '1'};
  detail::put_u32le(out, static_cast<std::uint32_t>(S.width()));
  detail::put_u32le(out, static_cast<std::uint32_t>(S.height()));
  for (const auto& c : S.channels)
    for (float f : c.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      detail::put_u32le(out, bits);
    }
  write_file_atomic(path, out.data(), out.size());
}

inline SemanticHeatmap read_heatmap_cfh(const fs::path& path) {
  const std::string s = read_text(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  if (s.size() < 12 || s.compare(0, 4, "CFH1") != 0)
    fail(ErrorCode::ParseError, "missing CFH1 header: " + path.string());
  const std::uint32_t w = detail::get_u32le(p + 4), h = detail::get_u32le(p + 8);
  const std::size_t n = std::size_t(w) * h;
  if (s.size() != 12 + 4 * kNumSurfaces * n)
    fail(ErrorCode::ParseError, "CFH1 payload size mismatch: " + path.string());
  SemanticHeatmap S(static_cast<int>(w), static_cast<int>(h));
  const std::uint8_t* q = p + 12;
  for (auto& c : S.channels)
    for (float& f : c.data()) {
      const std::uint32_t bits = detail::get_u32le(q);
      std::memcpy(&f, &bits, 4);
      q += 4;
    }
  return S;
}

/// Accepts a CFH1 file, or a stem naming the five per-surface PNGs.
inline SemanticHeatmap read_heatmap(const fs::path& path) {
  if (fs::is_regular_file(path)) return read_heatmap_cfh(path);
  if (!fs::exists(heatmap_png_path(path, 0)))
    fail(ErrorCode::InputNotFound, "no heatmap at " + path.string());
  return read_heatmap_pngs(path);
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const Line& l) { return json::array({l.a(), l.b(), l.c()}); }
inline json to_json(Vec2 p) { return json::array({p.x, p.y}); }

inline Line line_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::ParseError, "line must be [a,b,c]");
  return Line(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Vec2 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorCode::ParseError, "point must be [x,y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const LayoutModel& L) {
  json lines = json::object();
  for (auto r : kAllRoles) lines[role_name(r)] = L.line(r) ? to_json(*L.line(r)) : json(nullptr);
  return {{"v", to_json(L.v.euclidean())}, {"lines", lines}, {"topology", L.topology().pattern()}};
}

inline LayoutModel layout_from_json(const json& j) {
  try {
    LayoutModel L;
    L.v = Point2(vec_from_json(j.at("v")));
    const json& lines = j.at("lines");
    for (auto r : kAllRoles) {
      const auto it = lines.find(role_name(r));
      if (it != lines.end() && !it->is_null()) L.line(r) = line_from_json(*it);
    }
    if (j.contains("topology") &&
        Topology::from_pattern(j["topology"].get<std::string>()) != L.topology())
      fail(ErrorCode::ParseError, "topology pattern disagrees with present lines");
    return L;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("layout JSON: ") + e.what());
  }
}

inline json to_json(const LineSegment& s) {
  return {{"p0", to_json(s.p0)}, {"p1", to_json(s.p1)}, {"strength", s.strength}};
}

inline LineSegment segment_from_json(const json& j) {
  LineSegment s{vec_from_json(j.at("p0")), vec_from_json(j.at("p1")), j.value("strength", 1.0)};
  if (s.p0 == s.p1) fail(ErrorCode::ParseError, "segment endpoints coincide");
  if (s.strength < 0) fail(ErrorCode::ParseError, "negative segment strength");
  return s;
}

/// Segments as a JSON array or as JSON lines, one object per line.
inline std::vector<LineSegment> segments_from_text(const std::string& text) {
  std::vector<LineSegment> out;
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
      for (const auto& j : json::parse(text)) out.push_back(segment_from_json(j));
      return out;
    }
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        out.push_back(segment_from_json(json::parse(line)));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("segments JSON: ") + e.what());
  }
  return out;
}

inline json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

// Ground truth per image: corners keyed by role id plus the surface label PNG.
struct GroundTruth {
  struct Entry {
    std::string id;
    Vec2 xy;
  };
  std::vector<Entry> corners;
  std::string surfaces;  // path relative to the JSON file
};

inline json to_json(const GroundTruth& gt) {
  json corners = json::array();
  for (const auto& c : gt.corners) corners.push_back({{"id", c.id}, {"xy", to_json(c.xy)}});
  return {{"corners", corners}, {"surfaces", gt.surfaces}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  try {
    GroundTruth gt;
    for (const auto& c : j.at("corners"))
      gt.corners.push_back({c.at("id").get<std::string>(), vec_from_json(c.at("xy"))});
    gt.surfaces = j.at("surfaces").get<std::string>();
    return gt;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("ground truth JSON: ") + e.what());
  }
}

}  // namespace cfile
