#pragma once

#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfile/io.hpp"
#include "cfile/metrics.hpp"
#include "cfile/pipeline.hpp"
#include "cfile/synth.hpp"

// Command implementations behind the cfile executable. Each returns an exit
// code; module errors surface as Error and are mapped by run_command.
namespace cfile::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPairing = 3;
inline constexpr int kExitOutput = 4;
inline constexpr int kExitNoHypothesis = 5;

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Unpaired: return kExitPairing;
    case ErrorCode::OutputFailed: return kExitOutput;
    case ErrorCode::NoValidHypothesis:
    case ErrorCode::ZeroContour: return kExitNoHypothesis;
    default: return kExitInput;
  }
}

inline std::string error_json(ErrorCode c, const std::string& message) {
  return json{{"error", std::string(error_name(c))}, {"message", message}}.dump();
}

/// Runs a command, turning errors into a one-line JSON object on `err` and an exit code.
template <typename F>
int run_command(F&& body, std::FILE* err = stderr) {
  try {
    return body();
  } catch (const Error& e) {
    std::fprintf(err, "%s\n", error_json(e.code(), e.what()).c_str());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(err, "%s\n", error_json(ErrorCode::OutputFailed, e.what()).c_str());
    return kExitOutput;
  }
}

// ---------------------------------------------------------------------------
// Bundle naming: <stem>.png image, <stem>.prob.png P, <stem>.heat_*.png S,
// <stem>.labels.png + <stem>.gt.json truth; refine writes <stem>.layout.json,
// <stem>.ranked.json and <stem>.overlay.png.

inline fs::path with_suffix(const fs::path& dir, const std::string& stem, const std::string& suffix) {
  return dir / (stem + suffix);
}

inline std::string scene_stem(int i) {
  std::ostringstream s;
  s << "scene_" << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

/// Stems with a file ending in `suffix` directly inside dir, sorted.
inline std::vector<std::string> stems_with_suffix(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) fail(ErrorCode::InputNotFound, "not a directory: " + dir.string());
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline json corners_json(const std::vector<CornerPoint>& corners) {
  json out = json::array();
  for (const auto& c : corners) out.push_back({{"id", c.id}, {"xy", to_json(c.xy)}});
  return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  int n_scenes = 1;
  double occlusion_level = 0.0;
  double noise_amp = 0.15;
  double blur_sigma = 2.0;
  std::uint64_t seed = 0;
  int width = 480, height = 360;
  fs::path out_dir;
};

inline std::uint64_t scene_seed(std::uint64_t seed, int i) {
  return seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(i) + 1;
}

inline int cmd_synth(const SynthArgs& a) {
  if (a.n_scenes < 1) fail(ErrorCode::InvalidArgument, "n_scenes must be at least 1");
  if (a.occlusion_level < 0 || a.occlusion_level > 1) fail(ErrorCode::InvalidArgument, "occlusion_level outside [0,1]");
  if (a.width < 16 || a.height < 16) fail(ErrorCode::InvalidArgument, "scene size below 16 px");
  SynthOptions opt;
  opt.dims = {a.width, a.height};
  opt.noise_amp = a.noise_amp;
  opt.blur_sigma = a.blur_sigma;
  opt.occlusion_level = a.occlusion_level;
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec || !fs::is_directory(a.out_dir)) fail(ErrorCode::OutputFailed, "cannot create " + a.out_dir.string());

  json manifest{{"n_scenes", a.n_scenes}, {"occlusion_level", a.occlusion_level}, {"noise_amp", a.noise_amp},
                {"blur_sigma", a.blur_sigma}, {"seed", a.seed}, {"width", a.width}, {"height", a.height},
                {"scenes", json::array()}};
  for (int i = 0; i < a.n_scenes; ++i) {
    const std::string stem = scene_stem(i);
    const auto s = synthesize_scene(opt, scene_seed(a.seed, i));
    write_rgb_png(with_suffix(a.out_dir, stem, ".png"), s.image);
    write_probability_png(with_suffix(a.out_dir, stem, ".prob.png"), s.coarse.prob);
    write_heatmap_pngs(with_suffix(a.out_dir, stem, ".heat"), s.coarse.heat);
    write_label_png(with_suffix(a.out_dir, stem, ".labels.png"), s.labels);
    GroundTruth gt;
    for (const auto& c : layout_corner_points(s.layout, opt.dims, true)) gt.corners.push_back({c.id, c.xy});
    gt.surfaces = stem + ".labels.png";
    json j = to_json(gt);
    j["layout"] = to_json(s.layout);
    j["image_size"] = {a.width, a.height};
    j["l2_coverage"] = s.l2_coverage;
    json occ = json::array();
    for (const auto& r : s.occlusions) occ.push_back({r.x0, r.y0, r.x1, r.y1});
    j["occlusions"] = occ;
    write_json(with_suffix(a.out_dir, stem, ".gt.json"), j);
    manifest["scenes"].push_back(stem);
  }
  write_json(a.out_dir / "manifest.json", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render

inline void paint(RgbImage& img, const Mask& m, Rgb color) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i]) img.data()[i] = color;
}

// Pixels with a 4-neighbour of greater label, grown to a 3 px stroke.
inline Mask labeling_boundary(const SurfaceLabeling& lab) {
  Mask b(lab.width(), lab.height(), 0);
  for (int y = 0; y < lab.height(); ++y)
    for (int x = 0; x < lab.width(); ++x)
      if ((x + 1 < lab.width() && lab(x + 1, y) > lab(x, y)) || (x > 0 && lab(x - 1, y) > lab(x, y)) ||
          (y + 1 < lab.height() && lab(x, y + 1) > lab(x, y)) || (y > 0 && lab(x, y - 1) > lab(x, y)))
        b(x, y) = 1;
  return dilate_square(b, 1);
}

/// Image with the ground-truth boundary in green and the prediction in red on top.
inline RgbImage render_overlay(const RgbImage& image, const LayoutModel& pred, const SurfaceLabeling* truth) {
  RgbImage out = image;
  if (truth && truth->same_size(image)) paint(out, labeling_boundary(*truth), Rgb{0, 200, 0});
  paint(out, layout_to_contour(pred, image.width(), image.height(), 3).mask, Rgb{230, 0, 0});
  return out;
}

inline SurfaceLabeling truth_labels(const fs::path& gt_json) {
  const auto gt = ground_truth_from_json(read_json(gt_json));
  return read_label_png(gt_json.parent_path() / gt.surfaces);
}

struct RenderArgs {
  fs::path layout_json, image, out;
  std::optional<fs::path> gt_json;
};

inline int cmd_render(const RenderArgs& a) {
  const json j = read_json(a.layout_json);
  const auto L = layout_from_json(j.contains("layout") ? j.at("layout") : j);
  const auto img = read_rgb_png(a.image);
  std::optional<SurfaceLabeling> truth;
  if (a.gt_json) truth = truth_labels(*a.gt_json);
  write_rgb_png(a.out, render_overlay(img, L, truth ? &*truth : nullptr));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// refine

struct RefineArgs {
  fs::path image, coarse;
  std::optional<fs::path> heatmap, gt_json, debug_dir;
  fs::path out_dir;
  PipelineConfig config;
  int ranked_top = 100;
};

inline json ranked_json(const RefineResult& r, const PipelineConfig& cfg, int top) {
  json entries = json::array();
  for (std::size_t k = 0; k < r.ranked.size() && k < static_cast<std::size_t>(top); ++k) {
    const auto& s = r.ranked[k];
    const auto& info = r.hypotheses.info[s.index];
    std::string prov(4, '-');
    for (int i = 0; i < 4; ++i) prov[i] = provenance_letter(info.provenance[i]);
    entries.push_back({{"rank", k},
                       {"index", s.index},
                       {"score", s.score},
                       {"layout_pixels", s.layout_pixels},
                       {"provenance", prov},
                       {"layout", to_json(rescale_layout(s.layout, r.working, r.original))}});
  }
  return {{"line_width", cfg.line_width_score},
          {"scored", r.ranked.size()},
          {"working_size", {r.working.width, r.working.height}},
          {"entries", entries}};
}

inline json role_lines_json(const std::vector<RoleLine>& lines) {
  json out = json::array();
  for (const auto& l : lines)
    out.push_back({{"role", role_name(l.role)},
                   {"provenance", provenance_name(l.provenance)},
                   {"strength", l.strength},
                   {"low_confidence", l.low_confidence},
                   {"line", to_json(l.line)}});
  return out;
}

inline json classified_json(const std::vector<ClassifiedLine>& lines) {
  json out = json::array();
  for (const auto& l : lines)
    out.push_back({{"group", l.group}, {"strength", l.strength}, {"segments", l.support.size()}, {"line", to_json(l.line)}});
  return out;
}

inline json point_json(const Point2& p) { return json::array({p.x(), p.y(), p.w()}); }

/// Intermediate artifacts at working resolution, for stage-by-stage inspection.
inline void write_debug(const fs::path& dir, const std::string& stem, const RefineResult& r) {
  write_gray8_png(with_suffix(dir, stem, ".mask.png"), [&] {
    Mask m = r.mask.mask;
    for (auto& p : m.data()) p = p ? 255 : 0;
    return m;
  }());
  json segs = json::array();
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    json s = to_json(r.segments[i]);
    s["group"] = i < r.triple.assignment.size() ? r.triple.assignment[i] : -1;
    segs.push_back(s);
  }
  write_json(with_suffix(dir, stem, ".segments.json"), segs);
  json vps = json::array();
  for (int k = 0; k < 3; ++k)
    vps.push_back({{"point", point_json(r.triple[k])},
                   {"found", r.triple.found[k]},
                   {"support", r.triple.support[k]},
                   {"count", r.triple.count[k]}});
  write_json(with_suffix(dir, stem, ".lines.json"),
             {{"vanishing_points", vps},
              {"v0", point_json(r.v0)},
              {"classified",
               {{"ceiling", classified_json(r.classified.ceiling)},
                {"wall", classified_json(r.classified.wall)},
                {"floor", classified_json(r.classified.floor)}}},
              {"critical",
               {{"original", role_lines_json(r.critical.original)},
                {"occluded", role_lines_json(r.critical.occluded)},
                {"undetected", role_lines_json(r.critical.undetected)}}},
              {"required_roles", r.required}});
  json scores = json::array();
  for (const auto& s : r.ranked) scores.push_back({{"index", s.index}, {"score", s.score}});
  write_json(with_suffix(dir, stem, ".hypotheses.json"),
             {{"count", r.hypotheses.size()},
              {"considered", r.hypotheses.considered},
              {"rejected", r.hypotheses.rejected},
              {"capped", r.hypotheses.capped},
              {"topology_counts", r.hypotheses.topology_counts},
              {"provenance_counts", r.hypotheses.provenance_counts},
              {"scores", scores}});
}

inline std::string stem_of(const fs::path& image) {
  return image.stem().string();
}

inline int cmd_refine(const RefineArgs& a) {
  a.config.validate();
  if (!fs::exists(a.coarse)) fail(ErrorCode::InputNotFound, "coarse map not found: " + a.coarse.string());
  const auto image = read_rgb_png(a.image);
  const auto P = read_probability_png(a.coarse);
  if (!P.same_size(image)) fail(ErrorCode::DimensionMismatch, "coarse map and image differ in size");
  std::optional<SemanticHeatmap> S;
  if (a.heatmap) {
    S = read_heatmap(*a.heatmap);
    if (S->width() != image.width() || S->height() != image.height())
      fail(ErrorCode::DimensionMismatch, "heatmap and image differ in size");
  }
  std::optional<SurfaceLabeling> truth;
  if (a.gt_json) truth = truth_labels(*a.gt_json);

  const auto r = refine(image, P, S ? &*S : nullptr, a.config);
  const std::string stem = stem_of(a.image);
  const ImageSize dims = r.original;
  json out{{"image", a.image.filename().string()},
           {"image_size", {dims.width, dims.height}},
           {"layout", to_json(r.layout)},
           {"score", r.score},
           {"corners", corners_json(layout_corner_points(r.layout, dims, true))},
           {"config", to_json(a.config)}};
  write_json(with_suffix(a.out_dir, stem, ".layout.json"), out);
  write_json(with_suffix(a.out_dir, stem, ".ranked.json"), ranked_json(r, a.config, a.ranked_top));
  write_rgb_png(with_suffix(a.out_dir, stem, ".overlay.png"), render_overlay(image, r.layout, truth ? &*truth : nullptr));
  if (a.debug_dir) write_debug(*a.debug_dir, stem, r);
  return kExitOk;
}

/// Refines every scene of a synth bundle (stems with a .prob.png map).
inline int cmd_refine_bundle(const fs::path& bundle, const RefineArgs& base) {
  const auto stems = stems_with_suffix(bundle, ".prob.png");
  if (stems.empty()) fail(ErrorCode::InputNotFound, "no .prob.png maps in " + bundle.string());
  for (const auto& stem : stems) {
    RefineArgs a = base;
    a.image = with_suffix(bundle, stem, ".png");
    a.coarse = with_suffix(bundle, stem, ".prob.png");
    const auto heat = with_suffix(bundle, stem, ".heat");
    a.heatmap.reset();
    if (fs::exists(heatmap_png_path(heat, 0))) a.heatmap = heat;
    else if (fs::exists(with_suffix(bundle, stem, ".heat.cfh"))) a.heatmap = with_suffix(bundle, stem, ".heat.cfh");
    const auto gt = with_suffix(bundle, stem, ".gt.json");
    a.gt_json.reset();
    if (fs::exists(gt)) a.gt_json = gt;
    cmd_refine(a);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalRecord {
  std::string image;
  double pixel_error = 0, corner_error = 0;
};

struct EvalSummary {
  std::vector<EvalRecord> records;  // sorted by image stem
  double mean_pixel_error = 0, mean_corner_error = 0;
};

inline EvalSummary evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir) {
  const auto pred = stems_with_suffix(pred_dir, ".layout.json");
  const auto gt = stems_with_suffix(gt_dir, ".gt.json");
  std::vector<std::string> only_pred, only_gt;
  std::set_difference(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(only_pred));
  std::set_difference(gt.begin(), gt.end(), pred.begin(), pred.end(), std::back_inserter(only_gt));
  if (!only_pred.empty() || !only_gt.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& s : only_pred) msg += " " + s + ".layout.json";
    for (const auto& s : only_gt) msg += " " + s + ".gt.json";
    fail(ErrorCode::Unpaired, msg);
  }
  if (gt.empty()) fail(ErrorCode::EmptyDataset, "no ground-truth files in " + gt_dir.string());

  EvalSummary sum;
  for (const auto& stem : gt) {
    const auto gt_path = with_suffix(gt_dir, stem, ".gt.json");
    const auto g = ground_truth_from_json(read_json(gt_path));
    const auto labels = read_label_png(gt_path.parent_path() / g.surfaces);
    const ImageSize dims{labels.width(), labels.height()};
    const json pj = read_json(with_suffix(pred_dir, stem, ".layout.json"));
    const auto L = layout_from_json(pj.contains("layout") ? pj.at("layout") : pj);
    std::vector<CornerPoint> gc;
    for (const auto& c : g.corners) gc.push_back({c.id, c.xy});
    EvalRecord rec{stem, pixel_error(layout_to_labeling(L, dims.width, dims.height), labels),
                   corner_error(layout_corner_points(L, dims, false), gc, dims)};
    sum.mean_pixel_error += rec.pixel_error;
    sum.mean_corner_error += rec.corner_error;
    sum.records.push_back(rec);
  }
  sum.mean_pixel_error /= static_cast<double>(sum.records.size());
  sum.mean_corner_error /= static_cast<double>(sum.records.size());
  return sum;
}

inline std::string percent(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * f);
  return buf;
}

struct EvalArgs {
  fs::path pred_dir, gt_dir;
  std::optional<fs::path> out_dir;  // defaults to pred_dir
};

inline int cmd_eval(const EvalArgs& a, std::FILE* out = stdout) {
  const auto s = evaluate_dirs(a.pred_dir, a.gt_dir);
  const fs::path dir = a.out_dir.value_or(a.pred_dir);
  std::ostringstream csv;
  csv << std::setprecision(10) << "image,pixel_error,corner_error\n";
  for (const auto& r : s.records) csv << r.image << ',' << r.pixel_error << ',' << r.corner_error << '\n';
  write_text_atomic(dir / "results.csv", csv.str());
  write_json(dir / "summary.json", {{"images", s.records.size()},
                                    {"mean_pixel_error", s.mean_pixel_error},
                                    {"mean_corner_error", s.mean_corner_error}});
  std::fprintf(out, "images: %zu\nmean pixel error: %s\nmean corner error: %s\n", s.records.size(),
               percent(s.mean_pixel_error).c_str(), percent(s.mean_corner_error).c_str());
  return kExitOk;
}

}  // namespace cfile::app
