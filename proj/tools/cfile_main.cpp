#include <CLI11.hpp>

#include "cfile/app.hpp"

using namespace cfile;

namespace {

// Pipeline flags mirror the config fields; explicit flags win over --config.
struct ConfigFlags {
  std::optional<std::string> file;
  std::optional<double> threshold, grid_extent, grid_step, min_segment_length;
  std::optional<int> dilation_radius, line_width_score;
  std::optional<std::size_t> max_hypotheses;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "JSON config file");
    cmd->add_option("--threshold", threshold, "coarse contour threshold (0,1)");
    cmd->add_option("--dilation-radius", dilation_radius, "mask dilation radius, px");
    cmd->add_option("--line-width-score", line_width_score, "contour width used by the score, px");
    cmd->add_option("--grid-extent", grid_extent, "vanishing point grid half-extent, px");
    cmd->add_option("--grid-step", grid_step, "vanishing point grid step, px");
    cmd->add_option("--max-hypotheses", max_hypotheses, "hypothesis cap");
    cmd->add_option("--min-segment-length", min_segment_length, "shortest line segment kept, px");
    cmd->add_option("--seed", seed, "seed");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = file ? config_from_json(read_json(*file)) : PipelineConfig{};
    if (threshold) c.threshold = *threshold;
    if (dilation_radius) c.dilation_radius = *dilation_radius;
    if (line_width_score) c.line_width_score = *line_width_score;
    if (grid_extent) c.grid_extent = *grid_extent;
    if (grid_step) c.grid_step = *grid_step;
    if (max_hypotheses) c.max_hypotheses = *max_hypotheses;
    if (min_segment_length) c.min_segment_length = *min_segment_length;
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Indoor layout refinement from a coarse contour map"};
  cli.require_subcommand(1);

  // refine
  auto* refine_cmd = cli.add_subcommand("refine", "refine one image, or every scene of a bundle");
  app::RefineArgs ra;
  std::string image, coarse, heatmap, gt, debug_dir, bundle, out_dir = ".";
  ConfigFlags flags;
  refine_cmd->add_option("--image", image, "RGB PNG");
  refine_cmd->add_option("--coarse", coarse, "coarse contour probability PNG");
  refine_cmd->add_option("--heatmap", heatmap, "semantic heatmap: CFH1 file or PNG stem");
  refine_cmd->add_option("--gt", gt, "ground-truth JSON, drawn in the overlay");
  refine_cmd->add_option("--bundle", bundle, "synth bundle directory (replaces the per-file inputs)");
  refine_cmd->add_option("--out-dir", out_dir, "output directory");
  refine_cmd->add_option("--debug-dir", debug_dir, "write intermediate artifacts here");
  refine_cmd->add_option("--ranked-top", ra.ranked_top, "entries kept in the ranked list")->check(CLI::PositiveNumber);
  flags.attach(refine_cmd);

  // eval
  auto* eval_cmd = cli.add_subcommand("eval", "pixel and corner error of predictions against ground truth");
  app::EvalArgs ea;
  std::string eval_out;
  eval_cmd->add_option("pred_dir", ea.pred_dir, "directory of <stem>.layout.json")->required();
  eval_cmd->add_option("gt_dir", ea.gt_dir, "directory of <stem>.gt.json")->required();
  eval_cmd->add_option("--out-dir", eval_out, "where results.csv and summary.json go (default pred_dir)");

  // synth
  auto* synth_cmd = cli.add_subcommand("synth", "generate a seeded synthetic scene bundle");
  app::SynthArgs sa;
  std::string synth_out;
  synth_cmd->add_option("--n", sa.n_scenes, "number of scenes")->required();
  synth_cmd->add_option("--occlusion-level", sa.occlusion_level, "fraction of the floor line hidden, [0,1]");
  synth_cmd->add_option("--noise-amp", sa.noise_amp, "uniform noise amplitude on P, [0,0.5)");
  synth_cmd->add_option("--blur", sa.blur_sigma, "Gaussian blur sigma of P, px");
  synth_cmd->add_option("--seed", sa.seed, "seed");
  synth_cmd->add_option("--width", sa.width, "image width");
  synth_cmd->add_option("--height", sa.height, "image height");
  synth_cmd->add_option("--out-dir", synth_out, "bundle directory")->required();

  // render
  auto* render_cmd = cli.add_subcommand("render", "draw a layout over its image");
  app::RenderArgs rda;
  std::string layout_path, render_image, render_out, render_gt;
  render_cmd->add_option("--layout", layout_path, "layout JSON")->required();
  render_cmd->add_option("--image", render_image, "RGB PNG")->required();
  render_cmd->add_option("--out", render_out, "output PNG")->required();
  render_cmd->add_option("--gt", render_gt, "ground-truth JSON, drawn in green");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", app::error_json(ErrorCode::InvalidArgument, e.what()).c_str());
    return app::kExitInput;
  }

  auto opt_path = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };

  return app::run_command([&] {
    if (refine_cmd->parsed()) {
      ra.config = flags.resolve();
      ra.out_dir = out_dir;
      ra.debug_dir = opt_path(debug_dir);
      if (!bundle.empty()) return app::cmd_refine_bundle(bundle, ra);
      if (image.empty() || coarse.empty())
        fail(ErrorCode::InvalidArgument, "refine needs --image and --coarse, or --bundle");
      ra.image = image;
      ra.coarse = coarse;
      ra.heatmap = opt_path(heatmap);
      ra.gt_json = opt_path(gt);
      return app::cmd_refine(ra);
    }
    if (eval_cmd->parsed()) {
      ea.out_dir = opt_path(eval_out);
      return app::cmd_eval(ea);
    }
    if (synth_cmd->parsed()) {
      sa.out_dir = synth_out;
      return app::cmd_synth(sa);
    }
    rda.layout_json = layout_path;
    rda.image = render_image;
    rda.out = render_out;
    rda.gt_json = opt_path(render_gt);
    return app::cmd_render(rda);
  });
}
