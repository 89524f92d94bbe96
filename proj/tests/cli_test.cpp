#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "cfile/app.hpp"

namespace cfile {
namespace {

struct CliRun {
  int code;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("cfile_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun cli(const std::string& args) const {
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string(CFILE_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(err)};
  }

  std::string p(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

std::map<std::string, std::string> dir_contents(const fs::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(d)) out[e.path().filename().string()] = read_text(e.path());
  return out;
}

TEST_F(CliTest, SynthIsDeterministicPerSeed) {
  ASSERT_EQ(cli("synth --n 1 --seed 7 --out-dir " + p("a")).code, 0);
  ASSERT_EQ(cli("synth --n 1 --seed 7 --out-dir " + p("b")).code, 0);
  const auto a = dir_contents(dir_ / "a"), b = dir_contents(dir_ / "b");
  EXPECT_EQ(a.size(), 10u);  // image, P, 5 heatmap planes, labels, truth, manifest
  EXPECT_TRUE(a == b);
  ASSERT_EQ(cli("synth --n 1 --seed 8 --out-dir " + p("c")).code, 0);
  EXPECT_NE(a.at("scene_0000.png"), dir_contents(dir_ / "c").at("scene_0000.png"));
}

TEST_F(CliTest, SynthWithoutOcclusionKeepsContourNonzero) {
  ASSERT_EQ(cli("synth --n 3 --seed 2 --occlusion-level 0 --out-dir " + p("s")).code, 0);
  for (const auto& stem : app::stems_with_suffix(dir_ / "s", ".gt.json")) {
    const json gt = read_json(dir_ / "s" / (stem + ".gt.json"));
    EXPECT_TRUE(gt.at("occlusions").empty());
    const auto L = layout_from_json(gt.at("layout"));
    const auto P = read_probability_png(dir_ / "s" / (stem + ".prob.png"));
    const auto contour = layout_to_contour(L, P.width(), P.height(), 3);
    for (std::size_t i = 0; i < P.size(); ++i)
      if (contour.mask.data()[i]) EXPECT_GT(P.data()[i], 0.0f) << stem << " pixel " << i;
  }
}

TEST_F(CliTest, SynthTruthLayoutsAreValid) {
  ASSERT_EQ(cli("synth --n 20 --seed 3 --occlusion-level 0.4 --width 200 --height 150 --out-dir " + p("s")).code, 0);
  const auto stems = app::stems_with_suffix(dir_ / "s", ".gt.json");
  ASSERT_EQ(stems.size(), 20u);
  for (const auto& stem : stems) {
    const json gt = read_json(dir_ / "s" / (stem + ".gt.json"));
    EXPECT_TRUE(validate_hypothesis(layout_from_json(gt.at("layout")), {200, 150})) << stem;
  }
}

TEST_F(CliTest, SynthUnwritableOutput) {
  std::ofstream(dir_ / "file") << "x";
  EXPECT_EQ(cli("synth --n 1 --out-dir " + p("file/sub")).code, 4);
}

TEST_F(CliTest, RefineMissingCoarseMap) {
  ASSERT_EQ(cli("synth --n 1 --seed 1 --out-dir " + p("s")).code, 0);
  const auto r = cli("refine --image " + p("s/scene_0000.png") + " --coarse " + p("s/missing.png") + " --out-dir " +
                     p("o"));
  EXPECT_EQ(r.code, 2);
  const json e = json::parse(r.err);
  EXPECT_EQ(e.at("error"), "input-not-found");
}

TEST_F(CliTest, RefineRejectsBadFlag) {
  ASSERT_EQ(cli("synth --n 1 --seed 1 --out-dir " + p("s")).code, 0);
  const auto r = cli("refine --bundle " + p("s") + " --grid-step 0 --out-dir " + p("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err).at("error"), "invalid-argument");
}

TEST_F(CliTest, RefineWithoutAnyEvidence) {
  write_rgb_png(dir_ / "blank.png", RgbImage(64, 48, Rgb{128, 128, 128}));
  write_probability_png(dir_ / "blank.prob.png", ProbabilityMap(64, 48, 0.0f));
  const auto r = cli("refine --image " + p("blank.png") + " --coarse " + p("blank.prob.png") + " --out-dir " + p("o"));
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(json::parse(r.err).at("error"), "no-valid-hypothesis");
}

TEST_F(CliTest, RefineIsByteIdenticalOnRerun) {
  ASSERT_EQ(cli("synth --n 2 --seed 4 --occlusion-level 0.4 --out-dir " + p("s")).code, 0);
  ASSERT_EQ(cli("refine --bundle " + p("s") + " --out-dir " + p("o1") + " --debug-dir " + p("d")).code, 0);
  ASSERT_EQ(cli("refine --bundle " + p("s") + " --out-dir " + p("o2")).code, 0);
  EXPECT_TRUE(dir_contents(dir_ / "o1") == dir_contents(dir_ / "o2"));
  EXPECT_TRUE(fs::exists(dir_ / "o1" / "scene_0000.layout.json"));
  EXPECT_TRUE(fs::exists(dir_ / "o1" / "scene_0000.ranked.json"));
  EXPECT_TRUE(fs::exists(dir_ / "o1" / "scene_0000.overlay.png"));
  EXPECT_TRUE(fs::exists(dir_ / "d" / "scene_0001.hypotheses.json"));
  const json layout = read_json(dir_ / "o1" / "scene_0000.layout.json");
  EXPECT_EQ(layout.at("image_size"), json::array({480, 360}));
}

TEST_F(CliTest, RefineSingleImageWithConfigFile) {
  ASSERT_EQ(cli("synth --n 1 --seed 5 --out-dir " + p("s")).code, 0);
  write_json(dir_ / "cfg.json", {{"grid_extent", 10}, {"max_hypotheses", 500}});
  ASSERT_EQ(cli("refine --image " + p("s/scene_0000.png") + " --coarse " + p("s/scene_0000.prob.png") +
                " --heatmap " + p("s/scene_0000.heat") + " --config " + p("cfg.json") + " --grid-step 2 --out-dir " +
                p("o"))
                .code,
            0);
  const json cfg = read_json(dir_ / "o" / "scene_0000.layout.json").at("config");
  EXPECT_EQ(cfg.at("grid_extent"), 10.0);
  EXPECT_EQ(cfg.at("grid_step"), 2.0);
  EXPECT_EQ(cfg.at("max_hypotheses"), 500);
}

// Predictions written straight from the truth layouts.
void copy_truth_as_predictions(const fs::path& gt_dir, const fs::path& pred_dir, bool reverse = false) {
  fs::create_directories(pred_dir);
  auto stems = app::stems_with_suffix(gt_dir, ".gt.json");
  if (reverse) std::reverse(stems.begin(), stems.end());
  for (const auto& stem : stems) {
    const json gt = read_json(gt_dir / (stem + ".gt.json"));
    write_json(pred_dir / (stem + ".layout.json"), {{"layout", gt.at("layout")}});
  }
}

TEST_F(CliTest, EvalPerfectPredictions) {
  ASSERT_EQ(cli("synth --n 3 --seed 6 --width 160 --height 120 --out-dir " + p("s")).code, 0);
  copy_truth_as_predictions(dir_ / "s", dir_ / "pred");
  ASSERT_EQ(cli("eval " + p("pred") + " " + p("s")).code, 0);
  const json summary = read_json(dir_ / "pred" / "summary.json");
  EXPECT_EQ(summary.at("mean_pixel_error"), 0.0);
  EXPECT_NEAR(summary.at("mean_corner_error").get<double>(), 0.0, 1e-12);
  EXPECT_EQ(app::percent(summary.at("mean_pixel_error").get<double>()), "0.00%");
  const std::string csv = read_text(dir_ / "pred" / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "image,pixel_error,corner_error");
}

TEST_F(CliTest, EvalOneImageFullyMislabeled) {
  ASSERT_EQ(cli("synth --n 2 --seed 6 --width 160 --height 120 --out-dir " + p("s")).code, 0);
  copy_truth_as_predictions(dir_ / "s", dir_ / "pred");
  // no layout ever produces the inconsistent label
  write_label_png(dir_ / "s" / "scene_0001.labels.png", SurfaceLabeling(160, 120, kInconsistentLabel));
  ASSERT_EQ(cli("eval " + p("pred") + " " + p("s")).code, 0);
  const json summary = read_json(dir_ / "pred" / "summary.json");
  EXPECT_EQ(app::percent(summary.at("mean_pixel_error").get<double>()), "50.00%");
}

TEST_F(CliTest, EvalOrderInvariant) {
  ASSERT_EQ(cli("synth --n 4 --seed 9 --width 160 --height 120 --out-dir " + p("s")).code, 0);
  copy_truth_as_predictions(dir_ / "s", dir_ / "p1");
  copy_truth_as_predictions(dir_ / "s", dir_ / "p2", true);
  ASSERT_EQ(cli("eval " + p("p1") + " " + p("s")).code, 0);
  ASSERT_EQ(cli("eval " + p("p2") + " " + p("s")).code, 0);
  EXPECT_EQ(read_text(dir_ / "p1" / "summary.json"), read_text(dir_ / "p2" / "summary.json"));
  EXPECT_EQ(read_text(dir_ / "p1" / "results.csv"), read_text(dir_ / "p2" / "results.csv"));
}

TEST_F(CliTest, EvalUnpairedFiles) {
  ASSERT_EQ(cli("synth --n 2 --seed 6 --width 160 --height 120 --out-dir " + p("s")).code, 0);
  copy_truth_as_predictions(dir_ / "s", dir_ / "pred");
  fs::remove(dir_ / "pred" / "scene_0001.layout.json");
  const auto r = cli("eval " + p("pred") + " " + p("s"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.err).at("error"), "unpaired-files");
}

TEST_F(CliTest, RenderOverlay) {
  ASSERT_EQ(cli("synth --n 1 --seed 6 --width 160 --height 120 --out-dir " + p("s")).code, 0);
  copy_truth_as_predictions(dir_ / "s", dir_ / "pred");
  ASSERT_EQ(cli("render --layout " + p("pred/scene_0000.layout.json") + " --image " + p("s/scene_0000.png") +
                " --gt " + p("s/scene_0000.gt.json") + " --out " + p("overlay.png"))
                .code,
            0);
  const auto img = read_rgb_png(dir_ / "overlay.png");
  EXPECT_EQ(img.width(), 160);
  EXPECT_EQ(img.height(), 120);
  const auto red = std::count_if(img.data().begin(), img.data().end(),
                                 [](Rgb c) { return c.r == 230 && c.g == 0 && c.b == 0; });
  EXPECT_GT(red, 100);
}

}  // namespace
}  // namespace cfile
