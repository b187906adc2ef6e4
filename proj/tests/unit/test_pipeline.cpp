#include <sstream>

#include "peavs/pipeline.hpp"
#include "peavs/textio.hpp"
#include "test_support.hpp"

namespace peavs::pipeline {
namespace {

TEST(RunConfig, ParsesSectionsQuotesAndComments) {
  const auto cfg = RunConfig::parse(
      "# top\n[run]\nseed = 7\nout = \"a # b\"  # trailing\nstages = synth, distort\n\n[train1]\nlr=0.5\n");
  EXPECT_EQ(cfg.get_int("run", "seed", 0), 7);
  EXPECT_EQ(cfg.get("run", "out", ""), "a # b");
  EXPECT_EQ(cfg.get_list("run", "stages"), (std::vector<std::string>{"synth", "distort"}));
  EXPECT_DOUBLE_EQ(cfg.get_double("train1", "lr", 0), 0.5);
  EXPECT_EQ(cfg.get("x", "y", "fb"), "fb");
  EXPECT_ERRC(cfg.require("run", "missing"), InvalidConfig);
}

TEST(RunConfig, RejectsMalformedLines) {
  EXPECT_ERRC(RunConfig::parse("[run\n"), InvalidConfig);
  EXPECT_ERRC(RunConfig::parse("[run]\nnovalue\n"), InvalidConfig);
  EXPECT_ERRC(RunConfig::parse("[run]\na=1\na=2\n"), InvalidConfig);
  EXPECT_ERRC(RunConfig::parse("[run]\nseed = x\n").get_int("run", "seed", 0), InvalidConfig);
}

TEST(RunConfig, CanonicalHashIgnoresFormatting) {
  const auto a = RunConfig::parse("[run]\nseed=1\nout=x\n");
  const auto b = RunConfig::parse("# c\n[run]\n  out = x\nseed   = 1\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), RunConfig::parse("[run]\nseed=2\nout=x\n").hash());
}

TEST(Pipeline, ValidateFailsBeforeWork) {
  test::TempDir dir("pipe_validate");
  const std::string out = (dir / "out").string();
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nout=" + out + "\nstages=synth\n")), InvalidConfig);
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nseed=1\nout=" + out + "\nstages=bogus\n")), InvalidConfig);
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nseed=1\nout=" + out + "\nstages=distort,synth\n")), InvalidConfig);
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nseed=1\nout=" + out + "\nstages=distort\n")), MissingFile);
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nseed=1\nout=" + out + "\nstages=distort\n[paths]\nsources=" +
                                        (dir / "nope").string() + "\n")),
              MissingFile);
  EXPECT_ERRC(validate(RunConfig::parse("[run]\nseed=1\npreset=huge\nout=" + out + "\nstages=synth\n")), InvalidConfig);
  EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(Pipeline, PresetOverrides) {
  const auto p = resolve_preset(RunConfig::parse("[run]\nseed=1\n[extract]\naudio_dim=16\n[train1]\nepochs=3\n"));
  EXPECT_EQ(p.name, "desk");
  EXPECT_EQ(p.model.audio_in_dim, 16);
  EXPECT_EQ(p.stage1.epochs, 3);
  EXPECT_EQ(preset("paper").extractor.audio_dim, 128);
}

TEST(Pipeline, StageOneTargetsFollowTheSyncWindow) {
  using distort::Kind;
  EXPECT_EQ(stage1_target(std::nullopt), 1.0);
  EXPECT_EQ(stage1_target(distort::DistortionSpec{Kind::AudioShift, 2.0}), 0.0);
  EXPECT_EQ(stage1_target(distort::DistortionSpec{Kind::AudioShift, -0.5}), 0.0);
  EXPECT_FALSE(stage1_target(distort::DistortionSpec{Kind::AudioShift, 0.125}).has_value());
  EXPECT_FALSE(stage1_target(distort::DistortionSpec{Kind::AudioShift, 0.045}).has_value());
  EXPECT_FALSE(stage1_target(distort::DistortionSpec{Kind::IntermittentMute, 0.5}).has_value());
}

std::string small_run(const std::filesystem::path& out) {
  return "[run]\nseed=11\nout=" + out.string() +
         "\nstages=synth,distort,extract,favd,annotate,train1,train2,score,analyze\n"
         "[synth]\nclips=6\n[distort]\nkinds=1,6\nlevels=1,5,10\n"
         "[extract]\naudio_dim=16\nvideo_dim=32\n[model]\nembed_dim=8\n"
         "[annotate]\npairs=60\nannotators=6\n[train1]\nepochs=2\n[train2]\nepochs=2\n";
}

TEST(Pipeline, EndToEndSmallRunIsDeterministic) {
  test::TempDir dir("pipe_run");
  std::ostringstream log;
  run_pipeline(RunConfig::parse(small_run(dir / "a")), log);
  for (const char* f : {"synth/manifest.json", "distort/manifest.csv", "extract/index.csv", "favd/favd.csv",
                        "annotate/human.csv", "annotate/splits.csv", "train1/stage1.ckpt", "train2/stage2.ckpt",
                        "score/scores.csv", "analyze/report.csv", "analyze/alpha.txt", "analyze/absdiff.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
  }
  EXPECT_EQ(distort::read_manifest(dir / "a" / "distort" / "manifest.csv").rows.size(), 6u * 7u);
  EXPECT_NE(log.str().find("stage analyze"), std::string::npos);

  std::ostringstream log2;
  run_pipeline(RunConfig::parse(small_run(dir / "b")), log2);
  for (const char* f : {"favd/favd.csv", "annotate/human.csv", "score/scores.csv"}) {
    EXPECT_EQ(textio::read_text(dir / "a" / f), textio::read_text(dir / "b" / f)) << f;
  }
}

}  // namespace
}  // namespace peavs::pipeline
