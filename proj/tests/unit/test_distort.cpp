#include <cmath>
#include <numeric>
#include <set>

#include "peavs/distort.hpp"
#include "peavs/synth.hpp"
#include "test_support.hpp"

namespace peavs::distort {
namespace {

media::ClipBundle clip(double seconds = 10.0, std::uint64_t seed = 1) {
  synth::ClipSpec spec;
  spec.duration_seconds = seconds;
  return synth::make_clip("src", seed, spec);
}

double energy(const media::AudioTrack& a) {
  double e = 0.0;
  for (auto s : a.samples) e += double(s) * s;
  return e;
}

TEST(Catalog, NineKindsTenLevels) {
  EXPECT_EQ(all_kinds().size(), 9u);
  for (Kind k : all_kinds()) {
    EXPECT_EQ(catalog_levels(k).size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(level_index(k, catalog_levels(k)[i]), static_cast<int>(i));
  }
  EXPECT_DOUBLE_EQ(max_level(Kind::AudioSpeedUp), 0.75);
  EXPECT_DOUBLE_EQ(catalog_levels(Kind::AudioShift).front(), -1.0);
  EXPECT_DOUBLE_EQ(catalog_levels(Kind::AudioShift).back(), 2.0);
  EXPECT_ERRC(level_index(Kind::AudioShift, 0.3), LevelOutOfCatalog);
  EXPECT_ERRC(apply_distortion(clip(1.0), {Kind::IntermittentMute, 0.7, 0, 0.4}), LevelOutOfCatalog);
  EXPECT_ERRC(kind_from_id(10), InvalidConfig);
}

TEST(Shift, PositiveLevelInsertsLeadingSilence) {
  const auto in = clip();
  const auto out = apply_distortion(in, {Kind::AudioShift, 0.045, 0, kDefaultGapProbability});
  ASSERT_EQ(out.audio.samples.size(), in.audio.samples.size());
  for (std::size_t i = 0; i < 720; ++i) ASSERT_EQ(out.audio.samples[i], 0);
  for (std::size_t i = 720; i < out.audio.samples.size(); ++i) ASSERT_EQ(out.audio.samples[i], in.audio.samples[i - 720]);
  EXPECT_EQ(out.video, in.video);
}

TEST(Shift, NegativeLevelAdvancesAudio) {
  const auto in = clip();
  const auto out = apply_distortion(in, {Kind::AudioShift, -0.5, 0, kDefaultGapProbability});
  const std::size_t n = in.audio.samples.size();
  for (std::size_t i = 0; i + 8000 < n; ++i) ASSERT_EQ(out.audio.samples[i], in.audio.samples[i + 8000]);
  for (std::size_t i = n - 8000; i < n; ++i) ASSERT_EQ(out.audio.samples[i], 0);
}

TEST(Shift, TooShortClip) { EXPECT_ERRC(apply_distortion(clip(1.0), {Kind::AudioShift, 2.0, 0, 0.4}), ClipTooShort); }

TEST(Mute, OneSecondOnOneSecondOff) {
  const auto in = clip();
  const auto out = apply_distortion(in, {Kind::IntermittentMute, 1.0, 0, 0.4});
  for (std::size_t i = 0; i < out.audio.samples.size(); ++i) {
    const bool muted = (i / 16000) % 2 == 1;
    if (muted) {
      ASSERT_EQ(out.audio.samples[i], 0) << i;
    } else {
      ASSERT_EQ(out.audio.samples[i], in.audio.samples[i]) << i;
    }
  }
}

TEST(Mute, EnergyNonIncreasingOnStationarySignal) {
  auto in = clip();
  for (std::size_t i = 0; i < in.audio.samples.size(); ++i) in.audio.samples[i] = static_cast<std::int16_t>(i % 2 ? 1000 : -1000);
  double prev = energy(in.audio);
  for (double level : catalog_levels(Kind::IntermittentMute)) {
    const double e = energy(apply_distortion(in, {Kind::IntermittentMute, level, 0, 0.4}).audio);
    EXPECT_LE(e, prev) << level;
    prev = e;
  }
}

TEST(Shuffle, SegmentsPermutedTogether) {
  auto in = clip();
  // Tag every frame and sample with its source second so provenance can be read back.
  for (std::size_t j = 0; j < in.video.frames.size(); ++j) in.video.frames[j].data[0] = static_cast<std::uint8_t>(j / 25);
  for (std::size_t i = 0; i < in.audio.samples.size(); ++i) in.audio.samples[i] = static_cast<std::int16_t>(i / 16000);
  const auto out = apply_distortion(in, {Kind::FragmentShuffle, 4.0, 99, 0.4});
  ASSERT_EQ(out.video.frames.size(), 250u);
  ASSERT_EQ(out.audio.samples.size(), 160000u);
  std::vector<int> starts;
  for (int seg = 0; seg < 2; ++seg) {
    const int v_sec = out.video.frames[static_cast<std::size_t>(seg) * 100].data[0];
    const int a_sec = out.audio.samples[static_cast<std::size_t>(seg) * 64000];
    EXPECT_EQ(v_sec, a_sec);
    EXPECT_EQ(v_sec % 4, 0);
    starts.push_back(v_sec);
    for (std::size_t k = 0; k < 100; ++k) {
      EXPECT_EQ(out.video.frames[seg * 100 + k].data[0], v_sec + static_cast<int>(k / 25));
    }
  }
  EXPECT_EQ(std::set<int>(starts.begin(), starts.end()), (std::set<int>{0, 4}));
  EXPECT_EQ(out.video.frames[200].data[0], 8);
  EXPECT_EQ(out.audio.samples[128000], 8);
  EXPECT_ERRC(apply_distortion(clip(3.0), {Kind::FragmentShuffle, 4.0, 1, 0.4}), ClipTooShort);
}

TEST(Shuffle, SeedControlsPermutation) {
  const auto in = clip();
  std::set<std::vector<std::int16_t>> outcomes;
  for (std::uint64_t s = 0; s < 8; ++s) {
    outcomes.insert(apply_distortion(in, {Kind::FragmentShuffle, 1.0, s, 0.4}).audio.samples);
  }
  EXPECT_GT(outcomes.size(), 1u);
}

TEST(SpeedUp, AudioStretchTrimsBothTracks) {
  const auto in = clip();
  const auto out = apply_distortion(in, {Kind::AudioSpeedUp, 0.25, 0, 0.4});
  EXPECT_NEAR(out.video.duration_seconds(), 8.0, in.video.frame_period());
  EXPECT_NEAR(out.audio.duration_seconds(), out.video.duration_seconds(), in.video.frame_period());
  EXPECT_TRUE(media::validate_bundle(out).empty());
}

TEST(SpeedUp, VideoRemapUsesNearestFrames) {
  auto in = clip();
  for (std::size_t j = 0; j < in.video.frames.size(); ++j) in.video.frames[j].data[0] = static_cast<std::uint8_t>(j % 256);
  const auto out = apply_distortion(in, {Kind::VideoSpeedUp, 0.5, 0, 0.4});
  ASSERT_EQ(out.video.frames.size(), 166u);
  for (std::size_t j = 0; j < out.video.frames.size(); ++j) {
    EXPECT_EQ(out.video.frames[j].data[0], static_cast<std::uint8_t>(std::llround(j * 1.5) % 256));
  }
}

TEST(SpeedDown, KeepsDuration) {
  const auto in = clip();
  for (Kind k : {Kind::AudioSpeedDown, Kind::VideoSpeedDown}) {
    const auto out = apply_distortion(in, {k, 0.4, 0, 0.4});
    EXPECT_EQ(out.audio.samples.size(), in.audio.samples.size());
    EXPECT_EQ(out.video.frames.size(), in.video.frames.size());
    EXPECT_NE(out, in);
  }
}

TEST(Wsola, LengthAndPitch) {
  // 440 Hz tone: after stretching, zero-crossing rate per second must be unchanged.
  std::vector<std::int16_t> tone(16000);
  for (std::size_t i = 0; i < tone.size(); ++i) tone[i] = static_cast<std::int16_t>(8000 * std::sin(2 * M_PI * 440 * i / 16000.0));
  for (double rate : {0.6, 1.25, 1.75}) {
    const auto out = wsola_stretch(tone, 16000, rate);
    EXPECT_EQ(out.size(), static_cast<std::size_t>(std::llround(16000 / rate)));
    int crossings = 0;
    for (std::size_t i = 1000; i + 1 < out.size() - 1000; ++i) crossings += (out[i] < 0) != (out[i + 1] < 0);
    const double freq = crossings / 2.0 / ((out.size() - 2001) / 16000.0);
    EXPECT_NEAR(freq, 440.0, 15.0) << rate;
  }
}

TEST(Gaps, ScheduleOnWholeSeconds) {
  const auto g = gap_schedule(10.0, 0.2, 0.4, 42);
  for (const auto& iv : g) {
    EXPECT_DOUBLE_EQ(iv.begin, std::floor(iv.begin));
    EXPECT_NEAR(iv.end - iv.begin, 0.2, 1e-12);
  }
  EXPECT_EQ(g.size(), gap_schedule(10.0, 0.2, 0.4, 42).size());
  const auto merged = gap_schedule(10.0, 2.5, 1.0, 1);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_DOUBLE_EQ(merged[0].end, 10.0);
  EXPECT_TRUE(gap_schedule(10.0, 0.2, 0.0, 1).empty());
}

TEST(Gaps, VideoFramesBlackedDeterministically) {
  const auto in = clip();
  const DistortionSpec spec{Kind::RandomVideoGaps, 0.2, 7, 0.4};
  const auto a = apply_distortion(in, spec);
  EXPECT_EQ(a, apply_distortion(in, spec));
  EXPECT_EQ(a.audio, in.audio);
  const auto gaps = gap_schedule(10.0, 0.2, 0.4, 7);
  std::set<std::size_t> dark;
  for (const auto& g : gaps)
    for (std::size_t j = static_cast<std::size_t>(g.begin * 25); j < static_cast<std::size_t>(g.begin * 25) + 5; ++j) dark.insert(j);
  for (std::size_t j = 0; j < 250; ++j) {
    if (dark.count(j)) {
      EXPECT_EQ(a.video.frames[j], media::Frame::black(32, 32, media::PixelFormat::Gray8)) << j;
    } else {
      EXPECT_EQ(a.video.frames[j], in.video.frames[j]) << j;
    }
  }
}

TEST(Flicker, AudioAndVideoShareSchedule) {
  const auto in = clip();
  const auto out = apply_distortion(in, {Kind::AVFlicker, 0.5, 3, 0.4});
  for (const auto& g : gap_schedule(10.0, 0.5, 0.4, 3)) {
    const auto s0 = static_cast<std::size_t>(g.begin * 16000);
    const auto f0 = static_cast<std::size_t>(g.begin * 25);
    EXPECT_EQ(out.audio.samples[s0 + 100], 0);
    EXPECT_EQ(out.video.frames[f0 + 1], media::Frame::black(32, 32, media::PixelFormat::Gray8));
  }
}

TEST(Kernel, IdentityLimits) {
  const auto in = clip(2.0);
  EXPECT_EQ(apply_kernel(in, {Kind::AudioShift, 0.0, 0, 0.4}), in);
  for (Kind k : {Kind::AudioSpeedUp, Kind::VideoSpeedUp, Kind::AudioSpeedDown, Kind::VideoSpeedDown, Kind::IntermittentMute}) {
    EXPECT_EQ(apply_kernel(in, {k, 0.0, 0, 0.4}), in);
  }
  EXPECT_EQ(apply_kernel(in, {Kind::RandomVideoGaps, 0.5, 1, 0.0}), in);
  EXPECT_EQ(apply_kernel(in, {Kind::AVFlicker, 0.5, 1, 0.0}), in);
}

TEST(Manifest, SizesAndIds) {
  std::vector<std::string> one{"a"};
  EXPECT_EQ(build_benchmark_manifest(one, 1).rows.size(), 91u);
  std::vector<std::string> many;
  for (int i = 0; i < 200; ++i) many.push_back("s" + std::to_string(i));
  const auto m = build_benchmark_manifest(many, 1);
  std::size_t gt = 0;
  std::set<std::string> ids;
  for (const auto& r : m.rows) {
    gt += r.is_ground_truth();
    ids.insert(r.output_id);
  }
  EXPECT_EQ(m.rows.size() - gt, 18000u);
  EXPECT_EQ(m.rows.size(), 18200u);
  EXPECT_EQ(gt, 200u);
  EXPECT_EQ(ids.size(), m.rows.size());
  std::vector<std::string> dup{"a", "a"};
  EXPECT_ERRC(build_benchmark_manifest(dup, 1), DuplicateSourceId);
}

TEST(Manifest, SeedsReproducibleInIsolation) {
  std::vector<std::string> s{"a", "b"};
  const auto m1 = build_benchmark_manifest(s, 5);
  std::vector<std::string> just_b{"b"};
  const auto m2 = build_benchmark_manifest(just_b, 5);
  EXPECT_EQ(manifest_to_csv(m1), manifest_to_csv(build_benchmark_manifest(s, 5)));
  for (const auto& r : m2.rows) {
    const auto it = std::find_if(m1.rows.begin(), m1.rows.end(), [&](const ManifestRow& x) { return x.output_id == r.output_id; });
    ASSERT_NE(it, m1.rows.end());
    if (r.spec) {
      EXPECT_EQ(r.spec->seed, it->spec->seed);
    }
  }
}

TEST(Manifest, CsvRoundTripAndErrors) {
  std::vector<std::string> s{"a"};
  const auto m = build_benchmark_manifest(s, 9);
  const auto back = manifest_from_csv(manifest_to_csv(m));
  EXPECT_EQ(manifest_to_csv(back), manifest_to_csv(m));
  EXPECT_ERRC(manifest_from_csv("id,src\n"), MalformedHeader);
  EXPECT_ERRC(manifest_from_csv("output_id,source_id,kind,level,seed,gap_probability\nx,a,1,0.3,0,0.4\n"), LevelOutOfCatalog);
}

TEST(Manifest, ParallelRunMatchesSerial) {
  test::TempDir dir("runman");
  synth::ClipSpec spec;
  spec.duration_seconds = 5.0;
  media::save_bundle(synth::make_clip("a", 1, spec), dir / "in/a");
  std::vector<std::string> s{"a"};
  const auto m = build_benchmark_manifest(s, 3, {{Kind::FragmentShuffle, Kind::AVFlicker}, {0, 4}});
  run_manifest(m, dir / "in", dir / "serial", 1);
  run_manifest(m, dir / "in", dir / "parallel", 3);
  for (const auto& r : m.rows) {
    EXPECT_EQ(media::load_bundle(dir / "serial" / r.output_id), media::load_bundle(dir / "parallel" / r.output_id));
  }
}

}  // namespace
}  // namespace peavs::distort
