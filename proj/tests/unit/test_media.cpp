#include <cstring>
#include <fstream>

#include "peavs/media.hpp"
#include "peavs/synth.hpp"
#include "test_support.hpp"

namespace peavs::media {
namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_str(std::vector<std::uint8_t>& b, const std::string& s) { b.insert(b.end(), s.begin(), s.end()); }

// Hand-built canonical 44-byte-header WAV.
std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint16_t bits, std::uint32_t rate,
                                    const std::vector<std::int16_t>& samples) {
  std::vector<std::uint8_t> b;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
  put_str(b, "RIFF");
  put_u32(b, 36 + data_size);
  put_str(b, "WAVE");
  put_str(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(b, bits);
  put_str(b, "data");
  put_u32(b, data_size);
  for (auto s : samples) put_u16(b, static_cast<std::uint16_t>(s));
  return b;
}

TEST(Wav, ParsesCanonicalHeader) {
  const auto track = parse_wav(wav_bytes(1, 1, 16, 16000, {0, 1, -1, 32767, -32768}));
  EXPECT_EQ(track.sample_rate, 16000u);
  EXPECT_EQ(track.samples, (std::vector<std::int16_t>{0, 1, -1, 32767, -32768}));
}

TEST(Wav, EncodeMatchesReferenceBytes) {
  AudioTrack t{8000, {5, -5, 100}};
  EXPECT_EQ(encode_wav(t), wav_bytes(1, 1, 16, 8000, {5, -5, 100}));
}

TEST(Wav, RejectsUnsupportedEncodings) {
  EXPECT_ERRC(parse_wav(wav_bytes(1, 1, 24, 16000, {})), UnsupportedEncoding);
  EXPECT_ERRC(parse_wav(wav_bytes(1, 2, 16, 16000, {1, 2})), UnsupportedEncoding);
  EXPECT_ERRC(parse_wav(wav_bytes(3, 1, 16, 16000, {})), UnsupportedEncoding);
}

TEST(Wav, MalformedReportsOffset) {
  auto b = wav_bytes(1, 1, 16, 16000, {1});
  b[8] = 'X';
  try {
    parse_wav(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedHeader);
    ASSERT_TRUE(e.byte_offset().has_value());
    EXPECT_EQ(*e.byte_offset(), 8u);
  }
}

TEST(Wav, ZeroSamplesRoundTrip) {
  AudioTrack t{16000, {}};
  const auto back = parse_wav(encode_wav(t));
  EXPECT_EQ(back, t);
  EXPECT_EQ(back.duration_seconds(), 0.0);
}

TEST(Wav, EveryTruncationFailsCleanly) {
  const auto full = wav_bytes(1, 1, 16, 16000, {1, 2, 3, 4});
  for (std::size_t n = 0; n < full.size(); ++n) {
    std::vector<std::uint8_t> cut(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
    try {
      parse_wav(cut);
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::MalformedHeader) << n;
    }
  }
}

TEST(Y4m, ParsesReferenceStream) {
  std::vector<std::uint8_t> b;
  put_str(b, "YUV4MPEG2 W64 H64 F25:1 C420\n");
  const std::size_t plane = 64 * 64 + 2 * 32 * 32;
  for (int f = 0; f < 250; ++f) {
    put_str(b, "FRAME\n");
    for (std::size_t i = 0; i < plane; ++i) b.push_back(static_cast<std::uint8_t>((i + f) % 251));
  }
  const VideoTrack v = parse_y4m(b);
  EXPECT_EQ(v.fps, (Rational{25, 1}));
  EXPECT_EQ(v.pixel_format, PixelFormat::Yuv420);
  ASSERT_EQ(v.frames.size(), 250u);
  EXPECT_EQ(v.frames[7].data[3], static_cast<std::uint8_t>(10));
  EXPECT_DOUBLE_EQ(v.duration_seconds(), 10.0);
  EXPECT_EQ(encode_y4m(v), b);
}

TEST(Y4m, ChromaVariantsAndErrors) {
  std::vector<std::uint8_t> b;
  put_str(b, "YUV4MPEG2 W2 H2 F30000:1001 Ip C420jpeg\nFRAME\n");
  b.insert(b.end(), 6, 9);
  EXPECT_EQ(parse_y4m(b).frames.size(), 1u);

  std::vector<std::uint8_t> c;
  put_str(c, "YUV4MPEG2 W2 H2 F25:1 C444\n");
  EXPECT_ERRC(parse_y4m(c), UnsupportedEncoding);

  std::vector<std::uint8_t> d;
  put_str(d, "YUV4MPEG3 W2 H2 F25:1\n");
  EXPECT_ERRC(parse_y4m(d), MalformedHeader);

  std::vector<std::uint8_t> e;
  put_str(e, "YUV4MPEG2 W2 H2 F25:1 Cmono\nFRAME\n");
  e.push_back(1);
  EXPECT_ERRC(parse_y4m(e), MalformedHeader);
}

TEST(Pgm, TwoByTwoMatchesHandWritten) {
  Frame f{2, 2, PixelFormat::Gray8, {0, 64, 128, 255}};
  std::vector<std::uint8_t> expected;
  put_str(expected, "P5\n2 2\n255\n");
  expected.insert(expected.end(), {0, 64, 128, 255});
  EXPECT_EQ(encode_pgm(f), expected);
  EXPECT_EQ(parse_pgm(expected), f);
}

TEST(Pgm, CommentsAndErrors) {
  std::vector<std::uint8_t> b;
  put_str(b, "P5 # comment\n1 1\n255\n");
  b.push_back(7);
  EXPECT_EQ(parse_pgm(b).data, std::vector<std::uint8_t>{7});
  std::vector<std::uint8_t> wide;
  put_str(wide, "P5\n1 1\n65535\n");
  wide.insert(wide.end(), {0, 0});
  EXPECT_ERRC(parse_pgm(wide), UnsupportedEncoding);
  std::vector<std::uint8_t> ascii;
  put_str(ascii, "P2\n1 1\n255\n7\n");
  EXPECT_ERRC(parse_pgm(ascii), MalformedHeader);
}

TEST(Bundle, TenSecondClipCounts) {
  synth::ClipSpec spec;
  const auto clip = synth::make_clip("c", 1, spec);
  EXPECT_EQ(clip.audio.samples.size(), 160000u);
  EXPECT_EQ(clip.video.frames.size(), 250u);
  EXPECT_TRUE(validate_bundle(clip).empty());
}

TEST(Bundle, RoundTripGrayAndYuv) {
  test::TempDir dir("bundle");
  synth::ClipSpec spec;
  spec.duration_seconds = 2.0;
  for (auto fmt : {PixelFormat::Gray8, PixelFormat::Yuv420}) {
    spec.format = fmt;
    const auto clip = synth::make_clip("rt", 3, spec);
    save_bundle(clip, dir.path() / "b");
    EXPECT_EQ(load_bundle(dir.path() / "b"), clip);
  }
}

TEST(Bundle, MissingFilesAndBadMeta) {
  test::TempDir dir("bundle_err");
  EXPECT_ERRC(load_bundle(dir.path() / "nope"), MissingFile);
  synth::ClipSpec spec;
  spec.duration_seconds = 1.0;
  save_bundle(synth::make_clip("x", 1, spec), dir.path() / "b");

  {
    std::ofstream(dir.path() / "b" / "meta.json") << "{\"clip_id\": ";
  }
  EXPECT_ERRC(load_bundle(dir.path() / "b"), MalformedHeader);
}

TEST(Bundle, ValidateReportsViolations) {
  synth::ClipSpec spec;
  spec.duration_seconds = 10.0;
  auto clip = synth::make_clip("v", 2, spec);
  clip.video.frames.resize(225);
  auto v = validate_bundle(clip);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].detail.find("duration mismatch 1 s > 0.04 s"), std::string::npos) << v[0].detail;

  clip = synth::make_clip("v", 2, spec);
  clip.video.frames[5] = Frame::black(16, 16, PixelFormat::Gray8);
  v = validate_bundle(clip);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].detail, "heterogeneous frame geometry at index 5");
}

TEST(Bundle, LoadReconcilesDurations) {
  test::TempDir dir("bundle_rec");
  synth::ClipSpec spec;
  spec.duration_seconds = 2.0;
  auto clip = synth::make_clip("r", 1, spec);
  clip.audio.samples.resize(clip.audio.samples.size() + 8000);
  save_bundle(clip, dir.path() / "b");
  const auto back = load_bundle(dir.path() / "b");
  EXPECT_TRUE(validate_bundle(back).empty());
  EXPECT_EQ(back.audio.samples.size(), 32000u);
}

TEST(Synth, DeterministicAndSeedSensitive) {
  synth::ClipSpec spec;
  spec.duration_seconds = 2.0;
  EXPECT_EQ(synth::make_clip("a", 5, spec), synth::make_clip("a", 5, spec));
  EXPECT_NE(synth::make_clip("a", 5, spec).audio, synth::make_clip("a", 6, spec).audio);
}

}  // namespace
}  // namespace peavs::media
