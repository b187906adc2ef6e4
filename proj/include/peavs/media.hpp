#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace peavs::media {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

enum class PixelFormat { Gray8, Yuv420 };

struct AudioTrack {
  std::uint32_t sample_rate = 16000;
  std::vector<std::int16_t> samples;

  double duration_seconds() const;
  bool operator==(const AudioTrack&) const = default;
};

// Planar pixel storage: luma plane first, then U and V (Yuv420 only).
struct Frame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PixelFormat format = PixelFormat::Gray8;
  std::vector<std::uint8_t> data;

  static Frame black(std::uint32_t width, std::uint32_t height, PixelFormat format);

  std::span<const std::uint8_t> luma() const {
    return {data.data(), static_cast<std::size_t>(width) * height};
  }
  bool operator==(const Frame&) const = default;
};

std::size_t frame_bytes(std::uint32_t width, std::uint32_t height, PixelFormat format);

struct VideoTrack {
  Rational fps{25, 1};
  PixelFormat pixel_format = PixelFormat::Gray8;
  std::vector<Frame> frames;

  double duration_seconds() const;
  double frame_period() const { return 1.0 / fps.value(); }
  bool operator==(const VideoTrack&) const = default;
};

struct ClipMeta {
  std::vector<std::string> labels;
  std::vector<std::string> notes;
  bool operator==(const ClipMeta&) const = default;
};

struct ClipBundle {
  std::string clip_id;
  AudioTrack audio;
  VideoTrack video;
  ClipMeta meta;

  bool operator==(const ClipBundle&) const = default;
};

struct Violation {
  std::string invariant;
  std::string detail;
};

// WAV: RIFF/WAVE, PCM16 mono only.
AudioTrack parse_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioTrack& audio);

// Y4M: progressive, C420* variants map to Yuv420, Cmono to Gray8.
VideoTrack parse_y4m(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_y4m(const VideoTrack& video);

// PGM: binary P5, maxval 255.
Frame parse_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const Frame& frame);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ClipBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const ClipBundle& bundle, const std::filesystem::path& dir);
std::vector<Violation> validate_bundle(const ClipBundle& bundle);

}  // namespace peavs::media
