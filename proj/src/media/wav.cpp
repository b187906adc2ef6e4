#include <cstring>

#include "byte_io.hpp"
#include "peavs/media.hpp"

namespace peavs::media {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

double AudioTrack::duration_seconds() const {
  return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
}

AudioTrack parse_wav(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  if (in.tag4("RIFF magic") != "RIFF") throw Error(Errc::MalformedHeader, "missing RIFF magic", 0);
  in.u32le("RIFF size");
  if (in.tag4("WAVE tag") != "WAVE") throw Error(Errc::MalformedHeader, "missing WAVE tag", 8);

  bool have_fmt = false;
  AudioTrack track;
  while (true) {
    if (in.at_end()) {
      throw Error(Errc::MalformedHeader, have_fmt ? "no data chunk" : "no fmt chunk", in.offset());
    }
    const std::size_t chunk_start = in.offset();
    const std::string id = in.tag4("chunk id");
    const std::uint32_t size = in.u32le("chunk size");

    if (id == "fmt ") {
      if (size < 16) throw Error(Errc::MalformedHeader, "fmt chunk shorter than 16 bytes", chunk_start);
      auto body = in.take(size, "fmt chunk");
      detail::ByteReader fmt(body);
      const std::uint16_t format = fmt.u16le("format");
      const std::uint16_t channels = fmt.u16le("channels");
      const std::uint32_t rate = fmt.u32le("sample rate");
      fmt.u32le("byte rate");
      fmt.u16le("block align");
      const std::uint16_t bits = fmt.u16le("bits per sample");
      std::uint16_t effective = format;
      if (format == kFormatExtensible) {
        if (size < 40) throw Error(Errc::MalformedHeader, "short extensible fmt chunk", chunk_start);
        fmt.u16le("cb size");
        fmt.u16le("valid bits");
        fmt.u32le("channel mask");
        effective = fmt.u16le("sub format");
      }
      if (effective != kFormatPcm) {
        throw Error(Errc::UnsupportedEncoding, "audio format " + std::to_string(effective) + " is not PCM");
      }
      if (bits != 16) {
        throw Error(Errc::UnsupportedEncoding, std::to_string(bits) + "-bit samples, expected 16");
      }
      if (channels != 1) {
        throw Error(Errc::UnsupportedEncoding, std::to_string(channels) + " channels, expected mono");
      }
      if (rate == 0) throw Error(Errc::MalformedHeader, "zero sample rate", chunk_start + 12);
      track.sample_rate = rate;
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(Errc::MalformedHeader, "data chunk before fmt chunk", chunk_start);
      if (size % 2 != 0) throw Error(Errc::MalformedHeader, "odd PCM16 data size", chunk_start + 4);
      auto body = in.take(size, "data chunk");
      track.samples.resize(size / 2);
      for (std::size_t i = 0; i < track.samples.size(); ++i) {
        const auto lo = static_cast<std::uint16_t>(body[2 * i]);
        const auto hi = static_cast<std::uint16_t>(body[2 * i + 1]);
        track.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
      }
      return track;
    } else {
      in.skip(size, "chunk body");
    }
    if (size % 2 == 1 && !in.at_end()) in.skip(1, "chunk pad");
  }
}

std::vector<std::uint8_t> encode_wav(const AudioTrack& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  detail::put_str(out, "RIFF");
  detail::put_u32le(out, 36 + data_bytes);
  detail::put_str(out, "WAVE");
  detail::put_str(out, "fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, kFormatPcm);
  detail::put_u16le(out, 1);
  detail::put_u32le(out, audio.sample_rate);
  detail::put_u32le(out, audio.sample_rate * 2);
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  detail::put_str(out, "data");
  detail::put_u32le(out, data_bytes);
  for (std::int16_t s : audio.samples) detail::put_u16le(out, static_cast<std::uint16_t>(s));
  return out;
}

}  // namespace peavs::media
