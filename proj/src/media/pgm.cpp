#include <cctype>
#include <string>

#include "byte_io.hpp"
#include "peavs/media.hpp"

namespace peavs::media {

namespace {

// Whitespace and '#' comments may separate header fields.
std::uint32_t read_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* what) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  std::uint64_t v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    if (v > 0xffffffffu) throw Error(Errc::MalformedHeader, std::string("oversized ") + what, start);
    ++pos;
  }
  if (pos == start) throw Error(Errc::MalformedHeader, std::string("expected ") + what, start);
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Frame parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(Errc::MalformedHeader, "missing P5 magic", 0);
  }
  std::size_t pos = 2;
  const std::uint32_t w = read_header_int(bytes, pos, "width");
  const std::uint32_t h = read_header_int(bytes, pos, "height");
  const std::size_t maxval_at = pos;
  const std::uint32_t maxval = read_header_int(bytes, pos, "maxval");
  if (w == 0 || h == 0) throw Error(Errc::MalformedHeader, "zero PGM dimension", 2);
  if (maxval != 255) throw Error(Errc::UnsupportedEncoding, "PGM maxval " + std::to_string(maxval) + ", expected 255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(Errc::MalformedHeader, "missing separator after maxval", maxval_at);
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < n) throw Error(Errc::MalformedHeader, "truncated PGM raster", pos);
  Frame f{w, h, PixelFormat::Gray8, {}};
  f.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return f;
}

std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
  std::vector<std::uint8_t> out;
  detail::put_str(out, "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n");
  auto luma = frame.luma();
  out.insert(out.end(), luma.begin(), luma.end());
  return out;
}

}  // namespace peavs::media
