#include <charconv>
#include <sstream>

#include "byte_io.hpp"
#include "peavs/media.hpp"

namespace peavs::media {

namespace {

constexpr std::size_t kMaxHeaderLine = 4096;

// Reads up to and excluding '\n'; the cursor ends after the newline.
std::string read_line(detail::ByteReader& in, const char* what) {
  const std::size_t start = in.offset();
  std::string line;
  while (true) {
    if (in.at_end()) throw Error(Errc::MalformedHeader, std::string("unterminated ") + what, start);
    const char c = static_cast<char>(in.take(1, what)[0]);
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > kMaxHeaderLine) throw Error(Errc::MalformedHeader, std::string("overlong ") + what, start);
  }
}

std::int64_t parse_int(std::string_view s, std::size_t offset, const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedHeader, std::string("bad ") + what + " '" + std::string(s) + "'", offset);
  }
  return v;
}

}  // namespace

std::size_t frame_bytes(std::uint32_t width, std::uint32_t height, PixelFormat format) {
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  if (format == PixelFormat::Gray8) return luma;
  const std::size_t cw = (width + 1) / 2;
  const std::size_t ch = (height + 1) / 2;
  return luma + 2 * cw * ch;
}

Frame Frame::black(std::uint32_t width, std::uint32_t height, PixelFormat format) {
  Frame f{width, height, format, std::vector<std::uint8_t>(frame_bytes(width, height, format), 0)};
  if (format == PixelFormat::Yuv420) {
    std::fill(f.data.begin() + static_cast<std::ptrdiff_t>(std::size_t{width} * height), f.data.end(),
              std::uint8_t{128});
  }
  return f;
}

double VideoTrack::duration_seconds() const {
  return static_cast<double>(frames.size()) * static_cast<double>(fps.den) / static_cast<double>(fps.num);
}

VideoTrack parse_y4m(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const std::string header = read_line(in, "stream header");
  std::istringstream tokens(header);
  std::string tok;
  tokens >> tok;
  if (tok != "YUV4MPEG2") throw Error(Errc::MalformedHeader, "missing YUV4MPEG2 magic", 0);

  std::int64_t width = -1;
  std::int64_t height = -1;
  VideoTrack video;
  bool have_fps = false;
  video.pixel_format = PixelFormat::Yuv420;
  while (tokens >> tok) {
    const auto pos = tokens.tellg();
    const std::size_t end = pos == std::streampos(-1) ? header.size() : static_cast<std::size_t>(pos);
    const std::size_t at = end - tok.size();
    const std::string_view value = std::string_view(tok).substr(1);
    switch (tok[0]) {
      case 'W': width = parse_int(value, at, "width"); break;
      case 'H': height = parse_int(value, at, "height"); break;
      case 'F': {
        const auto colon = value.find(':');
        if (colon == std::string_view::npos) throw Error(Errc::MalformedHeader, "frame rate without ':'", at);
        video.fps.num = parse_int(value.substr(0, colon), at, "fps numerator");
        video.fps.den = parse_int(value.substr(colon + 1), at, "fps denominator");
        if (video.fps.num <= 0 || video.fps.den <= 0) throw Error(Errc::MalformedHeader, "non-positive frame rate", at);
        have_fps = true;
        break;
      }
      case 'I':
        if (value != "p" && value != "?") throw Error(Errc::UnsupportedEncoding, "interlaced Y4M (I" + std::string(value) + ")");
        break;
      case 'C':
        if (value == "mono") {
          video.pixel_format = PixelFormat::Gray8;
        } else if (value == "420" || value == "420jpeg" || value == "420paldv" || value == "420mpeg2") {
          video.pixel_format = PixelFormat::Yuv420;
        } else {
          throw Error(Errc::UnsupportedEncoding, "Y4M chroma C" + std::string(value));
        }
        break;
      case 'A':
      case 'X':
        break;
      default:
        throw Error(Errc::MalformedHeader, "unknown header tag '" + tok + "'", at);
    }
  }
  if (width <= 0 || height <= 0 || width > 65535 || height > 65535) {
    throw Error(Errc::MalformedHeader, "missing or invalid W/H", 0);
  }
  if (!have_fps) throw Error(Errc::MalformedHeader, "missing F tag", 0);

  const auto w = static_cast<std::uint32_t>(width);
  const auto h = static_cast<std::uint32_t>(height);
  const std::size_t fbytes = frame_bytes(w, h, video.pixel_format);
  while (!in.at_end()) {
    const std::size_t frame_at = in.offset();
    const std::string marker = read_line(in, "frame header");
    if (marker.rfind("FRAME", 0) != 0) throw Error(Errc::MalformedHeader, "expected FRAME marker", frame_at);
    auto plane = in.take(fbytes, "frame payload");
    video.frames.push_back(Frame{w, h, video.pixel_format, {plane.begin(), plane.end()}});
  }
  return video;
}

std::vector<std::uint8_t> encode_y4m(const VideoTrack& video) {
  std::uint32_t w = video.frames.empty() ? 0 : video.frames.front().width;
  std::uint32_t h = video.frames.empty() ? 0 : video.frames.front().height;
  std::ostringstream header;
  header << "YUV4MPEG2 W" << w << " H" << h << " F" << video.fps.num << ':' << video.fps.den << " C"
         << (video.pixel_format == PixelFormat::Gray8 ? "mono" : "420") << '\n';
  std::vector<std::uint8_t> out;
  detail::put_str(out, header.str());
  for (const Frame& f : video.frames) {
    detail::put_str(out, "FRAME\n");
    out.insert(out.end(), f.data.begin(), f.data.end());
  }
  return out;
}

}  // namespace peavs::media
