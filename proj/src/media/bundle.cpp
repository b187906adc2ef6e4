#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/media.hpp"

namespace peavs::media {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDurationEps = 1e-9;

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.pgm", index);
  return buf;
}

Rational parse_fps(const json& j) {
  if (j.is_number_integer()) return {j.get<std::int64_t>(), 1};
  if (j.is_number()) {
    // Decimal rates such as 29.97 are stored with a 1000 denominator.
    return {std::llround(j.get<double>() * 1000.0), 1000};
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto colon = s.find(':');
    if (colon == std::string::npos) return {std::stoll(s), 1};
    return {std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
  }
  throw Error(Errc::MalformedHeader, "meta.json fps must be a number or \"num:den\"", 0);
}

std::string pixel_format_name(PixelFormat f) { return f == PixelFormat::Gray8 ? "gray8" : "yuv420"; }

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

ClipBundle load_bundle(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  const auto wav_path = dir / "audio.wav";
  if (!fs::exists(meta_path)) throw Error(Errc::MissingFile, meta_path.string());
  if (!fs::exists(wav_path)) throw Error(Errc::MissingFile, wav_path.string());

  const auto meta_bytes = read_file(meta_path);
  json meta;
  try {
    meta = json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedHeader, "meta.json: " + std::string(e.what()), e.byte);
  }

  ClipBundle bundle;
  try {
    bundle.clip_id = meta.at("clip_id").get<std::string>();
    if (meta.contains("labels")) bundle.meta.labels = meta["labels"].get<std::vector<std::string>>();
    if (meta.contains("notes")) bundle.meta.notes = meta["notes"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedHeader, "meta.json: " + std::string(e.what()), 0);
  }

  bundle.audio = parse_wav(read_file(wav_path));
  if (meta.contains("sample_rate") && meta["sample_rate"].get<std::uint32_t>() != bundle.audio.sample_rate) {
    throw Error(Errc::MalformedHeader, "meta.json sample_rate disagrees with audio.wav", 0);
  }

  const auto y4m_path = dir / "video.y4m";
  if (fs::exists(y4m_path)) {
    bundle.video = parse_y4m(read_file(y4m_path));
  } else {
    const bool declared_pgm = meta.value("video_format", "") == "pgm";
    if (!declared_pgm && !fs::exists(dir / frame_name(0))) {
      throw Error(Errc::MissingFile, (dir / "video.y4m").string() + " (or frame_%06d.pgm sequence)");
    }
    if (!meta.contains("fps")) throw Error(Errc::MalformedHeader, "meta.json lacks fps for PGM sequence", 0);
    bundle.video.fps = parse_fps(meta["fps"]);
    bundle.video.pixel_format = PixelFormat::Gray8;
    for (std::size_t i = 0; fs::exists(dir / frame_name(i)); ++i) {
      bundle.video.frames.push_back(parse_pgm(read_file(dir / frame_name(i))));
    }
  }
  if (bundle.video.fps.num <= 0 || bundle.video.fps.den <= 0) {
    throw Error(Errc::MalformedHeader, "non-positive fps", 0);
  }

  // Trim the longer track when the two disagree by more than a frame period.
  const double a = bundle.audio.duration_seconds();
  const double v = bundle.video.duration_seconds();
  const double tol = bundle.video.frame_period() + kDurationEps;
  if (a - v > tol) {
    bundle.audio.samples.resize(static_cast<std::size_t>(std::llround(v * bundle.audio.sample_rate)));
    bundle.meta.notes.push_back("reconciled: audio trimmed to video duration");
  } else if (v - a > tol) {
    const auto keep = static_cast<std::size_t>(std::llround(a * bundle.video.fps.value()));
    bundle.video.frames.resize(keep);
    bundle.meta.notes.push_back("reconciled: video trimmed to audio duration");
  }
  return bundle;
}

void save_bundle(const ClipBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  // Stale frames from a previous save would otherwise be picked up on load.
  for (std::size_t i = 0; fs::exists(dir / frame_name(i)); ++i) fs::remove(dir / frame_name(i));
  fs::remove(dir / "video.y4m");

  const bool as_pgm = bundle.video.pixel_format == PixelFormat::Gray8;
  json meta = {
      {"clip_id", bundle.clip_id},
      {"fps", std::to_string(bundle.video.fps.num) + ":" + std::to_string(bundle.video.fps.den)},
      {"sample_rate", bundle.audio.sample_rate},
      {"labels", bundle.meta.labels},
      {"notes", bundle.meta.notes},
      {"video_format", as_pgm ? "pgm" : "y4m"},
      {"pixel_format", pixel_format_name(bundle.video.pixel_format)},
  };
  const std::string text = meta.dump(2) + "\n";
  write_file(dir / "meta.json", {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  write_file(dir / "audio.wav", encode_wav(bundle.audio));
  if (as_pgm) {
    for (std::size_t i = 0; i < bundle.video.frames.size(); ++i) {
      write_file(dir / frame_name(i), encode_pgm(bundle.video.frames[i]));
    }
  } else {
    write_file(dir / "video.y4m", encode_y4m(bundle.video));
  }
}

std::vector<Violation> validate_bundle(const ClipBundle& bundle) {
  std::vector<Violation> out;
  auto fmt = [](double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  };
  if (bundle.clip_id.empty()) out.push_back({"clip_id non-empty", "clip_id is empty"});
  if (bundle.audio.sample_rate == 0) out.push_back({"sample_rate > 0", "sample_rate is 0"});
  if (bundle.video.fps.num <= 0 || bundle.video.fps.den <= 0) {
    out.push_back({"fps > 0", "fps is " + std::to_string(bundle.video.fps.num) + ":" +
                                  std::to_string(bundle.video.fps.den)});
    return out;
  }
  const auto& frames = bundle.video.frames;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.width != frames.front().width || f.height != frames.front().height ||
        f.format != bundle.video.pixel_format) {
      out.push_back({"homogeneous frames", "heterogeneous frame geometry at index " + std::to_string(i)});
    } else if (f.data.size() != frame_bytes(f.width, f.height, f.format)) {
      out.push_back({"frame payload size", "frame " + std::to_string(i) + " holds " +
                                               std::to_string(f.data.size()) + " bytes"});
    }
  }
  if (bundle.audio.sample_rate > 0) {
    const double gap = std::abs(bundle.audio.duration_seconds() - bundle.video.duration_seconds());
    const double tol = bundle.video.frame_period();
    if (gap > tol + kDurationEps) {
      out.push_back({"duration match", "duration mismatch " + fmt(gap) + " s > " + fmt(tol) + " s"});
    }
  }
  return out;
}

}  // namespace peavs::media
