#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "peavs/distort.hpp"
#include "peavs/error.hpp"
#include "peavs/rng.hpp"

namespace peavs::distort {

using media::ClipBundle;
using media::Frame;

namespace {

constexpr std::array<Kind, kKindCount> kKinds = {
    Kind::AudioShift,       Kind::AudioSpeedUp,    Kind::VideoSpeedUp,
    Kind::AudioSpeedDown,   Kind::VideoSpeedDown,  Kind::IntermittentMute,
    Kind::RandomVideoGaps,  Kind::FragmentShuffle, Kind::AVFlicker,
};

constexpr std::array<double, kLevelCount> kShiftLevels = {-1, -.5, -.125, .045, .1, .125, .25, .5, 1, 2};
constexpr std::array<double, kLevelCount> kSpeedLevels = {.025, .05, .10, .15, .20, .25, .30, .4, .5, .75};
constexpr std::array<double, kLevelCount> kGapLevels = {.01, .025, .05, .1, .2, .3, .5, 1, 2.5, 4};
constexpr std::array<double, kLevelCount> kFragmentLevels = {.3, .4, .5, 1, 1.5, 2, 2.5, 3, 3.5, 4};

constexpr double kLevelTolerance = 1e-9;

std::size_t seconds_to_samples(double seconds, std::uint32_t sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * static_cast<double>(sample_rate)));
}

// First frame index whose timestamp is >= t.
std::size_t first_frame_at(double t, const media::Rational& fps) {
  const double x = t * static_cast<double>(fps.num) / static_cast<double>(fps.den);
  return static_cast<std::size_t>(std::max(0.0, std::ceil(x - 1e-9)));
}

Frame black_like(const Frame& f) { return Frame::black(f.width, f.height, f.format); }

void shift_audio(ClipBundle& clip, double seconds) {
  auto& s = clip.audio.samples;
  const auto shift = static_cast<std::ptrdiff_t>(std::llround(seconds * clip.audio.sample_rate));
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  if (std::abs(shift) >= n && shift != 0) {
    throw Error(Errc::ClipTooShort, "shift of " + std::to_string(seconds) + " s covers the whole clip");
  }
  std::vector<std::int16_t> out(s.size(), 0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t src = i - shift;
    if (src >= 0 && src < n) out[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(src)];
  }
  s = std::move(out);
}

// Nearest-source-frame remap for a playback rate; `count` output frames.
void remap_video(ClipBundle& clip, double rate, std::size_t count) {
  const auto& in = clip.video.frames;
  std::vector<Frame> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto src = std::min<std::size_t>(in.size() - 1, static_cast<std::size_t>(std::llround(static_cast<double>(j) * rate)));
    out.push_back(in[src]);
  }
  clip.video.frames = std::move(out);
}

void trim_audio_to_frames(ClipBundle& clip) {
  const double dur = clip.video.duration_seconds();
  const std::size_t keep = std::min(clip.audio.samples.size(), seconds_to_samples(dur, clip.audio.sample_rate));
  clip.audio.samples.resize(keep);
}

void speed_up_audio(ClipBundle& clip, double level) {
  if (level == 0.0) return;
  clip.audio.samples = wsola_stretch(clip.audio.samples, clip.audio.sample_rate, 1.0 + level);
  const auto frames = std::min(clip.video.frames.size(),
                               static_cast<std::size_t>(std::floor(clip.audio.duration_seconds() * clip.video.fps.value() + 1e-9)));
  clip.video.frames.resize(frames);
  trim_audio_to_frames(clip);
}

void speed_up_video(ClipBundle& clip, double level) {
  if (level == 0.0 || clip.video.frames.empty()) return;
  const double rate = 1.0 + level;
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(clip.video.frames.size()) / rate));
  remap_video(clip, rate, count);
  trim_audio_to_frames(clip);
}

void slow_down_audio(ClipBundle& clip, double level) {
  if (level == 0.0) return;
  const std::size_t n = clip.audio.samples.size();
  auto stretched = wsola_stretch(clip.audio.samples, clip.audio.sample_rate, 1.0 - level);
  stretched.resize(n);
  clip.audio.samples = std::move(stretched);
}

void slow_down_video(ClipBundle& clip, double level) {
  if (level == 0.0 || clip.video.frames.empty()) return;
  remap_video(clip, 1.0 - level, clip.video.frames.size());
}

void intermittent_mute(ClipBundle& clip, double level) {
  const std::size_t audible = clip.audio.sample_rate;
  const std::size_t muted = seconds_to_samples(level, clip.audio.sample_rate);
  if (muted == 0) return;
  const std::size_t cycle = audible + muted;
  auto& s = clip.audio.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i % cycle >= audible) s[i] = 0;
  }
}

void black_out_video(ClipBundle& clip, const std::vector<Interval>& gaps) {
  auto& frames = clip.video.frames;
  for (const Interval& g : gaps) {
    const std::size_t lo = first_frame_at(g.begin, clip.video.fps);
    const std::size_t hi = std::min(frames.size(), first_frame_at(g.end, clip.video.fps));
    for (std::size_t j = lo; j < hi; ++j) frames[j] = black_like(frames[j]);
  }
}

void silence_audio(ClipBundle& clip, const std::vector<Interval>& gaps) {
  auto& s = clip.audio.samples;
  for (const Interval& g : gaps) {
    const std::size_t lo = std::min(s.size(), seconds_to_samples(g.begin, clip.audio.sample_rate));
    const std::size_t hi = std::min(s.size(), seconds_to_samples(g.end, clip.audio.sample_rate));
    std::fill(s.begin() + static_cast<std::ptrdiff_t>(lo), s.begin() + static_cast<std::ptrdiff_t>(hi), std::int16_t{0});
  }
}

void fragment_shuffle(ClipBundle& clip, double segment_seconds, std::uint64_t seed) {
  const double duration = clip.video.frames.empty() ? clip.audio.duration_seconds() : clip.video.duration_seconds();
  const auto full = static_cast<std::size_t>(std::floor(duration / segment_seconds + 1e-9));
  if (full == 0) {
    throw Error(Errc::ClipTooShort, "fragment of " + std::to_string(segment_seconds) + " s exceeds clip duration");
  }

  std::vector<std::size_t> order(full);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = full - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  auto rebuild = [&](auto& items, auto boundary) {
    using Vec = std::remove_reference_t<decltype(items)>;
    Vec out;
    out.reserve(items.size());
    for (std::size_t seg : order) {
      const std::size_t lo = std::min(items.size(), boundary(seg));
      const std::size_t hi = std::min(items.size(), boundary(seg + 1));
      out.insert(out.end(), items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    // Trailing partial segment keeps its position.
    const std::size_t tail = std::min(items.size(), boundary(full));
    out.insert(out.end(), items.begin() + static_cast<std::ptrdiff_t>(tail), items.end());
    items = std::move(out);
  };
  const auto sr = clip.audio.sample_rate;
  rebuild(clip.audio.samples, [&](std::size_t i) { return seconds_to_samples(static_cast<double>(i) * segment_seconds, sr); });
  const auto fps = clip.video.fps;
  rebuild(clip.video.frames, [&](std::size_t i) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(i) * segment_seconds * fps.value()));
  });
}

}  // namespace

std::span<const Kind> all_kinds() { return kKinds; }

std::span<const double> catalog_levels(Kind kind) {
  switch (kind) {
    case Kind::AudioShift: return kShiftLevels;
    case Kind::AudioSpeedUp:
    case Kind::VideoSpeedUp:
    case Kind::AudioSpeedDown:
    case Kind::VideoSpeedDown: return kSpeedLevels;
    case Kind::IntermittentMute:
    case Kind::RandomVideoGaps:
    case Kind::AVFlicker: return kGapLevels;
    case Kind::FragmentShuffle: return kFragmentLevels;
  }
  throw Error(Errc::InvalidConfig, "unknown distortion kind");
}

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::AudioShift: return "AudioShift";
    case Kind::AudioSpeedUp: return "AudioSpeedUp";
    case Kind::VideoSpeedUp: return "VideoSpeedUp";
    case Kind::AudioSpeedDown: return "AudioSpeedDown";
    case Kind::VideoSpeedDown: return "VideoSpeedDown";
    case Kind::IntermittentMute: return "IntermittentMute";
    case Kind::RandomVideoGaps: return "RandomVideoGaps";
    case Kind::FragmentShuffle: return "FragmentShuffle";
    case Kind::AVFlicker: return "AVFlicker";
  }
  return "Unknown";
}

Kind kind_from_id(int id) {
  if (id < 1 || id > kKindCount) throw Error(Errc::InvalidConfig, "distortion kind id " + std::to_string(id));
  return static_cast<Kind>(id);
}

int level_index(Kind kind, double level) {
  const auto levels = catalog_levels(kind);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - level) <= kLevelTolerance) return static_cast<int>(i);
  }
  throw Error(Errc::LevelOutOfCatalog,
              "level " + std::to_string(level) + " is not in the catalog for " + std::string(kind_name(kind)));
}

double max_level(Kind kind) { return catalog_levels(kind).back(); }

bool is_stochastic(Kind kind) {
  return kind == Kind::RandomVideoGaps || kind == Kind::FragmentShuffle || kind == Kind::AVFlicker;
}

void validate(const DistortionSpec& spec) {
  level_index(spec.kind, spec.level);
  if (!(spec.gap_probability > 0.0 && spec.gap_probability <= 1.0)) {
    throw Error(Errc::InvalidConfig, "gap probability must lie in (0, 1]");
  }
}

std::vector<Interval> gap_schedule(double duration, double gap_seconds, double probability, std::uint64_t seed) {
  std::vector<Interval> out;
  if (gap_seconds <= 0.0 || probability <= 0.0) return out;
  const auto candidates = static_cast<std::uint64_t>(std::ceil(duration - 1e-9));
  for (std::uint64_t k = 0; k < candidates; ++k) {
    if (counter_uniform(seed, k) >= probability) continue;
    Interval g{static_cast<double>(k), std::min(duration, static_cast<double>(k) + gap_seconds)};
    if (!out.empty() && g.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, g.end);
    } else {
      out.push_back(g);
    }
  }
  return out;
}

ClipBundle apply_kernel(const ClipBundle& clip, const DistortionSpec& spec) {
  ClipBundle out = clip;
  const double level = spec.level;
  switch (spec.kind) {
    case Kind::AudioShift: shift_audio(out, level); break;
    case Kind::AudioSpeedUp: speed_up_audio(out, level); break;
    case Kind::VideoSpeedUp: speed_up_video(out, level); break;
    case Kind::AudioSpeedDown: slow_down_audio(out, level); break;
    case Kind::VideoSpeedDown: slow_down_video(out, level); break;
    case Kind::IntermittentMute: intermittent_mute(out, level); break;
    case Kind::RandomVideoGaps:
      black_out_video(out, gap_schedule(out.video.duration_seconds(), level, spec.gap_probability, spec.seed));
      break;
    case Kind::FragmentShuffle:
      if (level > 0.0) fragment_shuffle(out, level, spec.seed);
      break;
    case Kind::AVFlicker: {
      const double duration = std::max(out.video.duration_seconds(), out.audio.duration_seconds());
      const auto gaps = gap_schedule(duration, level, spec.gap_probability, spec.seed);
      black_out_video(out, gaps);
      silence_audio(out, gaps);
      break;
    }
  }
  return out;
}

ClipBundle apply_distortion(const ClipBundle& clip, const DistortionSpec& spec) {
  validate(spec);
  return apply_kernel(clip, spec);
}

}  // namespace peavs::distort
