#include "peavs/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "peavs/error.hpp"
#include "peavs/rng.hpp"

namespace peavs::synth {

namespace {

struct SoundObject {
  double frequency;
  double x;  // normalized screen position
  double y;
};

constexpr std::array<SoundObject, 6> kObjects = {{
    {220.0, 0.2, 0.25},
    {440.0, 0.5, 0.25},
    {700.0, 0.8, 0.25},
    {1100.0, 0.2, 0.75},
    {1800.0, 0.5, 0.75},
    {3000.0, 0.8, 0.75},
}};

struct Event {
  std::size_t object;
  double onset;
  double length;
  double amplitude;

  double envelope(double t) const {
    if (t < onset || t >= onset + length) return 0.0;
    return std::sin(std::numbers::pi * (t - onset) / length);
  }
};

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed) {}
  double uniform() { return counter_uniform(seed_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace

media::ClipBundle make_clip(const std::string& clip_id, std::uint64_t seed, const ClipSpec& spec) {
  if (!(spec.duration_seconds > 0.0) || spec.sample_rate == 0 || spec.fps.num <= 0 || spec.fps.den <= 0) {
    throw Error(Errc::InvalidConfig, "synthetic clip needs positive duration, sample rate and fps");
  }
  Stream rng(hash_combine(seed, 0x5eed));
  std::vector<Event> events;
  for (double t = rng.uniform(0.0, 0.5); t < spec.duration_seconds;) {
    Event e{static_cast<std::size_t>(rng.uniform() * kObjects.size()) % kObjects.size(), t, rng.uniform(0.25, 0.9),
            rng.uniform(0.35, 0.85)};
    events.push_back(e);
    t += -std::log(1.0 - rng.uniform()) / spec.events_per_second + 0.1;
  }

  media::ClipBundle clip;
  clip.clip_id = clip_id;
  clip.meta.labels = {"synthetic"};
  clip.meta.notes = {"synthetic clip seed " + std::to_string(seed)};

  const auto n_samples = static_cast<std::size_t>(std::llround(spec.duration_seconds * spec.sample_rate));
  clip.audio.sample_rate = spec.sample_rate;
  clip.audio.samples.resize(n_samples);
  const std::uint64_t noise_seed = hash_combine(seed, 0xa0d10);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    double v = 0.004 * (2.0 * counter_uniform(noise_seed, i) - 1.0);
    for (const Event& e : events) {
      const double env = e.envelope(t);
      if (env == 0.0) continue;
      const double f = kObjects[e.object].frequency;
      v += 0.45 * e.amplitude * env *
           (std::sin(2.0 * std::numbers::pi * f * t) + 0.3 * std::sin(4.0 * std::numbers::pi * f * t));
    }
    clip.audio.samples[i] = static_cast<std::int16_t>(std::clamp(std::lround(v * 32767.0), -32768L, 32767L));
  }

  clip.video.fps = spec.fps;
  clip.video.pixel_format = spec.format;
  const auto n_frames = static_cast<std::size_t>(std::llround(spec.duration_seconds * spec.fps.value()));
  const std::uint64_t texture_seed = hash_combine(seed, 0x7e47);
  const std::uint64_t grain_seed = hash_combine(seed, 0x9a1);
  const double sigma = 0.09 * std::min(spec.width, spec.height);
  for (std::size_t j = 0; j < n_frames; ++j) {
    const double t = static_cast<double>(j) / spec.fps.value();
    media::Frame frame = media::Frame::black(spec.width, spec.height, spec.format);
    for (std::uint32_t yy = 0; yy < spec.height; ++yy) {
      for (std::uint32_t xx = 0; xx < spec.width; ++xx) {
        const std::size_t px = std::size_t{yy} * spec.width + xx;
        double v = 30.0 + 20.0 * counter_uniform(texture_seed, px) + 3.0 * counter_uniform(grain_seed, j * 1000003ull + px);
        for (const Event& e : events) {
          const double env = e.envelope(t);
          if (env == 0.0) continue;
          const auto& obj = kObjects[e.object];
          const double cx = obj.x * spec.width + 1.5 * std::sin(2.0 * std::numbers::pi * 3.0 * t);
          const double cy = obj.y * spec.height;
          const double d2 = (xx - cx) * (xx - cx) + (yy - cy) * (yy - cy);
          v += 200.0 * e.amplitude * env * std::exp(-d2 / (2.0 * sigma * sigma));
        }
        frame.data[px] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    clip.video.frames.push_back(std::move(frame));
  }
  return clip;
}

double reference_opinion(const std::optional<distort::DistortionSpec>& spec) {
  using distort::Kind;
  if (!spec) return 5.0;
  if (spec->kind == Kind::AudioShift) {
    const double mag = std::min(1.0, std::abs(spec->level) / 2.0);
    return std::clamp(5.0 - 4.0 * std::sqrt(mag), 1.0, 5.0);
  }
  const int idx = distort::level_index(spec->kind, spec->level);
  // Short shuffled fragments are the most disruptive.
  const double severity = spec->kind == Kind::FragmentShuffle ? (10 - idx) / 10.0 : (idx + 1) / 10.0;
  double span = 3.0;
  double offset = 0.2;
  switch (spec->kind) {
    case Kind::IntermittentMute: span = 2.5; offset = 1.5; break;
    case Kind::AudioSpeedUp:
    case Kind::AudioSpeedDown: span = 3.5; break;
    case Kind::FragmentShuffle: span = 2.0; offset = 0.8; break;
    default: break;
  }
  return std::clamp(5.0 - offset - span * severity, 1.0, 5.0);
}

}  // namespace peavs::synth
