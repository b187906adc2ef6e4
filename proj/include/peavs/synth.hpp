#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "peavs/distort.hpp"
#include "peavs/media.hpp"

// Deterministic synthetic AV clips: sounding objects that light up a fixed screen
// region while they are audible, so audio energy and visual activity co-vary.
namespace peavs::synth {

struct ClipSpec {
  double duration_seconds = 10.0;
  std::uint32_t sample_rate = 16000;
  media::Rational fps{25, 1};
  std::uint32_t width = 32;
  std::uint32_t height = 32;
  media::PixelFormat format = media::PixelFormat::Gray8;
  double events_per_second = 0.9;
};

media::ClipBundle make_clip(const std::string& clip_id, std::uint64_t seed, const ClipSpec& spec = {});

// Stand-in opinion score in [1, 5] for a distortion; higher is better synchrony.
// Monotone non-increasing in severity within every kind. Not a perceptual model.
double reference_opinion(const std::optional<distort::DistortionSpec>& spec);

}  // namespace peavs::synth
