#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "peavs/distort.hpp"
#include "peavs/error.hpp"

namespace peavs::distort {

namespace {

std::int16_t to_pcm16(double v) {
  return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
}

}  // namespace

std::vector<std::int16_t> wsola_stretch(std::span<const std::int16_t> samples, std::uint32_t sample_rate,
                                        double rate, const WsolaParams& params) {
  if (!(rate > 0.0)) throw Error(Errc::InvalidConfig, "stretch rate must be positive");
  if (rate == 1.0) return {samples.begin(), samples.end()};

  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  const auto out_len = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(n) / rate));
  std::ptrdiff_t window = std::max<std::ptrdiff_t>(4, std::llround(params.window_seconds * sample_rate));
  window += window % 2;
  const std::ptrdiff_t hop = window / 2;
  const std::ptrdiff_t seek = std::llround(params.seek_seconds * sample_rate);

  auto at = [&](std::ptrdiff_t i) -> double { return (i >= 0 && i < n) ? samples[static_cast<std::size_t>(i)] : 0.0; };

  // Periodic Hann: overlapping halves sum to one at 50% overlap.
  std::vector<double> hann(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < window; ++i) {
    hann[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(window));
  }

  std::vector<double> acc(static_cast<std::size_t>(out_len + window), 0.0);
  const std::ptrdiff_t last_start = std::max<std::ptrdiff_t>(0, n - window);
  std::ptrdiff_t prev_src = 0;
  for (std::ptrdiff_t k = 0; k * hop < out_len; ++k) {
    const auto nominal = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(k * hop) * rate));
    std::ptrdiff_t src = 0;
    if (k > 0) {
      // Pick the candidate whose leading half best matches the natural continuation.
      const std::ptrdiff_t target = prev_src + hop;
      const std::ptrdiff_t lo = std::clamp(nominal - seek, std::ptrdiff_t{0}, last_start);
      const std::ptrdiff_t hi = std::clamp(nominal + seek, std::ptrdiff_t{0}, last_start);
      double best = -std::numeric_limits<double>::infinity();
      src = std::clamp(nominal, lo, hi);
      for (std::ptrdiff_t cand = lo; cand <= hi; ++cand) {
        double score = 0.0;
        for (std::ptrdiff_t i = 0; i < hop; ++i) score += at(cand + i) * at(target + i);
        if (score > best) {
          best = score;
          src = cand;
        }
      }
    }
    const std::ptrdiff_t out_pos = k * hop;
    for (std::ptrdiff_t i = 0; i < window; ++i) {
      const double w = (k == 0 && i < hop) ? 1.0 : hann[static_cast<std::size_t>(i)];
      acc[static_cast<std::size_t>(out_pos + i)] += w * at(src + i);
    }
    prev_src = src;
  }

  std::vector<std::int16_t> out(static_cast<std::size_t>(out_len));
  for (std::ptrdiff_t i = 0; i < out_len; ++i) out[static_cast<std::size_t>(i)] = to_pcm16(acc[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace peavs::distort
