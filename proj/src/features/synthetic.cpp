#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "peavs/error.hpp"
#include "peavs/features.hpp"
#include "peavs/rng.hpp"

namespace peavs::features {

namespace {

constexpr double kEnergyFloor = 1e-10;
constexpr double kMelLow = 125.0;
constexpr double kMelHigh = 7500.0;

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

// Triangular mel filters, bands x (fft_size/2 + 1).
Eigen::MatrixXd mel_filterbank(int bands, int fft_size, std::uint32_t sample_rate) {
  const int bins = fft_size / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double hi = std::min(kMelHigh, nyquist);
  const double lo = std::min(kMelLow, hi / 2.0);
  const double mlo = hz_to_mel(lo);
  const double mhi = hz_to_mel(hi);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(bands, bins);
  for (int b = 0; b < bands; ++b) {
    const double left = edges[static_cast<std::size_t>(b)];
    const double centre = edges[static_cast<std::size_t>(b) + 1];
    const double right = edges[static_cast<std::size_t>(b) + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > left && f <= centre) fb(b, k) = (f - left) / (centre - left);
      else if (f > centre && f < right) fb(b, k) = (right - f) / (right - centre);
    }
  }
  return fb;
}

std::size_t window_start(Eigen::Index i, double window_seconds, double rate) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(i) * window_seconds * rate + 1e-9));
}

FeatureMatrix audio_rows(const media::AudioTrack& audio, Eigen::Index windows, double window_seconds,
                         const ExtractorConfig& cfg) {
  const Eigen::MatrixXd fb = mel_filterbank(cfg.audio_dim, cfg.fft_size, audio.sample_rate);
  const int bins = cfg.fft_size / 2 + 1;
  std::vector<double> hann(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t i = 0; i < hann.size(); ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.fft_size));
  }

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  std::vector<std::complex<double>> spectrum;
  FeatureMatrix out(windows, cfg.audio_dim);
  for (Eigen::Index w = 0; w < windows; ++w) {
    const std::size_t lo = window_start(w, window_seconds, audio.sample_rate);
    const std::size_t hi = window_start(w + 1, window_seconds, audio.sample_rate);
    const std::size_t len = hi - lo;
    const std::size_t hop = static_cast<std::size_t>(cfg.fft_size);
    const std::size_t frames = std::max<std::size_t>(1, len / hop);
    Eigen::VectorXd power = Eigen::VectorXd::Zero(bins);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = 0; i < frame.size(); ++i) {
        const std::size_t idx = lo + f * hop + i;
        const double s = (idx < hi && idx < audio.samples.size()) ? audio.samples[idx] / 32768.0 : 0.0;
        frame[i] = s * hann[i];
      }
      fft.fwd(spectrum, frame);
      for (int k = 0; k < bins; ++k) power(k) += std::norm(spectrum[static_cast<std::size_t>(k)]) / cfg.fft_size;
    }
    power /= static_cast<double>(frames);
    const Eigen::VectorXd energy = fb * power;
    for (int b = 0; b < cfg.audio_dim; ++b) {
      out(w, b) = static_cast<float>(std::log(std::max(energy(b), kEnergyFloor)));
    }
  }
  return out;
}

// Block means of a luma plane (or of a per-pixel absolute difference) on a grid.
void block_means(std::span<const double> plane, std::uint32_t width, std::uint32_t height, int grid,
                 Eigen::Ref<Eigen::VectorXd> out) {
  for (int r = 0; r < grid; ++r) {
    const std::uint32_t y0 = static_cast<std::uint32_t>(std::uint64_t{height} * r / grid);
    const std::uint32_t y1 = std::max(y0 + 1, static_cast<std::uint32_t>(std::uint64_t{height} * (r + 1) / grid));
    for (int c = 0; c < grid; ++c) {
      const std::uint32_t x0 = static_cast<std::uint32_t>(std::uint64_t{width} * c / grid);
      const std::uint32_t x1 = std::max(x0 + 1, static_cast<std::uint32_t>(std::uint64_t{width} * (c + 1) / grid));
      double sum = 0.0;
      std::size_t count = 0;
      for (std::uint32_t y = y0; y < std::min(y1, height); ++y) {
        for (std::uint32_t x = x0; x < std::min(x1, width); ++x) {
          sum += plane[std::size_t{y} * width + x];
          ++count;
        }
      }
      out(r * grid + c) = count ? sum / static_cast<double>(count) : 0.0;
    }
  }
}

FeatureMatrix video_rows(const media::VideoTrack& video, Eigen::Index windows, double window_seconds,
                         const ExtractorConfig& cfg) {
  const Eigen::MatrixXf proj = video_projection(cfg);
  const int cells = cfg.video_grid * cfg.video_grid;
  const double fps = video.fps.value();
  FeatureMatrix out(windows, cfg.video_dim);
  for (Eigen::Index w = 0; w < windows; ++w) {
    const std::size_t lo = window_start(w, window_seconds, fps);
    const std::size_t hi = std::min(video.frames.size(), window_start(w + 1, window_seconds, fps));
    Eigen::VectorXd stat = Eigen::VectorXd::Zero(2 * cells);
    if (hi > lo) {
      const auto& first = video.frames[lo];
      const std::size_t px = std::size_t{first.width} * first.height;
      std::vector<double> mean(px, 0.0);
      std::vector<double> motion(px, 0.0);
      for (std::size_t j = lo; j < hi; ++j) {
        const auto luma = video.frames[j].luma();
        for (std::size_t p = 0; p < px; ++p) mean[p] += luma[p];
        if (j > lo) {
          const auto prev = video.frames[j - 1].luma();
          for (std::size_t p = 0; p < px; ++p) motion[p] += std::abs(double(luma[p]) - double(prev[p]));
        }
      }
      for (double& v : mean) v /= static_cast<double>(hi - lo);
      if (hi - lo > 1) {
        for (double& v : motion) v /= static_cast<double>(hi - lo - 1);
      }
      block_means(mean, first.width, first.height, cfg.video_grid, stat.head(cells));
      block_means(motion, first.width, first.height, cfg.video_grid, stat.tail(cells));
    }
    out.row(w) = (proj * stat.cast<float>()).transpose();
  }
  return out;
}

}  // namespace

std::string_view modality_name(Modality m) { return m == Modality::Audio ? "audio" : "video"; }

Modality modality_from_name(std::string_view name) {
  if (name == "audio") return Modality::Audio;
  if (name == "video") return Modality::Video;
  throw Error(Errc::MalformedHeader, "unknown modality '" + std::string(name) + "'", 0);
}

std::string ExtractorConfig::tag() const {
  return id + "-v1:a" + std::to_string(audio_dim) + ":v" + std::to_string(video_dim);
}

Eigen::Index window_count(const media::ClipBundle& clip, double window_seconds) {
  const double duration = std::min(clip.audio.duration_seconds(), clip.video.duration_seconds());
  return static_cast<Eigen::Index>(std::floor(duration / window_seconds + 1e-9));
}

Eigen::VectorXf audio_silence_vector(const ExtractorConfig& config) {
  return Eigen::VectorXf::Constant(config.audio_dim, static_cast<float>(std::log(kEnergyFloor)));
}

Eigen::MatrixXf video_projection(const ExtractorConfig& config) {
  const int in = 2 * config.video_grid * config.video_grid;
  Eigen::MatrixXf p(config.video_dim, in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  std::uint64_t counter = 0;
  for (int r = 0; r < config.video_dim; ++r) {
    for (int c = 0; c < in; ++c) {
      // Box-Muller on the counter stream keeps the projection platform independent.
      const double u1 = 1.0 - counter_uniform(config.projection_seed, counter++);
      const double u2 = counter_uniform(config.projection_seed, counter++);
      p(r, c) = static_cast<float>(scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
    }
  }
  return p;
}

EmbeddingPair extract_features(const media::ClipBundle& clip, const ExtractorConfig& config, double window_seconds) {
  if (config.id != "synthetic") throw Error(Errc::UnknownExtractor, config.id);
  if (!(window_seconds > 0.0)) throw Error(Errc::InvalidConfig, "window length must be positive");
  if (config.audio_dim < 1 || config.video_dim < 1 || config.video_grid < 1 || config.fft_size < 16 ||
      (config.fft_size & (config.fft_size - 1)) != 0) {
    throw Error(Errc::InvalidConfig, "extractor dimensions must be positive and fft_size a power of two");
  }
  const Eigen::Index n = window_count(clip, window_seconds);
  if (n < 1) {
    throw Error(Errc::ClipTooShort, "clip " + clip.clip_id + " is shorter than one " +
                                        std::to_string(window_seconds) + " s window");
  }
  EmbeddingPair out;
  out.audio = {clip.clip_id, Modality::Audio, window_seconds, config.tag(), audio_rows(clip.audio, n, window_seconds, config)};
  out.video = {clip.clip_id, Modality::Video, window_seconds, config.tag(), video_rows(clip.video, n, window_seconds, config)};
  return out;
}

}  // namespace peavs::features
