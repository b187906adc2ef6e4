#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "peavs/media.hpp"

namespace peavs::features {

enum class Modality { Audio, Video };

std::string_view modality_name(Modality m);
Modality modality_from_name(std::string_view name);

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultWindowSeconds = 0.96;

struct EmbeddingSequence {
  std::string clip_id;
  Modality modality = Modality::Audio;
  double window_seconds = kDefaultWindowSeconds;
  std::string extractor;
  FeatureMatrix rows;  // N windows x D features

  Eigen::Index windows() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  bool operator==(const EmbeddingSequence& o) const {
    return clip_id == o.clip_id && modality == o.modality && window_seconds == o.window_seconds &&
           extractor == o.extractor && rows.rows() == o.rows.rows() && rows.cols() == o.rows.cols() &&
           rows == o.rows;
  }
};

struct EmbeddingPair {
  EmbeddingSequence audio;
  EmbeddingSequence video;
};

struct ExtractorConfig {
  std::string id = "synthetic";
  int audio_dim = 128;   // mel bands
  int video_dim = 1024;  // random projection width
  int fft_size = 1024;
  int video_grid = 8;    // luma statistics on a grid x grid layout
  std::uint64_t projection_seed = 0x13D0;

  std::string tag() const;
};

inline constexpr float kLogEnergyFloor = -23.025850929940457f;  // log(1e-10)

// Non-overlapping windows; the trailing partial window is dropped.
EmbeddingPair extract_features(const media::ClipBundle& clip, const ExtractorConfig& config = {},
                               double window_seconds = kDefaultWindowSeconds);

// Window count both modalities share for this clip.
Eigen::Index window_count(const media::ClipBundle& clip, double window_seconds);

// Row emitted by the synthetic audio extractor for digital silence.
Eigen::VectorXf audio_silence_vector(const ExtractorConfig& config);

// Fixed projection used by the synthetic video extractor (video_dim x 2*grid^2).
Eigen::MatrixXf video_projection(const ExtractorConfig& config);

// File format: one JSON header line, then N*D float32 little-endian values, row-major.
void write_embeddings(const EmbeddingSequence& seq, const std::filesystem::path& path);
EmbeddingSequence read_embeddings(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_embeddings(const EmbeddingSequence& seq);
EmbeddingSequence decode_embeddings(std::span<const std::uint8_t> bytes);

}  // namespace peavs::features
