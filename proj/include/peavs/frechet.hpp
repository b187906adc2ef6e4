#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "peavs/distort.hpp"
#include "peavs/features.hpp"

namespace peavs::frechet {

enum class Variant { FAD, FVD, FAVD };

std::string_view variant_name(Variant v);
Variant variant_from_name(std::string_view name);

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  Eigen::Index n_windows = 0;
};

// Rows a variant contributes for one clip: audio, video, or per-window audio ⊕ video.
Eigen::MatrixXd variant_rows(const features::EmbeddingPair& clip, Variant variant);

// Mean and population (1/N) covariance over rows pooled across the set.
GaussianStats fit_gaussian(std::span<const features::EmbeddingPair> set, Variant variant);
GaussianStats fit_rows(const Eigen::MatrixXd& rows);

struct FrechetOptions {
  // Relative ridge: eps = ridge_scale * tr(sigma) / D.
  double ridge_scale = 1e-6;
  // Add the ridge unconditionally instead of only for indefinite covariances.
  bool force_ridge = false;
  double negative_tolerance = 1e-10;
};

// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), clamped at zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b, const FrechetOptions& options = {});

double favd_score(std::span<const features::EmbeddingPair> eval_set,
                  std::span<const features::EmbeddingPair> reference_set, Variant variant);

struct SweepRow {
  distort::Kind kind;
  double level;
  double fad;
  double fvd;
  double favd;
};

// Distorts every source at every selected (kind, level), extracts features and scores the
// set against the undistorted sources.
std::vector<SweepRow> distortion_sweep(std::span<const media::ClipBundle> sources,
                                       const features::ExtractorConfig& extractor, std::uint64_t seed,
                                       const distort::GridSelection& grid = {},
                                       double window_seconds = features::kDefaultWindowSeconds);

std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace peavs::frechet
