#include <cmath>

#include <Eigen/Eigenvalues>

#include "peavs/error.hpp"
#include "peavs/frechet.hpp"

namespace peavs::frechet {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen_of(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw Error(Errc::NumericalFailure, std::string("eigensolver failed on ") + what);
  return es;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

void regularize(Eigen::MatrixXd& sigma, const FrechetOptions& opt) {
  const auto d = static_cast<double>(sigma.rows());
  const double ridge = opt.ridge_scale * sigma.trace() / d;
  if (opt.force_ridge) {
    sigma.diagonal().array() += ridge;
    return;
  }
  const auto es = eigen_of(sigma, "covariance");
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -opt.negative_tolerance * scale) sigma.diagonal().array() += ridge;
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::FAD: return "fad";
    case Variant::FVD: return "fvd";
    case Variant::FAVD: return "favd";
  }
  return "?";
}

Variant variant_from_name(std::string_view name) {
  if (name == "fad") return Variant::FAD;
  if (name == "fvd") return Variant::FVD;
  if (name == "favd") return Variant::FAVD;
  throw Error(Errc::InvalidConfig, "unknown metric variant '" + std::string(name) + "'");
}

Eigen::MatrixXd variant_rows(const features::EmbeddingPair& clip, Variant variant) {
  switch (variant) {
    case Variant::FAD: return clip.audio.rows.cast<double>();
    case Variant::FVD: return clip.video.rows.cast<double>();
    case Variant::FAVD: {
      if (clip.audio.windows() != clip.video.windows()) {
        throw Error(Errc::DimensionMismatch, "clip " + clip.audio.clip_id + " has " +
                                                 std::to_string(clip.audio.windows()) + " audio vs " +
                                                 std::to_string(clip.video.windows()) + " video windows");
      }
      Eigen::MatrixXd rows(clip.audio.windows(), clip.audio.dim() + clip.video.dim());
      rows << clip.audio.rows.cast<double>(), clip.video.rows.cast<double>();
      return rows;
    }
  }
  throw Error(Errc::InvalidConfig, "unknown variant");
}

GaussianStats fit_rows(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw Error(Errc::InsufficientWindows, std::to_string(rows.rows()) + " pooled windows, need 2");
  GaussianStats g;
  g.n_windows = rows.rows();
  g.mu = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = rows.rowwise() - g.mu.transpose();
  g.sigma = (centred.transpose() * centred) / static_cast<double>(rows.rows());
  return g;
}

GaussianStats fit_gaussian(std::span<const features::EmbeddingPair> set, Variant variant) {
  Eigen::Index total = 0;
  Eigen::Index dim = -1;
  std::vector<Eigen::MatrixXd> parts;
  parts.reserve(set.size());
  for (const auto& clip : set) {
    parts.push_back(variant_rows(clip, variant));
    if (dim >= 0 && parts.back().cols() != dim) {
      throw Error(Errc::DimensionMismatch, "clip " + clip.audio.clip_id + " has dimension " +
                                               std::to_string(parts.back().cols()) + ", expected " + std::to_string(dim));
    }
    dim = parts.back().cols();
    total += parts.back().rows();
  }
  if (dim < 0) throw Error(Errc::InsufficientWindows, "empty set");
  Eigen::MatrixXd pooled(total, dim);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    pooled.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return fit_rows(pooled);
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b, const FrechetOptions& options) {
  if (a.mu.size() != b.mu.size() || a.sigma.rows() != b.sigma.rows() || a.sigma.rows() != a.mu.size() ||
      b.sigma.cols() != b.mu.size()) {
    throw Error(Errc::DimensionMismatch, "Gaussians of dimension " + std::to_string(a.mu.size()) + " and " +
                                             std::to_string(b.mu.size()));
  }
  Eigen::MatrixXd sa = symmetrized(a.sigma);
  Eigen::MatrixXd sb = symmetrized(b.sigma);
  regularize(sa, options);
  regularize(sb, options);

  const auto ea = eigen_of(sa, "first covariance");
  const Eigen::VectorXd root = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * root.asDiagonal() * ea.eigenvectors().transpose();
  const Eigen::MatrixXd inner = symmetrized(sqrt_a * sb * sqrt_a);
  const auto ei = eigen_of(inner, "covariance product");
  const double tr_sqrt = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (a.mu - b.mu).squaredNorm();
  const double d = mean_term + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, d);
}

double favd_score(std::span<const features::EmbeddingPair> eval_set,
                  std::span<const features::EmbeddingPair> reference_set, Variant variant) {
  if (eval_set.empty() || reference_set.empty()) throw Error(Errc::EmptyInput, "evaluation and reference sets must be non-empty");
  return frechet_distance(fit_gaussian(eval_set, variant), fit_gaussian(reference_set, variant));
}

}  // namespace peavs::frechet
