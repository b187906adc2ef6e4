#include <random>

#include "../oracles/oracles.hpp"
#include "peavs/frechet.hpp"
#include "test_support.hpp"

namespace peavs::frechet {
namespace {

GaussianStats stats(Eigen::VectorXd mu, Eigen::MatrixXd sigma) { return {std::move(mu), std::move(sigma), 100}; }

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  return a * a.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

features::EmbeddingPair pair_from(const Eigen::MatrixXf& audio, const Eigen::MatrixXf& video) {
  features::EmbeddingPair p;
  p.audio.rows = audio;
  p.video.rows = video;
  p.video.modality = features::Modality::Video;
  return p;
}

TEST(Fit, FourPointSquare) {
  Eigen::MatrixXd rows(4, 2);
  rows << 0, 0, 2, 0, 0, 2, 2, 2;
  const auto g = fit_rows(rows);
  EXPECT_TRUE(g.mu.isApprox(Eigen::Vector2d(1, 1)));
  EXPECT_TRUE(g.sigma.isApprox(Eigen::Matrix2d::Identity()));
  EXPECT_EQ(g.n_windows, 4);
}

TEST(Fit, RepeatedRowGivesZeroCovariance) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Ones(5, 3);
  EXPECT_EQ(fit_rows(rows).sigma, Eigen::MatrixXd::Zero(3, 3));
  EXPECT_ERRC(fit_rows(Eigen::MatrixXd::Ones(1, 3)), InsufficientWindows);
}

TEST(Fit, FavdConcatenatesPerWindow) {
  std::vector<features::EmbeddingPair> set{pair_from(Eigen::MatrixXf::Random(4, 128), Eigen::MatrixXf::Random(4, 1024)),
                                           pair_from(Eigen::MatrixXf::Random(3, 128), Eigen::MatrixXf::Random(3, 1024))};
  const auto g = fit_gaussian(set, Variant::FAVD);
  EXPECT_EQ(g.mu.size(), 1152);
  EXPECT_EQ(g.n_windows, 7);
  EXPECT_EQ(fit_gaussian(set, Variant::FAD).mu.size(), 128);
  EXPECT_EQ(fit_gaussian(set, Variant::FVD).mu.size(), 1024);
  std::vector<features::EmbeddingPair> ragged{pair_from(Eigen::MatrixXf::Random(4, 8), Eigen::MatrixXf::Random(3, 8))};
  EXPECT_ERRC(fit_gaussian(ragged, Variant::FAVD), DimensionMismatch);
  std::vector<features::EmbeddingPair> mixed{pair_from(Eigen::MatrixXf::Random(4, 8), Eigen::MatrixXf::Random(4, 8)),
                                             pair_from(Eigen::MatrixXf::Random(4, 9), Eigen::MatrixXf::Random(4, 8))};
  EXPECT_ERRC(fit_gaussian(mixed, Variant::FAD), DimensionMismatch);
}

TEST(Distance, WorkedExamples) {
  EXPECT_NEAR(frechet_distance(stats(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()),
                               stats(Eigen::Vector2d(3, 4), Eigen::Matrix2d::Identity())),
              25.0, 1e-10);
  EXPECT_NEAR(frechet_distance(stats(Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()),
                               stats(Eigen::Vector2d(0, 0), 4 * Eigen::Matrix2d::Identity())),
              2.0, 1e-10);
  const auto a = stats(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity());
  EXPECT_LE(frechet_distance(a, a), 1e-8);
  EXPECT_ERRC(frechet_distance(a, stats(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity())), DimensionMismatch);
}

TEST(Distance, DenseMatchesJacobiOracle) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int c = 0; c < 10; ++c) {
    const int d = 2 + c;
    Eigen::VectorXd ma(d), mb(d);
    for (int i = 0; i < d; ++i) {
      ma(i) = n(rng);
      mb(i) = n(rng);
    }
    const auto sa = random_spd(rng, d);
    const auto sb = random_spd(rng, d);
    const double got = frechet_distance(stats(ma, sa), stats(mb, sb));
    EXPECT_NEAR(got, oracle::frechet(ma, sa, mb, sb), 1e-8);
    EXPECT_NEAR(got, frechet_distance(stats(mb, sb), stats(ma, sa)), 1e-8);
  }
}

TEST(Distance, SingularCovarianceIsRegularized) {
  Eigen::MatrixXd rank1 = Eigen::Vector3d(1, 2, 3) * Eigen::RowVector3d(1, 2, 3);
  const auto a = stats(Eigen::Vector3d::Zero(), rank1);
  const auto b = stats(Eigen::Vector3d::Ones(), Eigen::Matrix3d::Identity());
  const double d = frechet_distance(a, b);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(d, oracle::frechet(Eigen::Vector3d::Zero(), rank1, Eigen::Vector3d::Ones(), Eigen::Matrix3d::Identity()), 1e-4);
  EXPECT_LE(frechet_distance(a, a), 1e-8);
}

TEST(Distance, RidgeContinuity) {
  std::mt19937_64 rng(5);
  const auto sa = random_spd(rng, 6);
  const auto sb = random_spd(rng, 6);
  FrechetOptions e1, e2;
  e1.force_ridge = e2.force_ridge = true;
  e1.ridge_scale = 1e-6;
  e2.ridge_scale = 1e-7;
  const auto a = stats(Eigen::VectorXd::Zero(6), sa);
  const auto b = stats(Eigen::VectorXd::Ones(6), sb);
  EXPECT_NEAR(frechet_distance(a, b, e1), frechet_distance(a, b, e2), 1e-4);
}

TEST(Score, IdenticalSetsScoreZero) {
  std::vector<features::EmbeddingPair> set{pair_from(Eigen::MatrixXf::Random(6, 4), Eigen::MatrixXf::Random(6, 5))};
  for (auto v : {Variant::FAD, Variant::FVD, Variant::FAVD}) EXPECT_LE(favd_score(set, set, v), 1e-8);
  std::vector<features::EmbeddingPair> empty;
  EXPECT_ERRC(favd_score(empty, set, Variant::FAD), EmptyInput);
  EXPECT_EQ(variant_from_name("favd"), Variant::FAVD);
  EXPECT_EQ(variant_name(Variant::FVD), "fvd");
}

}  // namespace
}  // namespace peavs::frechet
