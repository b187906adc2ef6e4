#include <functional>
#include <numeric>
#include <random>

#include "../oracles/oracles.hpp"
#include "peavs/analysis.hpp"
#include "test_support.hpp"

namespace peavs::analysis {
namespace {

std::vector<ScoredClip> fixture(const std::function<double(int, int)>& human, const std::function<double(double)>& metric) {
  std::vector<ScoredClip> out;
  for (int k = 1; k <= 9; ++k)
    for (int l = 1; l <= 10; ++l)
      for (int c = 0; c < 3; ++c) {
        const double h = human(k, l) + 0.01 * c;
        out.push_back({"k" + std::to_string(k) + "l" + std::to_string(l) + "c" + std::to_string(c), {k, l}, metric(h), h});
      }
  return out;
}

TEST(Pearson, Examples) {
  std::vector<double> x{1, 2, 3}, y{6, 4, 2};
  EXPECT_DOUBLE_EQ(pearson(x, x), 1.0);
  EXPECT_NEAR(pearson(x, y), -1.0, 1e-15);
  std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  EXPECT_NEAR(pearson(a, b), 0.8, 1e-15);
  EXPECT_NEAR(pearson(a, b), pearson(b, a), 1e-15);
  std::vector<double> b2;
  for (double v : b) b2.push_back(3 * v + 7);
  EXPECT_NEAR(pearson(a, b2), 0.8, 1e-12);
  std::vector<double> flat{2, 2, 2};
  EXPECT_ERRC(pearson(x, flat), DegenerateInput);
  std::vector<double> one{1};
  EXPECT_ERRC(pearson(one, one), InsufficientData);
}

TEST(Spearman, AverageRanks) {
  std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
  std::vector<double> x{1, 2, 3, 4}, y{1, 8, 27, 64};
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-15);
}

TEST(SetLevel, Examples) {
  auto same = fixture([](int k, int l) { return 1.0 + (k + l) % 5; }, [](double h) { return h; });
  auto r = set_level_correlation(same);
  EXPECT_NEAR(r.set_pcc, 1.0, 1e-12);
  EXPECT_NEAR(r.clip_pcc, 1.0, 1e-12);
  EXPECT_EQ(r.n_sets, 90u);
  auto neg = fixture([](int k, int l) { return 1.0 + (k + l) % 5; }, [](double h) { return 6.0 - h; });
  r = set_level_correlation(neg);
  EXPECT_NEAR(r.set_pcc, -1.0, 1e-12);

  std::vector<ScoredClip> three{{"a", {1, 1}, 1, 2}, {"b", {1, 2}, 2, 4}, {"c", {1, 3}, 3, 5}};
  std::vector<double> m{1, 2, 3}, h{2, 4, 5};
  EXPECT_NEAR(set_level_correlation(three).set_pcc, pearson(m, h), 1e-15);
  EXPECT_NEAR(set_level_correlation(three).set_pcc, 0.9820, 1e-4);
}

TEST(Join, SkipsGroundTruthAndFlagsMissing) {
  std::vector<std::string> src{"s"};
  const auto man = distort::build_benchmark_manifest(src, 1, {{distort::Kind::AudioShift}, {0, 1}});
  std::map<std::string, double> metric{{"s__gt", 5}, {"s__k1_l01", 2}, {"s__k1_l02", 3}};
  std::map<std::string, double> human{{"s__gt", 5}, {"s__k1_l01", 1}, {"s__k1_l02", 4}};
  const auto j = join_scores(metric, human, man);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1].key, (SetKey{1, 2}));
  human.erase("s__k1_l02");
  EXPECT_ERRC(join_scores(metric, human, man), MissingScore);
}

TEST(Alpha, ExamplesAndOracle) {
  std::vector<std::vector<double>> perfect{{3, 3, 3}, {1, 1}, {5, 5, 5}};
  EXPECT_DOUBLE_EQ(krippendorff_alpha(perfect), 1.0);
  std::vector<std::vector<double>> two{{1, 1}, {5, 5}};
  EXPECT_DOUBLE_EQ(krippendorff_alpha(two), 1.0);
  std::vector<std::vector<double>> close{{1, 2}, {4, 5}};
  EXPECT_NEAR(krippendorff_alpha(close), oracle::krippendorff_literal(close), 1e-12);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::vector<double>> units(3 + rng() % 10);
    for (auto& u : units) {
      u.resize(1 + rng() % 4);
      for (auto& v : u) v = 1.0 + static_cast<double>(rng() % 5);
    }
    units[0] = {1, 4};
    units[1] = {2, 2, 5};
    EXPECT_NEAR(krippendorff_alpha(units), oracle::krippendorff_literal(units), 1e-10);
  }
  std::vector<std::vector<double>> lonely{{1, 2}, {3}};
  EXPECT_ERRC(krippendorff_alpha(lonely), InsufficientData);
}

TEST(Bins, EdgesAndExamples) {
  EXPECT_EQ(bin_score(5.0), 21);
  EXPECT_EQ(bin_score(0.1), 1);
  EXPECT_EQ(bin_score(20.0 * 5.0 / 21.0), 20);
  EXPECT_NEAR(bin_upper_edge(20), 4.76, 0.005);
  EXPECT_EQ(bin_score(7.0), 21);
  EXPECT_EQ(bin_score(-1.0), 1);
  int prev = 1;
  for (int i = 1; i <= 5000; ++i) {
    const int b = bin_score(i * 0.001);
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_TRUE(peavs_positive(4.8));
  EXPECT_FALSE(peavs_positive(4.76));
}

TEST(Confusion, ReportedMatrices) {
  EXPECT_DOUBLE_EQ(binary_sync_eval(ConfusionMatrix{39, 227, 4, 130}).accuracy, 0.4225);
  EXPECT_DOUBLE_EQ(binary_sync_eval(ConfusionMatrix{92, 174, 24, 110}).accuracy, 0.505);
  std::vector<bool> p{true, false, true}, t{true, false, true};
  const auto e = binary_sync_eval(p, t);
  EXPECT_DOUBLE_EQ(e.accuracy, 1.0);
  EXPECT_EQ(e.matrix.total(), 3);
  std::vector<bool> short_t{true};
  EXPECT_ERRC(binary_sync_eval(p, short_t), LabelMismatch);
}

TEST(Confusion, SyncTruth) {
  using distort::DistortionSpec;
  using distort::Kind;
  EXPECT_TRUE(sync_truth(std::nullopt));
  for (double l : {0.045, 0.1, 0.125, -0.125}) EXPECT_TRUE(sync_truth(DistortionSpec{Kind::AudioShift, l, 0, 0.4}));
  for (double l : {0.25, -0.5, 2.0}) EXPECT_FALSE(sync_truth(DistortionSpec{Kind::AudioShift, l, 0, 0.4}));
  EXPECT_FALSE(sync_truth(DistortionSpec{Kind::IntermittentMute, 0.01, 0, 0.4}));
}

TEST(Report, PerKindCorrelations) {
  auto perfect = fixture([](int k, int l) { return 5.0 - 0.3 * l - 0.01 * k; }, [](double h) { return h; });
  auto rep = per_distortion_report(perfect);
  EXPECT_EQ(rep.rows.size(), 90u);
  for (const auto& k : rep.per_kind) {
    ASSERT_TRUE(k.pearson.has_value());
    EXPECT_NEAR(*k.pearson, 1.0, 1e-9);
  }
  auto monotone = fixture([](int, int l) { return 5.0 - 0.4 * l; }, [](double h) { return std::exp(h / 3.0); });
  for (const auto& k : per_distortion_report(monotone).per_kind) EXPECT_GT(*k.pearson, 0.9);
  auto constant = fixture([](int, int l) { return 5.0 - 0.4 * l; }, [](double) { return 3.0; });
  for (const auto& k : per_distortion_report(constant).per_kind) {
    EXPECT_FALSE(k.pearson.has_value());
    EXPECT_EQ(k.error, Errc::DegenerateInput);
  }
  EXPECT_FALSE(report_csv(rep).empty());
  EXPECT_FALSE(report_summary(rep).empty());
}

TEST(AbsDiff, GroupingAndExclusions) {
  std::vector<PairTask> tasks{{2, 5, 2.0, 5.0}, {5, 2, 3.0, 3.0}, {3, 3, 1.0, 5.0}, {1, 4, 1.0, 5.0}, {0, 6, 4.0, 1.0}};
  const auto d = abs_diff_analysis(tasks);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at({2, 5}), (std::vector<double>{3.0, 0.0}));
  EXPECT_EQ(d.at({0, 6}), (std::vector<double>{3.0}));
}

TEST(AbsDiff, MutingDominates) {
  std::vector<PairTask> tasks;
  for (int a = 2; a <= 9; ++a)
    for (int b = 2; b <= 9; ++b) {
      if (a == b) continue;
      tasks.push_back({a, b, a == 6 ? 1.0 : 4.0, b == 6 ? 1.0 : 4.0});
    }
  const auto d = abs_diff_analysis(tasks);
  for (const auto& [key, diffs] : d) {
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    if (key.first == 6 || key.second == 6) {
      EXPECT_DOUBLE_EQ(mean, 3.0);
    } else {
      EXPECT_DOUBLE_EQ(mean, 0.0);
    }
  }
}

}  // namespace
}  // namespace peavs::analysis
