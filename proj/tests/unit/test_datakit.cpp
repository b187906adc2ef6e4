#include <algorithm>
#include <random>
#include <set>

#include "../oracles/oracles.hpp"
#include "peavs/datakit.hpp"
#include "peavs/textio.hpp"
#include "test_support.hpp"

namespace peavs::datakit {
namespace {

RatingRecord rec(std::string task, Slot slot, std::string video, std::string who, int score, int revision = 0,
                 std::int64_t ts = 0) {
  return {std::move(task), slot, std::move(video), std::move(who), score, ts, revision};
}

distort::BenchmarkManifest manifest(int sources) {
  std::vector<std::string> ids;
  for (int i = 0; i < sources; ++i) ids.push_back("src" + std::to_string(i));
  return distort::build_benchmark_manifest(ids, 1);
}

AggregatedScore agg(std::string id, double mean, std::vector<double> task_means = {}) {
  AggregatedScore a;
  a.video_id = std::move(id);
  a.mean_score = mean;
  a.n_ratings = 3;
  a.task_means = task_means.empty() ? std::vector<double>{mean} : std::move(task_means);
  return a;
}

TEST(Classify, ExamplesAndExhaustive) {
  auto cls = [](int a, int b, int c) {
    const int s[3] = {a, b, c};
    return classify_disagreement(s);
  };
  EXPECT_EQ(cls(1, 4, 5), DisagreementClass::QARequired);
  EXPECT_EQ(cls(3, 3, 3), DisagreementClass::Agreement);
  EXPECT_EQ(cls(2, 3, 4), DisagreementClass::Disagreement);
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b)
      for (int c = 1; c <= 5; ++c) EXPECT_EQ(static_cast<int>(cls(a, b, c)), oracle::disagreement_class(a, b, c));
  EXPECT_ERRC(cls(0, 1, 2), ScoreOutOfRange);
}

TEST(Records, JsonlRoundTripAndValidation) {
  std::vector<RatingRecord> rs{rec("t1", Slot::Left, "v1", "a", 4, 0, 10), rec("t1", Slot::Right, "v2", "a", 2, 1, 11)};
  EXPECT_EQ(decode_ratings(encode_ratings(rs)), rs);
  EXPECT_ERRC(validate(rec("t", Slot::Left, "v", "a", 6)), ScoreOutOfRange);
}

TEST(Store, AppendOnly) {
  test::TempDir dir("store");
  RatingsStore store(dir / "r.jsonl");
  store.append(rec("t", Slot::Left, "v", "a", 3));
  const auto first = textio::read_text(dir / "r.jsonl");
  store.append(rec("t", Slot::Right, "w", "a", 4));
  const auto second = textio::read_text(dir / "r.jsonl");
  EXPECT_EQ(second.substr(0, first.size()), first);
  EXPECT_EQ(store.load().size(), 2u);
}

TEST(Aggregate, MeansAndMerging) {
  std::vector<RatingRecord> rs{rec("t1", Slot::Left, "v", "a", 4), rec("t1", Slot::Left, "v", "b", 4),
                               rec("t1", Slot::Left, "v", "c", 5)};
  auto out = aggregate_ratings(rs);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].mean_score, 13.0 / 3.0, 1e-12);

  std::vector<RatingRecord> two_tasks;
  for (const char* who : {"a", "b", "c"}) two_tasks.push_back(rec("t1", Slot::Left, "v", who, 5));
  for (const char* who : {"d", "e", "f"}) two_tasks.push_back(rec("t2", Slot::Right, "v", who, 4));
  out = aggregate_ratings(two_tasks);
  EXPECT_DOUBLE_EQ(out[0].mean_score, 4.5);
  EXPECT_EQ(out[0].n_ratings, 6);
  EXPECT_EQ(out[0].task_means, (std::vector<double>{5.0, 4.0}));
}

TEST(Aggregate, LatestRevisionWins) {
  std::vector<RatingRecord> rs{rec("t", Slot::Left, "v", "a", 1, 0), rec("t", Slot::Left, "v", "b", 3, 0),
                               rec("t", Slot::Left, "v", "c", 3, 0), rec("t", Slot::Left, "v", "a", 3, 1)};
  EXPECT_DOUBLE_EQ(aggregate_ratings(rs)[0].mean_score, 3.0);
}

TEST(Aggregate, PermutationInvariantAndInsufficient) {
  std::vector<RatingRecord> rs;
  const char* who[] = {"a", "b", "c"};
  for (int v = 0; v < 4; ++v)
    for (int i = 0; i < 3; ++i) rs.push_back(rec("t" + std::to_string(v), Slot::Left, "v" + std::to_string(v), who[i], 1 + (v + i) % 5));
  const auto base = aggregated_to_csv(aggregate_ratings(rs));
  std::mt19937 rng(1);
  for (int t = 0; t < 5; ++t) {
    std::shuffle(rs.begin(), rs.end(), rng);
    EXPECT_EQ(aggregated_to_csv(aggregate_ratings(rs)), base);
  }
  rs.pop_back();
  try {
    aggregate_ratings(rs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientRatings);
  }
  const auto back = aggregated_from_csv(base);
  EXPECT_EQ(aggregated_to_csv(back), base);
}

TEST(Filter, OutlierRules) {
  const auto m = manifest(2);
  std::vector<AggregatedScore> scores{agg("src0__gt", 3.4), agg("src0__k1_l01", 2.0), agg("src1__gt", 4.5),
                                      agg("src1__k2_l10", 5.0), agg("src1__k2_l05", 5.0), agg("src1__k2_l09", 4.0)};
  const auto r = filter_benchmark(scores, m);
  std::set<std::string> kept;
  for (const auto& s : r.kept) kept.insert(s.video_id);
  EXPECT_EQ(kept, (std::set<std::string>{"src1__gt", "src1__k2_l05", "src1__k2_l09"}));
  EXPECT_EQ(r.removed.size(), 3u);
  const auto again = filter_benchmark(r.kept, m);
  EXPECT_EQ(again.kept.size(), r.kept.size());
  std::vector<AggregatedScore> unknown{agg("nope", 3.0)};
  EXPECT_ERRC(filter_benchmark(unknown, m), UnknownVideoId);
}

TEST(Filter, PerTaskVersusMergedMeans) {
  const auto m = manifest(1);
  std::vector<AggregatedScore> scores{agg("src0__gt", 4.0, {3.0, 5.0}), agg("src0__k1_l05", 3.0)};
  EXPECT_EQ(filter_benchmark(scores, m).kept.size(), 0u);
  FilterOptions merged;
  merged.per_task = false;
  EXPECT_EQ(filter_benchmark(scores, m, merged).kept.size(), 2u);
}

TEST(Sampling, DeterministicStratified) {
  const auto m = manifest(3);
  const auto a = sample_pairs(m, 500, 4);
  EXPECT_EQ(a, sample_pairs(m, 500, 4));
  EXPECT_NE(a, sample_pairs(m, 500, 5));
  std::set<std::string> ids;
  for (const auto& r : m.rows) ids.insert(r.output_id);
  std::size_t gt = 0;
  for (const auto& [l, r] : a) {
    EXPECT_TRUE(ids.count(l) && ids.count(r));
    EXPECT_NE(l, r);
    gt += l.ends_with("__gt") + r.ends_with("__gt");
  }
  // 91 cells, ground truth is one of them.
  EXPECT_NEAR(static_cast<double>(gt) / 1000.0, 1.0 / 91.0, 0.01);
  EXPECT_EQ(sample_pairs(m, 1, 0).size(), 1u);
  EXPECT_ERRC(sample_pairs(distort::BenchmarkManifest{}, 3, 0), EmptyManifest);
}

TEST(Sampling, AppearanceRateAtFullScale) {
  const auto m = manifest(200);
  const auto pairs = sample_pairs(m, 20000, 7);
  std::size_t distorted = 0;
  for (const auto& [l, r] : pairs) distorted += !l.ends_with("__gt") + !r.ends_with("__gt");
  EXPECT_NEAR(static_cast<double>(distorted) / 18200.0, 2.2, 0.1);
}

TEST(Splits, GroupAtomicAndProportional) {
  std::vector<std::pair<std::string, std::string>> videos;
  for (int g = 0; g < 20; ++g)
    for (int v = 0; v < 5; ++v) videos.emplace_back("g" + std::to_string(g) + "_" + std::to_string(v), "g" + std::to_string(g));
  const auto s = grouped_split(videos, {}, 3);
  EXPECT_EQ(s.size(), videos.size());
  std::map<std::string, std::set<Split>> per_group;
  for (const auto& [vid, grp] : videos) per_group[grp].insert(s.at(vid));
  std::map<Split, int> counts;
  for (const auto& [g, set] : per_group) {
    EXPECT_EQ(set.size(), 1u) << g;
    ++counts[*set.begin()];
  }
  EXPECT_EQ(counts[Split::Train], 14);
  EXPECT_EQ(counts[Split::Dev], 3);
  EXPECT_EQ(counts[Split::Test], 3);
  EXPECT_EQ(s, grouped_split(videos, {}, 3));
  EXPECT_EQ(splits_from_csv(splits_to_csv(s)), s);
  std::vector<std::pair<std::string, std::string>> none;
  EXPECT_ERRC(grouped_split(none, {}, 1), EmptyInput);
}

}  // namespace
}  // namespace peavs::datakit
