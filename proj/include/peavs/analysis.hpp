#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "peavs/distort.hpp"
#include "peavs/error.hpp"

namespace peavs::analysis {

double pearson(std::span<const double> x, std::span<const double> y);
// Pearson over average ranks.
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> v);

struct SetKey {
  int kind = 0;         // 1..9
  int level_index = 0;  // 1..10

  auto operator<=>(const SetKey&) const = default;
};

struct ScoredClip {
  std::string video_id;
  SetKey key;
  double metric = 0.0;
  double human = 0.0;
};

// Joins per-video scores with manifest set keys. Ground-truth rows are skipped; MissingScore otherwise.
std::vector<ScoredClip> join_scores(const std::map<std::string, double>& metric, const std::map<std::string, double>& human,
                                    const distort::BenchmarkManifest& manifest);

struct SetLevelResult {
  double set_pcc = 0.0;
  double clip_pcc = 0.0;
  std::size_t n_sets = 0;
  std::size_t n_clips = 0;
};

SetLevelResult set_level_correlation(std::span<const ScoredClip> clips);

// Interval-metric alpha over units (each unit holds the ratings one video received).
double krippendorff_alpha(std::span<const std::vector<double>> units);

inline constexpr int kBinCount = 21;
inline constexpr double kScaleMax = 5.0;

// Bin k covers (5(k-1)/21, 5k/21]; out-of-range scores are clamped to bins 1 and 21.
int bin_score(double score);
double bin_upper_edge(int bin);

struct ConfusionMatrix {
  long tp = 0;
  long fn = 0;
  long fp = 0;
  long tn = 0;

  long total() const { return tp + fn + fp + tn; }
  double accuracy() const;
};

struct BinaryEval {
  ConfusionMatrix matrix;
  double accuracy = 0.0;
};

BinaryEval binary_sync_eval(const std::vector<bool>& predicted_positive, const std::vector<bool>& truth_positive);
BinaryEval binary_sync_eval(const ConfusionMatrix& m);

// PEAVS criterion: the top bin.
bool peavs_positive(double score);
// Ground truth and audio shifts within the 125 ms acceptability window count as in sync.
bool sync_truth(const std::optional<distort::DistortionSpec>& spec);

struct ReportRow {
  SetKey key;
  double mean_metric = 0.0;
  double mean_human = 0.0;
  std::size_t n = 0;
};

struct KindCorrelation {
  int kind = 0;
  std::optional<double> pearson;
  std::optional<Errc> error;
};

struct DistortionReport {
  std::vector<ReportRow> rows;
  std::vector<KindCorrelation> per_kind;
};

DistortionReport per_distortion_report(std::span<const ScoredClip> clips);

struct PairTask {
  int left_kind = 0;  // 0 = ground truth
  int right_kind = 0;
  double left_score = 0.0;
  double right_score = 0.0;
};

// |left - right| grouped by unordered kind pair; same-kind and audio-shift pairs are left out.
std::map<std::pair<int, int>, std::vector<double>> abs_diff_analysis(std::span<const PairTask> tasks);

std::string set_level_csv(std::span<const ScoredClip> clips, const SetLevelResult& r);
std::string report_csv(const DistortionReport& report);
std::string report_summary(const DistortionReport& report);
std::string abs_diff_csv(const std::map<std::pair<int, int>, std::vector<double>>& diffs);
std::string confusion_summary(const BinaryEval& e);

}  // namespace peavs::analysis
