#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "peavs/distort.hpp"

namespace peavs::datakit {

enum class Slot { Left, Right };

std::string_view slot_name(Slot s);
Slot slot_from_name(std::string_view name);

struct RatingRecord {
  std::string task_id;
  Slot slot = Slot::Left;
  std::string video_id;
  std::string annotator_id;
  int score = 0;
  std::int64_t timestamp = 0;
  int revision = 0;

  bool operator==(const RatingRecord&) const = default;
};

void validate(const RatingRecord& r);
nlohmann::json to_json(const RatingRecord& r);
RatingRecord rating_from_json(const nlohmann::json& j);

std::string encode_ratings(std::span<const RatingRecord> records);
std::vector<RatingRecord> decode_ratings(std::string_view jsonl);
std::vector<RatingRecord> read_ratings(const std::filesystem::path& path);

// Append-only JSONL store. Appends are serialized; existing lines are never rewritten.
class RatingsStore {
 public:
  explicit RatingsStore(std::filesystem::path path);
  void append(const RatingRecord& r);
  std::vector<RatingRecord> load() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

enum class DisagreementClass { Agreement, Disagreement, QARequired };

std::string_view disagreement_name(DisagreementClass c);

// All distinct -> Disagreement, and QARequired when the range is at least 3.
DisagreementClass classify_disagreement(std::span<const int> scores);

struct AggregatedScore {
  std::string video_id;
  double mean_score = 0.0;
  int n_ratings = 0;
  DisagreementClass disagreement = DisagreementClass::Agreement;
  // Mean of each (task, slot) occurrence before merging.
  std::vector<double> task_means;
};

// Keeps each annotator's latest revision per (task, slot), then merges every rating of a video.
std::vector<AggregatedScore> aggregate_ratings(std::span<const RatingRecord> records, int min_ratings = 3);

std::string aggregated_to_csv(std::span<const AggregatedScore> scores);
std::vector<AggregatedScore> aggregated_from_csv(std::string_view text);

struct FilterOptions {
  double gt_threshold = 3.5;
  // true: judge the rules on per-task means; false: on the merged video mean.
  bool per_task = true;
};

struct FilterResult {
  std::vector<AggregatedScore> kept;
  std::vector<std::pair<std::string, std::string>> removed;  // (video_id, reason)
};

FilterResult filter_benchmark(std::span<const AggregatedScore> scores, const distort::BenchmarkManifest& manifest,
                              const FilterOptions& options = {});

using VideoPair = std::pair<std::string, std::string>;

// Each slot draws a (kind, level) cell uniformly (ground truth is its own cell), then a video in it.
std::vector<VideoPair> sample_pairs(const distort::BenchmarkManifest& manifest, std::size_t k, std::uint64_t seed);

enum class Split { Train, Dev, Test };

std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct SplitRatios {
  double train = 0.70;
  double dev = 0.15;
  double test = 0.15;
};

// (video_id, group key) pairs in, video_id -> split out. Whole groups move together.
std::map<std::string, Split> grouped_split(std::span<const std::pair<std::string, std::string>> videos,
                                           const SplitRatios& ratios, std::uint64_t seed);

std::string splits_to_csv(const std::map<std::string, Split>& splits);
std::map<std::string, Split> splits_from_csv(std::string_view text);

}  // namespace peavs::datakit
