#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "peavs/datakit.hpp"
#include "peavs/distort.hpp"
#include "peavs/error.hpp"
#include "peavs/features.hpp"
#include "peavs/net/training.hpp"

namespace peavs::pipeline {

namespace fs = std::filesystem;

// [section] / key = value text; '#' starts a comment; values may be double-quoted.
class RunConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static RunConfig parse(std::string_view text);
  static RunConfig load(const fs::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, std::string value);

  // Sorted "section.key=value" lines; stable across formatting differences.
  std::string canonical() const;
  std::uint64_t hash() const;

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

struct Preset {
  std::string name;
  features::ExtractorConfig extractor;
  net::ModelConfig model;
  net::TrainConfig stage1;
  net::TrainConfig stage2;
  int clips = 8;
  std::size_t pairs = 600;
};

Preset preset(const std::string& name);
// Applies [extract], [model], [train1] and [train2] overrides.
Preset resolve_preset(const RunConfig& cfg);

struct IndexRow {
  std::string clip_id;
  std::string source_id;
  std::optional<distort::DistortionSpec> spec;
  std::string audio;  // relative to the data directory
  std::string video;
};

std::string index_to_csv(std::span<const IndexRow> rows);
std::vector<IndexRow> index_from_csv(std::string_view text);
std::vector<IndexRow> read_index(const fs::path& data_dir);

// Extracts every manifest row found under `videos_dir` into `out_dir` (.emb files plus index.csv).
std::vector<IndexRow> extract_directory(const distort::BenchmarkManifest& manifest, const fs::path& videos_dir,
                                        const fs::path& out_dir, const features::ExtractorConfig& extractor,
                                        unsigned jobs = 1);

features::EmbeddingPair load_pair(const fs::path& data_dir, const IndexRow& row);

// 1 for ground truth, 0 for audio shifts outside the acceptability window, empty for everything else.
std::optional<double> stage1_target(const std::optional<distort::DistortionSpec>& spec);

// Rows with a stage-1 target.
std::vector<net::Example> stage1_examples(const fs::path& data_dir, std::span<const IndexRow> rows);
std::vector<net::Example> stage2_examples(const fs::path& data_dir, std::span<const IndexRow> rows,
                                          const std::map<std::string, double>& scores);

// CSV video_id,score.
std::map<std::string, double> read_scores(const fs::path& path);
std::string scores_to_csv(const std::map<std::string, double>& scores);

// Drives the annotation service with simulated raters until every task completes.
std::vector<datakit::RatingRecord> simulate_annotation(const distort::BenchmarkManifest& manifest,
                                                       std::span<const datakit::VideoPair> pairs,
                                                       const fs::path& store_path, int annotators, std::uint64_t seed);

void write_stage_manifest(const fs::path& dir, const std::string& stage, std::uint64_t config_hash,
                          const std::vector<fs::path>& outputs);

class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const Error& cause)
      : Error(cause.code(), "stage '" + stage + "' failed: " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

const std::vector<std::string>& known_stages();

// Throws InvalidConfig / MissingFile before any work is done.
void validate(const RunConfig& cfg);
void run_pipeline(const RunConfig& cfg, std::ostream& log);

}  // namespace peavs::pipeline
