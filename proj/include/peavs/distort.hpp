#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peavs/media.hpp"

namespace peavs::distort {

// Numeric values are the catalog IDs 1..9.
enum class Kind : int {
  AudioShift = 1,
  AudioSpeedUp = 2,
  VideoSpeedUp = 3,
  AudioSpeedDown = 4,
  VideoSpeedDown = 5,
  IntermittentMute = 6,
  RandomVideoGaps = 7,
  FragmentShuffle = 8,
  AVFlicker = 9,
};

inline constexpr int kKindCount = 9;
inline constexpr int kLevelCount = 10;
inline constexpr double kDefaultGapProbability = 0.40;

std::span<const Kind> all_kinds();
std::span<const double> catalog_levels(Kind kind);
std::string_view kind_name(Kind kind);
Kind kind_from_id(int id);
// Zero-based position of `level` in the kind's catalog; throws LevelOutOfCatalog.
int level_index(Kind kind, double level);
double max_level(Kind kind);
bool is_stochastic(Kind kind);

struct DistortionSpec {
  Kind kind = Kind::AudioShift;
  double level = 0.0;
  std::uint64_t seed = 0;
  double gap_probability = kDefaultGapProbability;
};

void validate(const DistortionSpec& spec);

// Checks the spec against the catalog, then runs the kernel.
media::ClipBundle apply_distortion(const media::ClipBundle& clip, const DistortionSpec& spec);

// Same kernels without the catalog check; level 0 (or gap probability 0) is the identity.
media::ClipBundle apply_kernel(const media::ClipBundle& clip, const DistortionSpec& spec);

struct WsolaParams {
  double window_seconds = 0.030;
  double seek_seconds = 0.010;
};

// Pitch-preserving time stretch. rate > 1 shortens; output length is round(n / rate).
std::vector<std::int16_t> wsola_stretch(std::span<const std::int16_t> samples, std::uint32_t sample_rate,
                                        double rate, const WsolaParams& params = {});

struct Interval {
  double begin = 0.0;
  double end = 0.0;
};

// Gap starts sit on whole-second boundaries, each kept with `probability`; overlaps merge.
std::vector<Interval> gap_schedule(double duration, double gap_seconds, double probability, std::uint64_t seed);

struct ManifestRow {
  std::string output_id;
  std::string source_id;
  std::optional<DistortionSpec> spec;  // empty for ground truth

  bool is_ground_truth() const { return !spec.has_value(); }
};

struct BenchmarkManifest {
  std::vector<ManifestRow> rows;
};

// Restricts the grid; empty vectors select everything.
struct GridSelection {
  std::vector<Kind> kinds;
  std::vector<int> level_indices;
};

std::uint64_t derive_seed(std::uint64_t seed, std::string_view source_id, Kind kind, int level_idx);
std::string output_id_for(std::string_view source_id, const std::optional<DistortionSpec>& spec);

BenchmarkManifest build_benchmark_manifest(std::span<const std::string> sources, std::uint64_t seed,
                                           const GridSelection& grid = {});

std::string manifest_to_csv(const BenchmarkManifest& manifest);
BenchmarkManifest manifest_from_csv(std::string_view text);
void write_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& path);
BenchmarkManifest read_manifest(const std::filesystem::path& path);

// Loads in_dir/<source_id>, writes out_dir/<output_id>. Output is independent of `jobs`.
void run_manifest(const BenchmarkManifest& manifest, const std::filesystem::path& in_dir,
                  const std::filesystem::path& out_dir, unsigned jobs = 1);

}  // namespace peavs::distort
