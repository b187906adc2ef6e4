#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "peavs/distort.hpp"
#include "peavs/error.hpp"
#include "peavs/rng.hpp"
#include "peavs/textio.hpp"

namespace peavs::distort {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kHeader = "output_id,source_id,kind,level,seed,gap_probability";

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view source_id, Kind kind, int level_idx) {
  std::uint64_t h = hash_combine(seed, fnv1a(source_id));
  h = hash_combine(h, static_cast<std::uint64_t>(kind));
  return hash_combine(h, static_cast<std::uint64_t>(level_idx));
}

std::string output_id_for(std::string_view source_id, const std::optional<DistortionSpec>& spec) {
  if (!spec) return std::string(source_id) + "__gt";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "__k%d_l%02d", static_cast<int>(spec->kind), level_index(spec->kind, spec->level) + 1);
  return std::string(source_id) + buf;
}

BenchmarkManifest build_benchmark_manifest(std::span<const std::string> sources, std::uint64_t seed,
                                           const GridSelection& grid) {
  if (sources.empty()) throw Error(Errc::EmptyInput, "no source clips");
  std::set<std::string> seen;
  for (const auto& s : sources) {
    if (s.empty() || s.find_first_of(",\n\"") != std::string::npos) {
      throw Error(Errc::InvalidConfig, "source id '" + s + "' is empty or contains CSV metacharacters");
    }
    if (!seen.insert(s).second) throw Error(Errc::DuplicateSourceId, s);
  }

  std::vector<Kind> kinds = grid.kinds;
  if (kinds.empty()) kinds.assign(all_kinds().begin(), all_kinds().end());
  std::vector<int> level_ids = grid.level_indices;
  if (level_ids.empty()) {
    for (int i = 0; i < kLevelCount; ++i) level_ids.push_back(i);
  }

  BenchmarkManifest m;
  m.rows.reserve(sources.size() * (kinds.size() * level_ids.size() + 1));
  for (const auto& source : sources) {
    m.rows.push_back({output_id_for(source, std::nullopt), source, std::nullopt});
    for (Kind kind : kinds) {
      for (int li : level_ids) {
        if (li < 0 || li >= kLevelCount) throw Error(Errc::LevelOutOfCatalog, "level index " + std::to_string(li));
        DistortionSpec spec{kind, catalog_levels(kind)[static_cast<std::size_t>(li)], 0, kDefaultGapProbability};
        if (is_stochastic(kind)) spec.seed = derive_seed(seed, source, kind, li);
        m.rows.push_back({output_id_for(source, spec), source, spec});
      }
    }
  }
  return m;
}

std::string manifest_to_csv(const BenchmarkManifest& manifest) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& row : manifest.rows) {
    out += row.output_id + ',' + row.source_id + ',';
    if (row.spec) {
      out += std::to_string(static_cast<int>(row.spec->kind)) + ',' + textio::format_double(row.spec->level) + ',' +
             std::to_string(row.spec->seed) + ',' + textio::format_double(row.spec->gap_probability);
    } else {
      out += "0,0,0,0";
    }
    out += '\n';
  }
  return out;
}

BenchmarkManifest manifest_from_csv(std::string_view text) {
  const auto table = textio::parse_csv(text);
  if (table.empty() || textio::join(table.front(), ",") != kHeader) {
    throw Error(Errc::MalformedHeader, "manifest header must be '" + std::string(kHeader) + "'", 0);
  }
  BenchmarkManifest m;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& f = table[r];
    if (f.size() != 6) throw Error(Errc::MalformedHeader, "manifest row " + std::to_string(r) + " has " + std::to_string(f.size()) + " fields", r);
    ManifestRow row{f[0], f[1], std::nullopt};
    const int kind = textio::parse_int(f[2]);
    if (kind != 0) {
      DistortionSpec spec{kind_from_id(kind), textio::parse_double(f[3]), textio::parse_u64(f[4]), textio::parse_double(f[5])};
      validate(spec);
      row.spec = spec;
    }
    if (!ids.insert(row.output_id).second) throw Error(Errc::DuplicateSourceId, "duplicate output id " + row.output_id);
    m.rows.push_back(std::move(row));
  }
  return m;
}

void write_manifest(const BenchmarkManifest& manifest, const fs::path& path) {
  textio::write_text(path, manifest_to_csv(manifest));
}

BenchmarkManifest read_manifest(const fs::path& path) { return manifest_from_csv(textio::read_text(path)); }

void run_manifest(const BenchmarkManifest& manifest, const fs::path& in_dir, const fs::path& out_dir, unsigned jobs) {
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.rows.size()) return;
      {
        std::lock_guard lock(err_mu);
        if (first_error) return;
      }
      try {
        const auto& row = manifest.rows[i];
        auto clip = media::load_bundle(in_dir / row.source_id);
        auto out = row.spec ? apply_distortion(clip, *row.spec) : clip;
        out.clip_id = row.output_id;
        out.meta.notes.push_back(row.spec ? "distortion " + std::string(kind_name(row.spec->kind)) + " level " +
                                                textio::format_double(row.spec->level) + " from " + row.source_id
                                          : "ground truth copy of " + row.source_id);
        media::save_bundle(out, out_dir / row.output_id);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, jobs);
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace peavs::distort
