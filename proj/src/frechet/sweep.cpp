#include "peavs/frechet.hpp"
#include "peavs/textio.hpp"

namespace peavs::frechet {

std::vector<SweepRow> distortion_sweep(std::span<const media::ClipBundle> sources,
                                       const features::ExtractorConfig& extractor, std::uint64_t seed,
                                       const distort::GridSelection& grid, double window_seconds) {
  std::vector<features::EmbeddingPair> reference;
  std::vector<std::string> ids;
  for (const auto& clip : sources) {
    reference.push_back(features::extract_features(clip, extractor, window_seconds));
    ids.push_back(clip.clip_id);
  }
  const auto manifest = distort::build_benchmark_manifest(ids, seed, grid);

  std::vector<SweepRow> out;
  // Rows are grouped by source; regroup by (kind, level).
  const std::size_t cells = manifest.rows.size() / sources.size() - 1;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::vector<features::EmbeddingPair> eval;
    distort::DistortionSpec spec;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const auto& row = manifest.rows[s * (cells + 1) + 1 + cell];
      spec = *row.spec;
      eval.push_back(features::extract_features(distort::apply_distortion(sources[s], spec), extractor, window_seconds));
    }
    out.push_back({spec.kind, spec.level, favd_score(eval, reference, Variant::FAD),
                   favd_score(eval, reference, Variant::FVD), favd_score(eval, reference, Variant::FAVD)});
  }
  return out;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string out = "kind,level,fad,fvd,favd\n";
  for (const auto& r : rows) {
    out += std::to_string(static_cast<int>(r.kind)) + ',' + textio::format_double(r.level) + ',' +
           textio::format_double(r.fad) + ',' + textio::format_double(r.fvd) + ',' + textio::format_double(r.favd) + '\n';
  }
  return out;
}

}  // namespace peavs::frechet
