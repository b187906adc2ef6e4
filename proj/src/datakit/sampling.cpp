#include <map>

#include "peavs/datakit.hpp"
#include "peavs/error.hpp"
#include "peavs/rng.hpp"

namespace peavs::datakit {

std::vector<VideoPair> sample_pairs(const distort::BenchmarkManifest& manifest, std::size_t k, std::uint64_t seed) {
  if (manifest.rows.empty()) throw Error(Errc::EmptyManifest, "no videos to sample");
  if (k < 1) throw Error(Errc::InvalidConfig, "pair count must be at least 1");

  // Cell key (0, 0) is ground truth.
  std::map<std::pair<int, double>, std::vector<const std::string*>> cells;
  for (const auto& r : manifest.rows) {
    const auto key = r.spec ? std::pair{static_cast<int>(r.spec->kind), r.spec->level} : std::pair{0, 0.0};
    cells[key].push_back(&r.output_id);
  }
  std::vector<const std::vector<const std::string*>*> cell_list;
  for (const auto& [key, ids] : cells) cell_list.push_back(&ids);
  if (manifest.rows.size() < 2) throw Error(Errc::EmptyManifest, "pairs need at least two videos");

  std::uint64_t counter = 0;
  auto pick = [&](std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(counter_uniform(seed, counter++) * static_cast<double>(n)));
  };
  auto draw = [&]() -> const std::string& {
    const auto& cell = *cell_list[pick(cell_list.size())];
    return *cell[pick(cell.size())];
  };

  std::vector<VideoPair> out;
  out.reserve(k);
  while (out.size() < k) {
    const std::string& left = draw();
    const std::string& right = draw();
    if (left != right) out.emplace_back(left, right);
  }
  return out;
}

}  // namespace peavs::datakit
