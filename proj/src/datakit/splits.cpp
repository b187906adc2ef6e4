#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "peavs/datakit.hpp"
#include "peavs/error.hpp"
#include "peavs/rng.hpp"
#include "peavs/textio.hpp"

namespace peavs::datakit {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  throw Error(Errc::MalformedHeader, "unknown split '" + std::string(name) + "'");
}

std::map<std::string, Split> grouped_split(std::span<const std::pair<std::string, std::string>> videos,
                                           const SplitRatios& ratios, std::uint64_t seed) {
  if (videos.empty()) throw Error(Errc::EmptyInput, "no videos to split");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error(Errc::InvalidConfig, "split ratios must be non-negative and sum to 1");
  }
  std::set<std::string> unique;
  for (const auto& [video, group] : videos) unique.insert(group);
  std::vector<std::string> groups(unique.begin(), unique.end());
  for (std::size_t i = groups.size(); i > 1; --i) {
    const auto j = std::min(i - 1, static_cast<std::size_t>(counter_uniform(seed, i) * static_cast<double>(i)));
    std::swap(groups[i - 1], groups[j]);
  }
  const auto g = static_cast<double>(groups.size());
  const auto n_train = std::min(groups.size(), static_cast<std::size_t>(std::llround(ratios.train * g)));
  const auto n_dev = std::min(groups.size() - n_train, static_cast<std::size_t>(std::llround(ratios.dev * g)));

  std::map<std::string, Split> by_group;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    by_group[groups[i]] = i < n_train ? Split::Train : (i < n_train + n_dev ? Split::Dev : Split::Test);
  }
  std::map<std::string, Split> out;
  for (const auto& [video, group] : videos) {
    const auto [it, fresh] = out.emplace(video, by_group[group]);
    if (!fresh && it->second != by_group[group]) {
      throw Error(Errc::InvalidConfig, "video " + video + " listed under two groups");
    }
  }
  return out;
}

std::string splits_to_csv(const std::map<std::string, Split>& splits) {
  std::string out = "video_id,split\n";
  for (const auto& [video, s] : splits) out += textio::csv_field(video) + ',' + std::string(split_name(s)) + '\n';
  return out;
}

std::map<std::string, Split> splits_from_csv(std::string_view text) {
  const auto table = textio::parse_csv(text);
  if (table.empty() || textio::join(table[0], ",") != "video_id,split") {
    throw Error(Errc::MalformedHeader, "splits header must be 'video_id,split'", 0);
  }
  std::map<std::string, Split> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].size() != 2) throw Error(Errc::MalformedHeader, "splits row " + std::to_string(i));
    out[table[i][0]] = split_from_name(table[i][1]);
  }
  return out;
}

}  // namespace peavs::datakit
