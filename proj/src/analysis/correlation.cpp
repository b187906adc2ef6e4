#include <algorithm>
#include <cmath>
#include <numeric>

#include "peavs/analysis.hpp"

namespace peavs::analysis {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::LabelMismatch, "pearson inputs differ in length");
  if (x.size() < 2) throw Error(Errc::InsufficientData, "pearson needs at least two points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::DegenerateInput, "zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<ScoredClip> join_scores(const std::map<std::string, double>& metric, const std::map<std::string, double>& human,
                                    const distort::BenchmarkManifest& manifest) {
  std::vector<ScoredClip> out;
  for (const auto& row : manifest.rows) {
    if (!row.spec) continue;
    const auto m = metric.find(row.output_id);
    const auto h = human.find(row.output_id);
    if (m == metric.end() && h == human.end()) continue;
    if (m == metric.end() || h == human.end()) {
      throw Error(Errc::MissingScore, row.output_id + " lacks a " + (m == metric.end() ? "metric" : "human") + " score");
    }
    out.push_back({row.output_id,
                   {static_cast<int>(row.spec->kind), distort::level_index(row.spec->kind, row.spec->level) + 1},
                   m->second,
                   h->second});
  }
  return out;
}

SetLevelResult set_level_correlation(std::span<const ScoredClip> clips) {
  std::map<SetKey, std::pair<std::pair<double, double>, std::size_t>> sets;
  std::vector<double> cm;
  std::vector<double> ch;
  for (const auto& c : clips) {
    if (!std::isfinite(c.metric) || !std::isfinite(c.human)) throw Error(Errc::MissingScore, c.video_id);
    auto& s = sets[c.key];
    s.first.first += c.metric;
    s.first.second += c.human;
    ++s.second;
    cm.push_back(c.metric);
    ch.push_back(c.human);
  }
  if (sets.size() < 2) throw Error(Errc::InsufficientData, "set-level correlation needs at least two sets");
  std::vector<double> sm;
  std::vector<double> sh;
  for (const auto& [key, s] : sets) {
    sm.push_back(s.first.first / static_cast<double>(s.second));
    sh.push_back(s.first.second / static_cast<double>(s.second));
  }
  return {pearson(sm, sh), pearson(cm, ch), sets.size(), clips.size()};
}

}  // namespace peavs::analysis
