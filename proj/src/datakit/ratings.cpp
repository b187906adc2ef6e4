#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "peavs/datakit.hpp"
#include "peavs/error.hpp"
#include "peavs/textio.hpp"

namespace peavs::datakit {

std::string_view slot_name(Slot s) { return s == Slot::Left ? "left" : "right"; }

Slot slot_from_name(std::string_view name) {
  if (name == "left") return Slot::Left;
  if (name == "right") return Slot::Right;
  throw Error(Errc::InvalidConfig, "slot must be 'left' or 'right', got '" + std::string(name) + "'");
}

void validate(const RatingRecord& r) {
  if (r.score < 1 || r.score > 5) throw Error(Errc::ScoreOutOfRange, "score " + std::to_string(r.score) + " outside 1..5");
  if (r.revision < 0) throw Error(Errc::InvalidConfig, "negative revision");
  if (r.task_id.empty() || r.video_id.empty() || r.annotator_id.empty()) {
    throw Error(Errc::InvalidConfig, "rating record with empty id");
  }
}

nlohmann::json to_json(const RatingRecord& r) {
  return {{"task_id", r.task_id},       {"slot", slot_name(r.slot)}, {"video_id", r.video_id},
          {"annotator_id", r.annotator_id}, {"score", r.score},     {"timestamp", r.timestamp},
          {"revision", r.revision}};
}

RatingRecord rating_from_json(const nlohmann::json& j) {
  RatingRecord r;
  try {
    r.task_id = j.at("task_id").get<std::string>();
    r.slot = slot_from_name(j.at("slot").get<std::string>());
    r.video_id = j.at("video_id").get<std::string>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.score = j.at("score").get<int>();
    r.timestamp = j.value("timestamp", std::int64_t{0});
    r.revision = j.value("revision", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedHeader, std::string("rating record: ") + e.what());
  }
  validate(r);
  return r;
}

std::string encode_ratings(std::span<const RatingRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + '\n';
  return out;
}

std::vector<RatingRecord> decode_ratings(std::string_view jsonl) {
  std::vector<RatingRecord> out;
  std::size_t line_no = 0;
  std::size_t at = 0;
  while (at < jsonl.size()) {
    std::size_t end = jsonl.find('\n', at);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(at, end - at);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedHeader, "ratings line " + std::to_string(line_no) + ": " + e.what(), at);
      }
      out.push_back(rating_from_json(j));
    }
    at = end + 1;
  }
  return out;
}

std::vector<RatingRecord> read_ratings(const std::filesystem::path& path) {
  return decode_ratings(textio::read_text(path));
}

RatingsStore::RatingsStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void RatingsStore::append(const RatingRecord& r) {
  validate(r);
  std::lock_guard lock(mu_);
  textio::append_text(path_, to_json(r).dump() + '\n');
}

std::vector<RatingRecord> RatingsStore::load() const {
  std::lock_guard lock(mu_);
  if (!std::filesystem::exists(path_)) return {};
  return read_ratings(path_);
}

std::string_view disagreement_name(DisagreementClass c) {
  switch (c) {
    case DisagreementClass::Agreement: return "agreement";
    case DisagreementClass::Disagreement: return "disagreement";
    case DisagreementClass::QARequired: return "qa_required";
  }
  return "?";
}

namespace {

DisagreementClass disagreement_from_name(std::string_view s) {
  if (s == "agreement") return DisagreementClass::Agreement;
  if (s == "disagreement") return DisagreementClass::Disagreement;
  if (s == "qa_required") return DisagreementClass::QARequired;
  throw Error(Errc::MalformedHeader, "unknown disagreement class '" + std::string(s) + "'");
}

}  // namespace

DisagreementClass classify_disagreement(std::span<const int> scores) {
  std::set<int> distinct;
  for (int s : scores) {
    if (s < 1 || s > 5) throw Error(Errc::ScoreOutOfRange, "score " + std::to_string(s) + " outside 1..5");
    distinct.insert(s);
  }
  if (scores.size() < 2 || distinct.size() != scores.size()) return DisagreementClass::Agreement;
  return *distinct.rbegin() - *distinct.begin() >= 3 ? DisagreementClass::QARequired : DisagreementClass::Disagreement;
}

std::vector<AggregatedScore> aggregate_ratings(std::span<const RatingRecord> records, int min_ratings) {
  // (task, slot, annotator) -> latest record
  std::map<std::tuple<std::string, int, std::string>, const RatingRecord*> latest;
  for (const auto& r : records) {
    validate(r);
    auto& cur = latest[{r.task_id, static_cast<int>(r.slot), r.annotator_id}];
    if (!cur || std::tie(r.revision, r.timestamp) > std::tie(cur->revision, cur->timestamp)) cur = &r;
  }

  struct Occurrence {
    std::vector<int> scores;
  };
  std::map<std::string, std::map<std::pair<std::string, int>, Occurrence>> by_video;
  for (const auto& [key, r] : latest) by_video[r->video_id][{r->task_id, static_cast<int>(r->slot)}].scores.push_back(r->score);

  std::vector<AggregatedScore> out;
  std::vector<std::string> short_ids;
  for (const auto& [video, occurrences] : by_video) {
    AggregatedScore a;
    a.video_id = video;
    double sum = 0.0;
    std::set<std::string> annotators;
    for (const auto& [key, occ] : occurrences) {
      double task_sum = 0.0;
      for (int s : occ.scores) task_sum += s;
      sum += task_sum;
      a.n_ratings += static_cast<int>(occ.scores.size());
      a.task_means.push_back(task_sum / static_cast<double>(occ.scores.size()));
      a.disagreement = std::max(a.disagreement, classify_disagreement(occ.scores));
    }
    for (const auto& [key, r] : latest) {
      if (r->video_id == video) annotators.insert(r->annotator_id);
    }
    if (static_cast<int>(annotators.size()) < min_ratings) short_ids.push_back(video);
    a.mean_score = sum / a.n_ratings;
    out.push_back(std::move(a));
  }
  if (!short_ids.empty()) {
    throw Error(Errc::InsufficientRatings, "fewer than " + std::to_string(min_ratings) +
                                               " distinct annotators for: " + textio::join(short_ids, " "));
  }
  return out;
}

std::string aggregated_to_csv(std::span<const AggregatedScore> scores) {
  std::string out = "video_id,mean_score,n_ratings,disagreement,task_means\n";
  for (const auto& a : scores) {
    std::vector<std::string> tm;
    for (double m : a.task_means) tm.push_back(textio::format_double(m));
    out += textio::csv_field(a.video_id) + ',' + textio::format_double(a.mean_score) + ',' + std::to_string(a.n_ratings) +
           ',' + std::string(disagreement_name(a.disagreement)) + ',' + textio::join(tm, ";") + '\n';
  }
  return out;
}

std::vector<AggregatedScore> aggregated_from_csv(std::string_view text) {
  const auto table = textio::parse_csv(text);
  if (table.empty() || textio::join(table[0], ",") != "video_id,mean_score,n_ratings,disagreement,task_means") {
    throw Error(Errc::MalformedHeader, "aggregated scores header", 0);
  }
  std::vector<AggregatedScore> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 5) throw Error(Errc::MalformedHeader, "aggregated scores row " + std::to_string(i));
    AggregatedScore a{f[0], textio::parse_double(f[1]), textio::parse_int(f[2]), disagreement_from_name(f[3]), {}};
    std::string_view rest = f[4];
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      a.task_means.push_back(textio::parse_double(rest.substr(0, semi)));
      rest = semi == std::string_view::npos ? std::string_view() : rest.substr(semi + 1);
    }
    out.push_back(std::move(a));
  }
  return out;
}

FilterResult filter_benchmark(std::span<const AggregatedScore> scores, const distort::BenchmarkManifest& manifest,
                              const FilterOptions& options) {
  std::map<std::string, const distort::ManifestRow*> rows;
  for (const auto& r : manifest.rows) rows[r.output_id] = &r;
  std::map<std::string, const AggregatedScore*> by_id;
  for (const auto& s : scores) {
    if (!rows.count(s.video_id)) throw Error(Errc::UnknownVideoId, s.video_id);
    by_id[s.video_id] = &s;
  }
  auto judged = [&](const AggregatedScore& s, auto pred) {
    if (!options.per_task || s.task_means.empty()) return pred(s.mean_score);
    return std::any_of(s.task_means.begin(), s.task_means.end(), pred);
  };

  std::set<std::string> bad_sources;
  for (const auto& s : scores) {
    const auto* row = rows[s.video_id];
    if (row->is_ground_truth() && judged(s, [&](double m) { return m <= options.gt_threshold; })) {
      bad_sources.insert(row->source_id);
    }
  }

  FilterResult out;
  for (const auto& s : scores) {
    const auto* row = rows[s.video_id];
    if (bad_sources.count(row->source_id)) {
      out.removed.emplace_back(s.video_id, "ground truth of " + row->source_id + " rated at or below " +
                                               textio::format_double(options.gt_threshold));
    } else if (row->spec && row->spec->level == distort::max_level(row->spec->kind) &&
               judged(s, [](double m) { return m >= 5.0; })) {
      out.removed.emplace_back(s.video_id, "maximum-level distortion rated 5");
    } else {
      out.kept.push_back(s);
    }
  }
  return out;
}

}  // namespace peavs::datakit
