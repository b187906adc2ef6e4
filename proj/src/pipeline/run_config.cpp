#include <algorithm>
#include <sstream>

#include "peavs/pipeline.hpp"
#include "peavs/rng.hpp"
#include "peavs/textio.hpp"

namespace peavs::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

// Drops a '#' comment that is not inside double quotes.
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw Error(Errc::InvalidConfig, "run file line " + std::to_string(line_no) + ": " + what);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (cfg.sections_[section].count(key)) fail("duplicate key '" + key + "'");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) { return parse(textio::read_text(path)); }

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key);
}

std::string RunConfig::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

std::string RunConfig::require(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw Error(Errc::InvalidConfig, "run file lacks [" + section + "] " + key);
  return sections_.at(section).at(key);
}

long RunConfig::get_int(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return textio::parse_int(get(section, key, ""));
  } catch (const Error&) {
    throw Error(Errc::InvalidConfig, "[" + section + "] " + key + " is not an integer");
  }
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return textio::parse_double(get(section, key, ""));
  } catch (const Error&) {
    throw Error(Errc::InvalidConfig, "[" + section + "] " + key + " is not a number");
  }
}

std::vector<std::string> RunConfig::get_list(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(section, key, ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RunConfig::set(const std::string& section, const std::string& key, std::string value) {
  sections_[section][key] = std::move(value);
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [section, keys] : sections_) {
    for (const auto& [k, v] : keys) out += section + '.' + k + '=' + v + '\n';
  }
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.stage1 = net::TrainConfig::defaults(net::Stage::One);
  p.stage2 = net::TrainConfig::defaults(net::Stage::Two);
  if (name == "paper") return p;
  if (name != "desk") throw Error(Errc::InvalidConfig, "unknown preset '" + name + "' (desk|paper)");
  p.extractor.audio_dim = 64;
  p.extractor.video_dim = 256;
  p.model.embed_dim = 32;
  p.model.mlp_hidden = {32, 16};
  p.model.audio_in_dim = p.extractor.audio_dim;
  p.model.video_in_dim = p.extractor.video_dim;
  p.stage1.batch_size = 32;
  p.stage1.epochs = 50;
  p.stage2.lr = 0.001;
  p.stage2.batch_size = 32;
  p.stage2.epochs = 15;
  p.clips = 8;
  p.pairs = 600;
  return p;
}

Preset resolve_preset(const RunConfig& cfg) {
  Preset p = preset(cfg.get("run", "preset", "desk"));
  p.clips = static_cast<int>(cfg.get_int("synth", "clips", p.clips));
  p.pairs = static_cast<std::size_t>(cfg.get_int("annotate", "pairs", static_cast<long>(p.pairs)));
  p.extractor.audio_dim = static_cast<int>(cfg.get_int("extract", "audio_dim", p.extractor.audio_dim));
  p.extractor.video_dim = static_cast<int>(cfg.get_int("extract", "video_dim", p.extractor.video_dim));
  p.model.audio_in_dim = p.extractor.audio_dim;
  p.model.video_in_dim = p.extractor.video_dim;
  p.model.embed_dim = static_cast<int>(cfg.get_int("model", "embed_dim", p.model.embed_dim));
  p.model.heads = static_cast<int>(cfg.get_int("model", "heads", p.model.heads));
  p.model.layers = static_cast<int>(cfg.get_int("model", "layers", p.model.layers));
  p.model.cross_modal = cfg.get("model", "cross_modal", "true") != "false";
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 0));
  p.model.init_seed = hash_combine(seed, 0x1417);
  for (auto [section, tc] : {std::pair{"train1", &p.stage1}, std::pair{"train2", &p.stage2}}) {
    tc->lr = cfg.get_double(section, "lr", tc->lr);
    tc->batch_size = static_cast<int>(cfg.get_int(section, "batch_size", tc->batch_size));
    tc->epochs = static_cast<int>(cfg.get_int(section, "epochs", tc->epochs));
    tc->patience = static_cast<int>(cfg.get_int(section, "patience", tc->patience));
    tc->seed = hash_combine(seed, fnv1a(section));
  }
  p.model.validate();
  p.stage1.validate();
  p.stage2.validate();
  return p;
}

std::string index_to_csv(std::span<const IndexRow> rows) {
  std::string out = "clip_id,source_id,kind,level,audio,video\n";
  for (const auto& r : rows) {
    out += textio::csv_field(r.clip_id) + ',' + textio::csv_field(r.source_id) + ',' +
           (r.spec ? std::to_string(static_cast<int>(r.spec->kind)) + ',' + textio::format_double(r.spec->level) : "0,0") +
           ',' + textio::csv_field(r.audio) + ',' + textio::csv_field(r.video) + '\n';
  }
  return out;
}

std::vector<IndexRow> index_from_csv(std::string_view text) {
  const auto table = textio::parse_csv(text);
  if (table.empty() || textio::join(table[0], ",") != "clip_id,source_id,kind,level,audio,video") {
    throw Error(Errc::MalformedHeader, "index header must be 'clip_id,source_id,kind,level,audio,video'", 0);
  }
  std::vector<IndexRow> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 6) throw Error(Errc::MalformedHeader, "index row " + std::to_string(i));
    IndexRow r{f[0], f[1], std::nullopt, f[4], f[5]};
    const int kind = textio::parse_int(f[2]);
    if (kind != 0) r.spec = distort::DistortionSpec{distort::kind_from_id(kind), textio::parse_double(f[3]), 0, distort::kDefaultGapProbability};
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<IndexRow> read_index(const fs::path& data_dir) { return index_from_csv(textio::read_text(data_dir / "index.csv")); }

std::map<std::string, double> read_scores(const fs::path& path) {
  const auto table = textio::parse_csv(textio::read_text(path));
  if (table.empty() || table[0].size() < 2 || table[0][0] != "video_id") {
    throw Error(Errc::MalformedHeader, "scores CSV must start with video_id,<score column>", 0);
  }
  std::size_t col = 1;
  for (std::size_t c = 1; c < table[0].size(); ++c) {
    if (table[0][c] == "score" || table[0][c] == "mean_score") col = c;
  }
  std::map<std::string, double> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].size() <= col) throw Error(Errc::MalformedHeader, "scores row " + std::to_string(i));
    out[table[i][0]] = textio::parse_double(table[i][col]);
  }
  return out;
}

std::string scores_to_csv(const std::map<std::string, double>& scores) {
  std::string out = "video_id,score\n";
  for (const auto& [id, s] : scores) out += textio::csv_field(id) + ',' + textio::format_double(s) + '\n';
  return out;
}

}  // namespace peavs::pipeline
