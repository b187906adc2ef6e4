#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "peavs/analysis.hpp"
#include "peavs/frechet.hpp"
#include "peavs/net/model.hpp"
#include "peavs/pipeline.hpp"
#include "peavs/rng.hpp"
#include "peavs/service.hpp"
#include "peavs/synth.hpp"
#include "peavs/textio.hpp"

namespace peavs::pipeline {

namespace {

template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      {
        std::lock_guard lock(mu);
        if (first) return;
      }
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < std::max(1u, jobs); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

double normal(std::uint64_t seed, std::uint64_t counter) {
  const double u1 = std::max(counter_uniform(seed, 2 * counter), 1e-300);
  const double u2 = counter_uniform(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<IndexRow> extract_directory(const distort::BenchmarkManifest& manifest, const fs::path& videos_dir,
                                        const fs::path& out_dir, const features::ExtractorConfig& extractor,
                                        unsigned jobs) {
  std::vector<const distort::ManifestRow*> present;
  for (const auto& r : manifest.rows) {
    if (fs::is_directory(videos_dir / r.output_id)) present.push_back(&r);
  }
  if (present.empty()) throw Error(Errc::EmptyManifest, "no manifest videos under " + videos_dir.string());
  fs::create_directories(out_dir);
  std::vector<IndexRow> rows(present.size());
  parallel_for(present.size(), jobs, [&](std::size_t i) {
    const auto& r = *present[i];
    const auto pair = features::extract_features(media::load_bundle(videos_dir / r.output_id), extractor);
    IndexRow row{r.output_id, r.source_id, r.spec, r.output_id + ".audio.emb", r.output_id + ".video.emb"};
    features::write_embeddings(pair.audio, out_dir / row.audio);
    features::write_embeddings(pair.video, out_dir / row.video);
    rows[i] = std::move(row);
  });
  textio::write_text(out_dir / "index.csv", index_to_csv(rows));
  return rows;
}

features::EmbeddingPair load_pair(const fs::path& data_dir, const IndexRow& row) {
  return {features::read_embeddings(data_dir / row.audio), features::read_embeddings(data_dir / row.video)};
}

std::optional<double> stage1_target(const std::optional<distort::DistortionSpec>& spec) {
  if (!spec) return 1.0;
  if (spec->kind == distort::Kind::AudioShift && !analysis::sync_truth(spec)) return 0.0;
  return std::nullopt;
}

std::vector<net::Example> stage1_examples(const fs::path& data_dir, std::span<const IndexRow> rows) {
  std::vector<net::Example> out;
  for (const auto& r : rows) {
    if (const auto target = stage1_target(r.spec)) out.push_back({load_pair(data_dir, r), r.source_id, *target});
  }
  if (out.empty()) throw Error(Errc::EmptyBatch, "no ground-truth or out-of-window audio-shift rows for stage 1");
  return out;
}

std::vector<net::Example> stage2_examples(const fs::path& data_dir, std::span<const IndexRow> rows,
                                          const std::map<std::string, double>& scores) {
  std::vector<net::Example> out;
  for (const auto& r : rows) {
    const auto it = scores.find(r.clip_id);
    if (it != scores.end()) out.push_back({load_pair(data_dir, r), r.source_id, it->second});
  }
  if (out.empty()) throw Error(Errc::MissingScore, "no indexed clip has a score");
  return out;
}

std::vector<datakit::RatingRecord> simulate_annotation(const distort::BenchmarkManifest& manifest,
                                                       std::span<const datakit::VideoPair> pairs,
                                                       const fs::path& store_path, int annotators, std::uint64_t seed) {
  std::map<std::string, std::optional<distort::DistortionSpec>> specs;
  for (const auto& r : manifest.rows) specs[r.output_id] = r.spec;
  std::vector<std::string> ids;
  char buf[16];
  for (int a = 0; a < annotators; ++a) {
    std::snprintf(buf, sizeof(buf), "r%02d", a + 1);
    ids.push_back(buf);
  }
  fs::remove(store_path);
  std::int64_t tick = 0;
  service::AnnotationService svc(service::tasks_from_pairs(pairs), ids, store_path, {}, [&tick] { return ++tick; });

  auto rate = [&](const std::string& annotator, const std::string& task, int revision, datakit::Slot slot,
                  const std::string& video) {
    const std::uint64_t who = fnv1a(annotator);
    const double bias = 0.35 * normal(hash_combine(seed, who), 0);
    const std::uint64_t key = hash_combine(hash_combine(who, fnv1a(task)), static_cast<std::uint64_t>(revision) * 2 + static_cast<std::uint64_t>(slot));
    const double noisy = synth::reference_opinion(specs.at(video)) + bias + 0.7 * normal(hash_combine(seed, key), 1);
    return static_cast<int>(std::clamp(std::lround(noisy), 1L, 5L));
  };

  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (const auto& a : ids) {
      const auto task = svc.assign_task(a);
      if (!task) continue;
      progressed = true;
      for (auto [slot, video] : {std::pair{datakit::Slot::Left, task->left_video}, std::pair{datakit::Slot::Right, task->right_video}}) {
        svc.submit_rating(a, task->task_id, slot, rate(a, task->task_id, task->revision, slot, video));
      }
    }
  }
  return svc.records();
}

void write_stage_manifest(const fs::path& dir, const std::string& stage, std::uint64_t config_hash,
                          const std::vector<fs::path>& outputs) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
  nlohmann::json j{{"stage", stage}, {"config_hash", hex}, {"outputs", nlohmann::json::array()}};
  for (const auto& p : outputs) j["outputs"].push_back(p.lexically_relative(dir).generic_string());
  textio::write_text(dir / "manifest.json", j.dump(2) + '\n');
}

const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> stages{"synth", "distort", "extract", "favd", "annotate",
                                               "train1", "train2", "score", "analyze"};
  return stages;
}

void validate(const RunConfig& cfg) {
  if (!cfg.has("run", "seed")) throw Error(Errc::InvalidConfig, "[run] seed must be set explicitly");
  cfg.get_int("run", "seed", 0);
  cfg.require("run", "out");
  const auto stages = cfg.get_list("run", "stages");
  if (stages.empty()) throw Error(Errc::InvalidConfig, "[run] stages is empty");
  std::size_t last = 0;
  for (const auto& s : stages) {
    const auto it = std::find(known_stages().begin(), known_stages().end(), s);
    if (it == known_stages().end()) throw Error(Errc::InvalidConfig, "unknown stage '" + s + "'");
    const auto pos = static_cast<std::size_t>(it - known_stages().begin());
    if (pos < last) throw Error(Errc::InvalidConfig, "stage '" + s + "' listed out of order");
    last = pos;
  }
  if (cfg.has("paths", "sources") && !fs::is_directory(cfg.get("paths", "sources", ""))) {
    throw Error(Errc::MissingFile, "sources directory " + cfg.get("paths", "sources", "") + " does not exist");
  }
  if (std::find(stages.begin(), stages.end(), "synth") == stages.end() && !cfg.has("paths", "sources")) {
    const fs::path synth_dir = fs::path(cfg.get("run", "out", "")) / "synth";
    if (std::find(stages.begin(), stages.end(), "distort") != stages.end() && !fs::is_directory(synth_dir)) {
      throw Error(Errc::MissingFile, "distort needs [paths] sources or a prior synth stage");
    }
  }
  resolve_preset(cfg);
}

void run_pipeline(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  const Preset p = resolve_preset(cfg);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 0));
  const auto jobs = static_cast<unsigned>(std::max(1L, cfg.get_int("run", "jobs", 1)));
  const fs::path out = cfg.require("run", "out");
  const std::uint64_t hash = cfg.hash();
  const fs::path sources_dir = cfg.has("paths", "sources") ? fs::path(cfg.get("paths", "sources", "")) : out / "synth";
  const fs::path distort_dir = out / "distort";
  const fs::path features_dir = out / "extract";
  const fs::path annotate_dir = out / "annotate";

  distort::GridSelection grid;
  for (const auto& k : cfg.get_list("distort", "kinds")) grid.kinds.push_back(distort::kind_from_id(textio::parse_int(k)));
  for (const auto& l : cfg.get_list("distort", "levels")) grid.level_indices.push_back(textio::parse_int(l) - 1);

  auto source_ids = [&] {
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(sources_dir)) {
      if (e.is_directory()) ids.push_back(e.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  auto split_of = [&] { return datakit::splits_from_csv(textio::read_text(annotate_dir / "splits.csv")); };

  auto stage_synth = [&] {
    const fs::path dir = out / "synth";
    std::vector<fs::path> outputs;
    for (int i = 0; i < p.clips; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "clip%03d", i + 1);
      media::save_bundle(synth::make_clip(id, hash_combine(seed, static_cast<std::uint64_t>(i))), dir / id);
      outputs.push_back(dir / id);
    }
    write_stage_manifest(dir, "synth", hash, outputs);
  };

  auto stage_distort = [&] {
    const auto manifest = distort::build_benchmark_manifest(source_ids(), seed, grid);
    fs::create_directories(distort_dir);
    distort::write_manifest(manifest, distort_dir / "manifest.csv");
    distort::run_manifest(manifest, sources_dir, distort_dir / "videos", jobs);
    write_stage_manifest(distort_dir, "distort", hash, {distort_dir / "manifest.csv", distort_dir / "videos"});
  };

  auto stage_extract = [&] {
    const auto manifest = distort::read_manifest(distort_dir / "manifest.csv");
    extract_directory(manifest, distort_dir / "videos", features_dir, p.extractor, jobs);
    write_stage_manifest(features_dir, "extract", hash, {features_dir / "index.csv"});
  };

  auto stage_favd = [&] {
    const auto rows = read_index(features_dir);
    std::vector<features::EmbeddingPair> reference;
    std::map<std::pair<int, double>, std::vector<features::EmbeddingPair>> cells;
    for (const auto& r : rows) {
      auto pair = load_pair(features_dir, r);
      if (r.spec) {
        cells[{static_cast<int>(r.spec->kind), r.spec->level}].push_back(std::move(pair));
      } else {
        reference.push_back(std::move(pair));
      }
    }
    std::vector<frechet::SweepRow> sweep;
    for (const auto& [key, eval] : cells) {
      sweep.push_back({distort::kind_from_id(key.first), key.second,
                       frechet::favd_score(eval, reference, frechet::Variant::FAD),
                       frechet::favd_score(eval, reference, frechet::Variant::FVD),
                       frechet::favd_score(eval, reference, frechet::Variant::FAVD)});
    }
    const fs::path dir = out / "favd";
    textio::write_text(dir / "favd.csv", frechet::sweep_to_csv(sweep));
    write_stage_manifest(dir, "favd", hash, {dir / "favd.csv"});
  };

  auto stage_annotate = [&] {
    const auto manifest = distort::read_manifest(distort_dir / "manifest.csv");
    const auto pairs = datakit::sample_pairs(manifest, p.pairs, hash_combine(seed, 0xA77));
    const auto tasks = service::tasks_from_pairs(pairs);
    textio::write_text(annotate_dir / "tasks.csv", service::tasks_to_csv(tasks));
    const auto annotators = static_cast<int>(cfg.get_int("annotate", "annotators", 12));
    const auto records = simulate_annotation(manifest, pairs, annotate_dir / "ratings.jsonl", annotators, seed);
    const auto aggregated = datakit::aggregate_ratings(records);
    textio::write_text(annotate_dir / "aggregated.csv", datakit::aggregated_to_csv(aggregated));
    const auto filtered = datakit::filter_benchmark(aggregated, manifest);
    std::string removed = "video_id,reason\n";
    for (const auto& [id, why] : filtered.removed) removed += textio::csv_field(id) + ',' + textio::csv_field(why) + '\n';
    textio::write_text(annotate_dir / "removed.csv", removed);
    std::map<std::string, double> human;
    for (const auto& a : filtered.kept) human[a.video_id] = a.mean_score;
    textio::write_text(annotate_dir / "human.csv", scores_to_csv(human));
    std::vector<std::pair<std::string, std::string>> groups;
    for (const auto& r : manifest.rows) groups.emplace_back(r.output_id, r.source_id);
    const auto splits = datakit::grouped_split(groups, {}, hash_combine(seed, 0x5B));
    textio::write_text(annotate_dir / "splits.csv", datakit::splits_to_csv(splits));
    write_stage_manifest(annotate_dir, "annotate", hash,
                         {annotate_dir / "tasks.csv", annotate_dir / "ratings.jsonl", annotate_dir / "aggregated.csv",
                          annotate_dir / "removed.csv", annotate_dir / "human.csv", annotate_dir / "splits.csv"});
  };

  auto training_rows = [&] {
    const auto splits = split_of();
    std::vector<IndexRow> keep;
    for (const auto& r : read_index(features_dir)) {
      const auto it = splits.find(r.clip_id);
      if (it != splits.end() && it->second != datakit::Split::Test) keep.push_back(r);
    }
    return keep;
  };

  auto history_csv = [](const net::TrainResult& r) {
    std::string s = "epoch,lr,train_loss,val_loss,val_metric,train_metric\n";
    for (const auto& e : r.history) {
      s += std::to_string(e.epoch) + ',' + textio::format_double(e.lr) + ',' + textio::format_double(e.train_loss) + ',' +
           textio::format_double(e.val_loss) + ',' + textio::format_double(e.val_metric) + ',' +
           textio::format_double(e.train_metric) + '\n';
    }
    return s;
  };

  auto stage_train1 = [&] {
    const auto rows = training_rows();
    const auto examples = stage1_examples(features_dir, rows);
    const auto result = net::train_stage1(examples, p.model, p.stage1, p.extractor.tag(), [&](const net::EpochLog& e) {
      log << "  stage1 epoch " << e.epoch << " val_loss " << textio::format_double(e.val_loss) << '\n';
    });
    const fs::path dir = out / "train1";
    net::save_checkpoint(result.best, dir / "stage1.ckpt");
    textio::write_text(dir / "history.csv", history_csv(result));
    write_stage_manifest(dir, "train1", hash, {dir / "stage1.ckpt", dir / "history.csv"});
  };

  auto stage_train2 = [&] {
    const auto rows = training_rows();
    const auto examples = stage2_examples(features_dir, rows, read_scores(annotate_dir / "human.csv"));
    const auto on_epoch = [&](const net::EpochLog& e) {
      log << "  stage2 epoch " << e.epoch << " val_ccc " << textio::format_double(e.val_metric) << '\n';
    };
    const fs::path init = out / "train1" / "stage1.ckpt";
    const auto result = cfg.get("train2", "init", "stage1") == "fresh" || !fs::exists(init)
                            ? net::train_stage2(examples, p.model, p.stage2, p.extractor.tag(), on_epoch)
                            : net::train_stage2(examples, net::load_checkpoint(init), p.stage2, on_epoch);
    const fs::path dir = out / "train2";
    net::save_checkpoint(result.best, dir / "stage2.ckpt");
    textio::write_text(dir / "history.csv", history_csv(result));
    write_stage_manifest(dir, "train2", hash, {dir / "stage2.ckpt", dir / "history.csv"});
  };

  auto stage_score = [&] {
    const auto ckpt = net::load_checkpoint(out / "train2" / "stage2.ckpt");
    const auto splits = split_of();
    const auto rows = read_index(features_dir);
    std::vector<const IndexRow*> test;
    for (const auto& r : rows) {
      const auto it = splits.find(r.clip_id);
      if (it != splits.end() && it->second == datakit::Split::Test) test.push_back(&r);
    }
    std::vector<double> values(test.size());
    parallel_for(test.size(), jobs, [&](std::size_t i) { values[i] = net::predict_score(load_pair(features_dir, *test[i]), ckpt); });
    std::map<std::string, double> scores;
    for (std::size_t i = 0; i < test.size(); ++i) scores[test[i]->clip_id] = values[i];
    const fs::path dir = out / "score";
    textio::write_text(dir / "scores.csv", scores_to_csv(scores));
    write_stage_manifest(dir, "score", hash, {dir / "scores.csv"});
  };

  auto stage_analyze = [&] {
    const auto manifest = distort::read_manifest(distort_dir / "manifest.csv");
    const auto metric = read_scores(out / "score" / "scores.csv");
    const auto human = read_scores(annotate_dir / "human.csv");
    const fs::path dir = out / "analyze";
    std::vector<fs::path> outputs;

    std::map<std::string, double> rated_metric;
    for (const auto& [id, s] : metric) {
      if (human.count(id)) rated_metric[id] = s;
    }
    std::map<std::string, double> rated_human;
    for (const auto& [id, s] : human) {
      if (rated_metric.count(id)) rated_human[id] = s;
    }
    const auto clips = analysis::join_scores(rated_metric, rated_human, manifest);
    analysis::SetLevelResult corr;
    try {
      corr = analysis::set_level_correlation(clips);
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateInput && e.code() != Errc::InsufficientData) throw;
      corr.set_pcc = corr.clip_pcc = std::numeric_limits<double>::quiet_NaN();
      log << "  correlation undefined: " << e.what() << '\n';
    }
    textio::write_text(dir / "set_level.csv", analysis::set_level_csv(clips, corr));
    const auto report = analysis::per_distortion_report(clips);
    textio::write_text(dir / "report.csv", analysis::report_csv(report));
    textio::write_text(dir / "report.txt", analysis::report_summary(report));
    outputs.insert(outputs.end(), {dir / "set_level.csv", dir / "report.csv", dir / "report.txt"});

    std::vector<bool> predicted;
    std::vector<bool> truth;
    for (const auto& r : manifest.rows) {
      if (r.spec && r.spec->kind != distort::Kind::AudioShift) continue;
      const auto it = metric.find(r.output_id);
      if (it == metric.end()) continue;
      predicted.push_back(analysis::peavs_positive(it->second));
      truth.push_back(analysis::sync_truth(r.spec));
    }
    if (!truth.empty()) {
      textio::write_text(dir / "bins.txt", analysis::confusion_summary(analysis::binary_sync_eval(predicted, truth)));
      outputs.push_back(dir / "bins.txt");
    }

    const auto records = datakit::read_ratings(annotate_dir / "ratings.jsonl");
    std::map<std::string, std::vector<double>> units;
    std::map<std::tuple<std::string, int, std::string>, const datakit::RatingRecord*> latest;
    for (const auto& r : records) {
      auto& cur = latest[{r.task_id, static_cast<int>(r.slot), r.annotator_id}];
      if (!cur || r.revision > cur->revision) cur = &r;
    }
    std::map<std::pair<std::string, int>, std::pair<double, int>> slot_sum;
    for (const auto& [key, r] : latest) {
      units[r->video_id].push_back(r->score);
      auto& s = slot_sum[{r->task_id, static_cast<int>(r->slot)}];
      s.first += r->score;
      ++s.second;
    }
    std::vector<std::vector<double>> unit_list;
    for (auto& [id, u] : units) unit_list.push_back(std::move(u));
    textio::write_text(dir / "alpha.txt", "krippendorff_alpha_interval=" +
                                              textio::format_double(analysis::krippendorff_alpha(unit_list)) + '\n');
    outputs.push_back(dir / "alpha.txt");

    std::map<std::string, int> kind_of;
    for (const auto& r : manifest.rows) kind_of[r.output_id] = r.spec ? static_cast<int>(r.spec->kind) : 0;
    std::vector<analysis::PairTask> pair_tasks;
    for (const auto& t : service::read_tasks(annotate_dir / "tasks.csv")) {
      const auto l = slot_sum.find({t.task_id, 0});
      const auto r = slot_sum.find({t.task_id, 1});
      if (l == slot_sum.end() || r == slot_sum.end()) continue;
      pair_tasks.push_back({kind_of.at(t.left_video), kind_of.at(t.right_video), l->second.first / l->second.second,
                            r->second.first / r->second.second});
    }
    textio::write_text(dir / "absdiff.csv", analysis::abs_diff_csv(analysis::abs_diff_analysis(pair_tasks)));
    outputs.push_back(dir / "absdiff.csv");
    write_stage_manifest(dir, "analyze", hash, outputs);
    log << "  set_pcc " << textio::format_double(corr.set_pcc) << " clip_pcc " << textio::format_double(corr.clip_pcc) << '\n';
  };

  const std::map<std::string, std::function<void()>> stages{
      {"synth", stage_synth},       {"distort", stage_distort}, {"extract", stage_extract},
      {"favd", stage_favd},         {"annotate", stage_annotate}, {"train1", stage_train1},
      {"train2", stage_train2},     {"score", stage_score},     {"analyze", stage_analyze}};
  for (const auto& name : cfg.get_list("run", "stages")) {
    log << "stage " << name << '\n';
    try {
      stages.at(name)();
    } catch (const Error& e) {
      throw StageFailure(name, e);
    } catch (const std::exception& e) {
      throw StageFailure(name, Error(Errc::IoFailure, e.what()));
    }
  }
}

}  // namespace peavs::pipeline
