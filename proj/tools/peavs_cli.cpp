#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <set>

#include "peavs/analysis.hpp"
#include "peavs/datakit.hpp"
#include "peavs/distort.hpp"
#include "peavs/features.hpp"
#include "peavs/frechet.hpp"
#include "peavs/net/model.hpp"
#include "peavs/net/training.hpp"
#include "peavs/pipeline.hpp"
#include "peavs/rng.hpp"
#include "peavs/service.hpp"
#include "peavs/synth.hpp"
#include "peavs/textio.hpp"

namespace fs = std::filesystem;
using namespace peavs;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string preset = "desk";
};

int exit_code(Errc c) {
  switch (c) {
    case Errc::InvalidConfig:
    case Errc::MissingFile:
    case Errc::MalformedHeader:
    case Errc::UnsupportedEncoding:
    case Errc::LevelOutOfCatalog:
    case Errc::DuplicateSourceId:
    case Errc::UnknownExtractor:
    case Errc::CheckpointStageMismatch:
    case Errc::EmptyManifest:
    case Errc::EmptyInput: return 1;
    default: return 2;
  }
}

std::vector<distort::Kind> parse_kinds(const std::vector<int>& ids) {
  std::vector<distort::Kind> out;
  for (int k : ids) out.push_back(distort::kind_from_id(k));
  return out;
}

std::vector<int> zero_based(const std::vector<int>& levels) {
  std::vector<int> out;
  for (int l : levels) out.push_back(l - 1);
  return out;
}

std::vector<std::string> bundle_dirs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::MissingFile, dir.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<features::EmbeddingPair> load_feature_set(const fs::path& dir) {
  std::vector<features::EmbeddingPair> out;
  for (const auto& row : pipeline::read_index(dir)) out.push_back(pipeline::load_pair(dir, row));
  return out;
}

Eigen::Index total_windows(const std::vector<features::EmbeddingPair>& set) {
  Eigen::Index n = 0;
  for (const auto& p : set) n += p.audio.windows();
  return n;
}

features::ExtractorConfig extractor_for(const Globals& g, int audio_dim, int video_dim) {
  auto e = pipeline::preset(g.preset).extractor;
  if (audio_dim > 0) e.audio_dim = audio_dim;
  if (video_dim > 0) e.video_dim = video_dim;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual synchrony toolkit: distortions, Frechet metrics, learned scorer, annotation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str();
  app.add_option("--preset", g.preset, "desk|paper")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();

  std::function<void()> action;

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic source clips");
  fs::path synth_out;
  int synth_clips = 8;
  double synth_seconds = 10.0;
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--clips", synth_clips)->capture_default_str();
  synth_cmd->add_option("--seconds", synth_seconds)->capture_default_str();
  synth_cmd->callback([&] {
    action = [&] {
      synth::ClipSpec spec;
      spec.duration_seconds = synth_seconds;
      for (int i = 0; i < synth_clips; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "clip%03d", i + 1);
        media::save_bundle(synth::make_clip(id, hash_combine(g.seed, static_cast<std::uint64_t>(i)), spec), synth_out / id);
      }
      std::cout << "wrote " << synth_clips << " clips to " << synth_out << '\n';
    };
  });

  // manifest
  auto* manifest_cmd = app.add_subcommand("manifest", "Build a benchmark manifest over source clips");
  fs::path man_sources, man_out;
  std::vector<int> man_kinds, man_levels;
  manifest_cmd->add_option("--sources", man_sources)->required();
  manifest_cmd->add_option("--out", man_out)->required();
  manifest_cmd->add_option("--kinds", man_kinds)->delimiter(',');
  manifest_cmd->add_option("--levels", man_levels, "1-based level indices")->delimiter(',');
  manifest_cmd->callback([&] {
    action = [&] {
      const auto m = distort::build_benchmark_manifest(bundle_dirs(man_sources), g.seed,
                                                       {parse_kinds(man_kinds), zero_based(man_levels)});
      distort::write_manifest(m, man_out);
      std::cout << m.rows.size() << " rows\n";
    };
  });

  // distort
  auto* distort_cmd = app.add_subcommand("distort", "Apply distortions (whole manifest or a single clip)");
  fs::path dis_manifest, dis_in, dis_out, dis_clip;
  int dis_kind = 0;
  double dis_level = 0.0;
  distort_cmd->add_option("--manifest", dis_manifest);
  distort_cmd->add_option("--in", dis_in, "Directory holding the source bundles");
  distort_cmd->add_option("--clip", dis_clip, "Single source bundle");
  distort_cmd->add_option("--kind", dis_kind);
  distort_cmd->add_option("--level", dis_level);
  distort_cmd->add_option("--out", dis_out)->required();
  distort_cmd->callback([&] {
    action = [&] {
      if (!dis_manifest.empty()) {
        if (dis_in.empty()) throw Error(Errc::InvalidConfig, "--manifest needs --in");
        const auto m = distort::read_manifest(dis_manifest);
        distort::run_manifest(m, dis_in, dis_out, g.jobs);
        std::cout << "wrote " << m.rows.size() << " bundles\n";
        return;
      }
      if (dis_clip.empty() || dis_kind == 0) throw Error(Errc::InvalidConfig, "give --manifest/--in or --clip/--kind/--level");
      const auto clip = media::load_bundle(dis_clip);
      const distort::DistortionSpec spec{distort::kind_from_id(dis_kind), dis_level, g.seed, distort::kDefaultGapProbability};
      auto out = distort::apply_distortion(clip, spec);
      media::save_bundle(out, dis_out);
    };
  });

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Extract synthetic embeddings for a directory of bundles");
  fs::path ex_in, ex_out, ex_manifest;
  int ex_audio = 0, ex_video = 0;
  extract_cmd->add_option("--in", ex_in)->required();
  extract_cmd->add_option("--out", ex_out)->required();
  extract_cmd->add_option("--manifest", ex_manifest, "Provides source ids and distortion labels");
  extract_cmd->add_option("--audio-dim", ex_audio);
  extract_cmd->add_option("--video-dim", ex_video);
  extract_cmd->callback([&] {
    action = [&] {
      distort::BenchmarkManifest m;
      if (!ex_manifest.empty()) {
        m = distort::read_manifest(ex_manifest);
      } else {
        for (const auto& id : bundle_dirs(ex_in)) m.rows.push_back({id, id, std::nullopt});
      }
      const auto rows = pipeline::extract_directory(m, ex_in, ex_out, extractor_for(g, ex_audio, ex_video), g.jobs);
      std::cout << "extracted " << rows.size() << " clips\n";
    };
  });

  // favd
  auto* favd_cmd = app.add_subcommand("favd", "Frechet distance between two feature directories");
  std::string fv_variant = "favd";
  fs::path fv_eval, fv_ref;
  favd_cmd->add_option("--variant", fv_variant)->check(CLI::IsMember({"fad", "fvd", "favd"}))->capture_default_str();
  favd_cmd->add_option("--eval", fv_eval)->required();
  favd_cmd->add_option("--ref", fv_ref)->required();
  favd_cmd->callback([&] {
    action = [&] {
      const auto eval = load_feature_set(fv_eval);
      const auto ref = load_feature_set(fv_ref);
      const double d = frechet::favd_score(eval, ref, frechet::variant_from_name(fv_variant));
      std::cout << fv_variant << ' ' << textio::format_double(d) << " eval_windows " << total_windows(eval)
                << " ref_windows " << total_windows(ref) << '\n';
    };
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "FAD/FVD/FAVD over the distortion grid");
  fs::path sw_sources, sw_out;
  std::vector<int> sw_kinds, sw_levels;
  int sw_audio = 0, sw_video = 0;
  sweep_cmd->add_option("--sources", sw_sources)->required();
  sweep_cmd->add_option("--out", sw_out)->required();
  sweep_cmd->add_option("--kinds", sw_kinds)->delimiter(',');
  sweep_cmd->add_option("--levels", sw_levels)->delimiter(',');
  sweep_cmd->add_option("--audio-dim", sw_audio);
  sweep_cmd->add_option("--video-dim", sw_video);
  sweep_cmd->callback([&] {
    action = [&] {
      std::vector<media::ClipBundle> clips;
      for (const auto& id : bundle_dirs(sw_sources)) clips.push_back(media::load_bundle(sw_sources / id));
      const auto rows = frechet::distortion_sweep(clips, extractor_for(g, sw_audio, sw_video), g.seed,
                                                  {parse_kinds(sw_kinds), zero_based(sw_levels)});
      textio::write_text(sw_out, frechet::sweep_to_csv(rows));
      std::cout << rows.size() << " sweep rows\n";
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the scorer (stage 1 contrastive, stage 2 CCC)");
  int tr_stage = 1;
  fs::path tr_config, tr_data, tr_out, tr_scores, tr_init;
  bool tr_fresh = false;
  train_cmd->add_option("--stage", tr_stage)->required()->check(CLI::IsMember({1, 2}));
  train_cmd->add_option("--config", tr_config, "Run-file with [model], [train1], [train2] overrides");
  train_cmd->add_option("--data", tr_data, "Feature directory with index.csv")->required();
  train_cmd->add_option("--out", tr_out)->required();
  train_cmd->add_option("--scores", tr_scores, "Stage 2 targets: CSV video_id,score");
  train_cmd->add_option("--init", tr_init, "Stage 1 checkpoint to fine-tune");
  train_cmd->add_flag("--fresh", tr_fresh, "Stage 2 from random initialization");
  train_cmd->callback([&] {
    action = [&] {
      pipeline::RunConfig cfg = tr_config.empty() ? pipeline::RunConfig{} : pipeline::RunConfig::load(tr_config);
      if (!cfg.has("run", "preset")) cfg.set("run", "preset", g.preset);
      if (!cfg.has("run", "seed")) cfg.set("run", "seed", std::to_string(g.seed));
      const auto p = pipeline::resolve_preset(cfg);
      const auto rows = pipeline::read_index(tr_data);
      auto log = [&](const net::EpochLog& e) {
        std::cout << "epoch " << e.epoch << " lr " << textio::format_double(e.lr) << " train_loss "
                  << textio::format_double(e.train_loss) << " val_loss " << textio::format_double(e.val_loss)
                  << " val_metric " << textio::format_double(e.val_metric) << '\n';
      };
      net::TrainResult result;
      if (tr_stage == 1) {
        result = net::train_stage1(pipeline::stage1_examples(tr_data, rows), p.model, p.stage1, p.extractor.tag(), log);
      } else {
        if (tr_scores.empty()) throw Error(Errc::InvalidConfig, "stage 2 needs --scores");
        const auto examples = pipeline::stage2_examples(tr_data, rows, pipeline::read_scores(tr_scores));
        if (!tr_init.empty() && !tr_fresh) {
          result = net::train_stage2(examples, net::load_checkpoint(tr_init), p.stage2, log);
        } else {
          result = net::train_stage2(examples, p.model, p.stage2, p.extractor.tag(), log);
        }
      }
      net::save_checkpoint(result.best, tr_out);
      std::cout << "best epoch " << result.best_epoch << " saved to " << tr_out << '\n';
    };
  });

  // score
  auto* score_cmd = app.add_subcommand("score", "Score a clip bundle or a feature directory");
  fs::path sc_ckpt, sc_clip, sc_data, sc_out;
  score_cmd->add_option("--ckpt", sc_ckpt)->required();
  score_cmd->add_option("--clip", sc_clip, "Clip bundle directory");
  score_cmd->add_option("--data", sc_data, "Feature directory with index.csv");
  score_cmd->add_option("--out", sc_out, "CSV output for --data");
  score_cmd->callback([&] {
    action = [&] {
      const auto ckpt = net::load_checkpoint(sc_ckpt);
      if (!sc_clip.empty()) {
        features::ExtractorConfig e;
        e.audio_dim = ckpt.config.audio_in_dim;
        e.video_dim = ckpt.config.video_in_dim;
        if (!ckpt.extractor.empty() && ckpt.extractor != e.tag()) {
          throw Error(Errc::UnknownExtractor, "checkpoint expects " + ckpt.extractor + ", have " + e.tag());
        }
        std::cout << textio::format_double(net::predict_score(features::extract_features(media::load_bundle(sc_clip), e), ckpt)) << '\n';
        return;
      }
      if (sc_data.empty()) throw Error(Errc::InvalidConfig, "give --clip or --data");
      std::map<std::string, double> scores;
      for (const auto& r : pipeline::read_index(sc_data)) scores[r.clip_id] = net::predict_score(pipeline::load_pair(sc_data, r), ckpt);
      const std::string csv = pipeline::scores_to_csv(scores);
      if (sc_out.empty()) {
        std::cout << csv;
      } else {
        textio::write_text(sc_out, csv);
      }
    };
  });

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Correlations, agreement, bins and reports");
  analyze_cmd->require_subcommand(1);
  fs::path an_metric, an_human, an_manifest, an_ratings, an_out, an_tasks, an_scores;
  std::vector<long> an_matrix;
  auto* correlate = analyze_cmd->add_subcommand("correlate", "Set- and clip-level Pearson");
  correlate->add_option("--metric", an_metric)->required();
  correlate->add_option("--human", an_human)->required();
  correlate->add_option("--manifest", an_manifest)->required();
  correlate->add_option("--out", an_out);
  correlate->callback([&] {
    action = [&] {
      const auto clips = analysis::join_scores(pipeline::read_scores(an_metric), pipeline::read_scores(an_human),
                                               distort::read_manifest(an_manifest));
      const auto r = analysis::set_level_correlation(clips);
      if (!an_out.empty()) textio::write_text(an_out, analysis::set_level_csv(clips, r));
      std::cout << "set_pcc " << textio::format_double(r.set_pcc) << " clip_pcc " << textio::format_double(r.clip_pcc)
                << " sets " << r.n_sets << " clips " << r.n_clips << '\n';
    };
  });
  auto* alpha = analyze_cmd->add_subcommand("alpha", "Krippendorff alpha (interval) over a ratings store");
  alpha->add_option("--ratings", an_ratings)->required();
  alpha->callback([&] {
    action = [&] {
      std::map<std::tuple<std::string, int, std::string>, datakit::RatingRecord> latest;
      for (const auto& r : datakit::read_ratings(an_ratings)) {
        auto [it, fresh] = latest.try_emplace({r.task_id, static_cast<int>(r.slot), r.annotator_id}, r);
        if (!fresh && r.revision > it->second.revision) it->second = r;
      }
      std::map<std::string, std::vector<double>> units;
      for (const auto& [k, r] : latest) units[r.video_id].push_back(r.score);
      std::vector<std::vector<double>> list;
      for (auto& [id, u] : units) list.push_back(u);
      std::cout << "alpha " << textio::format_double(analysis::krippendorff_alpha(list)) << " (interval)\n";
    };
  });
  auto* bins = analyze_cmd->add_subcommand("bins", "21-bin binary synchrony evaluation");
  bins->add_option("--scores", an_scores);
  bins->add_option("--manifest", an_manifest);
  bins->add_option("--matrix", an_matrix, "tp,fn,fp,tn")->delimiter(',')->expected(4);
  bins->callback([&] {
    action = [&] {
      analysis::BinaryEval e;
      if (!an_matrix.empty()) {
        e = analysis::binary_sync_eval(analysis::ConfusionMatrix{an_matrix[0], an_matrix[1], an_matrix[2], an_matrix[3]});
      } else {
        if (an_scores.empty() || an_manifest.empty()) throw Error(Errc::InvalidConfig, "give --matrix or --scores/--manifest");
        const auto scores = pipeline::read_scores(an_scores);
        std::vector<bool> pred, truth;
        for (const auto& r : distort::read_manifest(an_manifest).rows) {
          if (r.spec && r.spec->kind != distort::Kind::AudioShift) continue;
          const auto it = scores.find(r.output_id);
          if (it == scores.end()) continue;
          pred.push_back(analysis::peavs_positive(it->second));
          truth.push_back(analysis::sync_truth(r.spec));
        }
        e = analysis::binary_sync_eval(pred, truth);
      }
      std::cout << analysis::confusion_summary(e);
    };
  });
  auto* report = analyze_cmd->add_subcommand("report", "Per-distortion means and per-kind Pearson");
  report->add_option("--metric", an_metric)->required();
  report->add_option("--human", an_human)->required();
  report->add_option("--manifest", an_manifest)->required();
  report->add_option("--out", an_out, "CSV path");
  report->callback([&] {
    action = [&] {
      const auto clips = analysis::join_scores(pipeline::read_scores(an_metric), pipeline::read_scores(an_human),
                                               distort::read_manifest(an_manifest));
      const auto rep = analysis::per_distortion_report(clips);
      if (!an_out.empty()) textio::write_text(an_out, analysis::report_csv(rep));
      std::cout << analysis::report_summary(rep);
    };
  });
  auto* absdiff = analyze_cmd->add_subcommand("absdiff", "Absolute score differences per kind pair");
  absdiff->add_option("--tasks", an_tasks)->required();
  absdiff->add_option("--ratings", an_ratings)->required();
  absdiff->add_option("--manifest", an_manifest)->required();
  absdiff->add_option("--out", an_out);
  absdiff->callback([&] {
    action = [&] {
      std::map<std::string, int> kind_of;
      for (const auto& r : distort::read_manifest(an_manifest).rows) kind_of[r.output_id] = r.spec ? static_cast<int>(r.spec->kind) : 0;
      std::map<std::pair<std::string, int>, std::pair<double, int>> sums;
      std::map<std::tuple<std::string, int, std::string>, datakit::RatingRecord> latest;
      for (const auto& r : datakit::read_ratings(an_ratings)) {
        auto [it, fresh] = latest.try_emplace({r.task_id, static_cast<int>(r.slot), r.annotator_id}, r);
        if (!fresh && r.revision > it->second.revision) it->second = r;
      }
      for (const auto& [k, r] : latest) {
        auto& s = sums[{r.task_id, static_cast<int>(r.slot)}];
        s.first += r.score;
        ++s.second;
      }
      std::vector<analysis::PairTask> tasks;
      for (const auto& t : service::read_tasks(an_tasks)) {
        const auto l = sums.find({t.task_id, 0});
        const auto r = sums.find({t.task_id, 1});
        if (l == sums.end() || r == sums.end()) continue;
        if (!kind_of.count(t.left_video) || !kind_of.count(t.right_video)) throw Error(Errc::UnknownVideoId, t.task_id);
        tasks.push_back({kind_of[t.left_video], kind_of[t.right_video], l->second.first / l->second.second,
                         r->second.first / r->second.second});
      }
      const std::string csv = analysis::abs_diff_csv(analysis::abs_diff_analysis(tasks));
      if (an_out.empty()) {
        std::cout << csv;
      } else {
        textio::write_text(an_out, csv);
      }
    };
  });

  // pairs / aggregate / filter / split
  auto* pairs_cmd = app.add_subcommand("pairs", "Sample annotation pairs into a task list");
  fs::path pr_manifest, pr_out;
  std::size_t pr_k = 100;
  pairs_cmd->add_option("--manifest", pr_manifest)->required();
  pairs_cmd->add_option("--k", pr_k)->capture_default_str();
  pairs_cmd->add_option("--out", pr_out)->required();
  pairs_cmd->callback([&] {
    action = [&] {
      const auto pairs = datakit::sample_pairs(distort::read_manifest(pr_manifest), pr_k, g.seed);
      textio::write_text(pr_out, service::tasks_to_csv(service::tasks_from_pairs(pairs)));
    };
  });
  auto* agg_cmd = app.add_subcommand("aggregate", "Aggregate a ratings store into per-video means");
  fs::path ag_ratings, ag_out;
  int ag_min = 3;
  agg_cmd->add_option("--ratings", ag_ratings)->required();
  agg_cmd->add_option("--out", ag_out)->required();
  agg_cmd->add_option("--min-ratings", ag_min)->capture_default_str();
  agg_cmd->callback([&] {
    action = [&] {
      textio::write_text(ag_out, datakit::aggregated_to_csv(datakit::aggregate_ratings(datakit::read_ratings(ag_ratings), ag_min)));
    };
  });
  auto* filter_cmd = app.add_subcommand("filter", "Apply the benchmark outlier rules");
  fs::path fl_scores, fl_manifest, fl_out;
  bool fl_merged = false;
  filter_cmd->add_option("--scores", fl_scores, "Aggregated CSV")->required();
  filter_cmd->add_option("--manifest", fl_manifest)->required();
  filter_cmd->add_option("--out", fl_out)->required();
  filter_cmd->add_flag("--merged", fl_merged, "Judge rules on merged means instead of per-task means");
  filter_cmd->callback([&] {
    action = [&] {
      const auto scores = datakit::aggregated_from_csv(textio::read_text(fl_scores));
      datakit::FilterOptions opt;
      opt.per_task = !fl_merged;
      const auto r = datakit::filter_benchmark(scores, distort::read_manifest(fl_manifest), opt);
      textio::write_text(fl_out, datakit::aggregated_to_csv(r.kept));
      for (const auto& [id, why] : r.removed) std::cout << "removed " << id << ": " << why << '\n';
    };
  });
  auto* split_cmd = app.add_subcommand("split", "Group-atomic train/dev/test split");
  fs::path sp_manifest, sp_out;
  split_cmd->add_option("--manifest", sp_manifest)->required();
  split_cmd->add_option("--out", sp_out)->required();
  split_cmd->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, std::string>> groups;
      for (const auto& r : distort::read_manifest(sp_manifest).rows) groups.emplace_back(r.output_id, r.source_id);
      textio::write_text(sp_out, datakit::splits_to_csv(datakit::grouped_split(groups, {}, g.seed)));
    };
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP service");
  fs::path sv_tasks, sv_annotators, sv_store, sv_media;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve_cmd->add_option("--tasks", sv_tasks)->required();
  serve_cmd->add_option("--annotators", sv_annotators)->required();
  serve_cmd->add_option("--store", sv_store)->required();
  serve_cmd->add_option("--media", sv_media)->required();
  serve_cmd->add_option("--host", sv_host)->capture_default_str();
  serve_cmd->add_option("--port", sv_port)->capture_default_str();
  serve_cmd->callback([&] {
    action = [&] {
      if (!fs::is_directory(sv_media)) throw Error(Errc::MissingFile, sv_media.string());
      service::AnnotationService svc(service::read_tasks(sv_tasks), service::read_annotators(sv_annotators), sv_store);
      service::HttpServer server(svc, sv_media);
      const int port = server.bind(sv_host, sv_port);
      std::cout << "listening on http://" << sv_host << ':' << port << std::endl;
      server.serve();
    };
  });

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the stages listed in a run file");
  fs::path pp_run;
  pipe_cmd->add_option("--run", pp_run)->required();
  pipe_cmd->callback([&] {
    action = [&] {
      auto cfg = pipeline::RunConfig::load(pp_run);
      if (app.get_option("--jobs")->count()) cfg.set("run", "jobs", std::to_string(g.jobs));
      if (app.get_option("--preset")->count()) cfg.set("run", "preset", g.preset);
      if (app.get_option("--seed")->count()) cfg.set("run", "seed", std::to_string(g.seed));
      pipeline::run_pipeline(cfg, std::cout);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (action) action();
  } catch (const pipeline::StageFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
