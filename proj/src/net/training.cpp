#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "peavs/net/losses.hpp"
#include "peavs/net/training.hpp"
#include "peavs/rng.hpp"

namespace peavs::net {

namespace {

struct ClipInput {
  Eigen::MatrixXd audio;
  Eigen::MatrixXd video;
  double target;
};

std::vector<ClipInput> to_inputs(std::span<const Example> examples, const std::vector<std::size_t>& idx) {
  std::vector<ClipInput> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto& e = examples[i];
    out.push_back({e.clip.audio.rows.cast<double>(), e.clip.video.rows.cast<double>(), e.target});
  }
  return out;
}

void shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(counter_uniform(seed, i) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, int batch_size, std::uint64_t seed) {
  const std::size_t n = order.size();
  shuffle(order, seed);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, at + static_cast<std::size_t>(batch_size))));
  }
  // A lone trailing example has no batch variance; fold it into the previous batch.
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

// Per-feature mean and standard deviation over every window of the training clips.
void fit_input_standardization(Model& model, const std::vector<ClipInput>& train) {
  auto fit = [&](auto pick) {
    const Eigen::Index dim = pick(train.front()).cols();
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(dim);
    Eigen::ArrayXd sq = Eigen::ArrayXd::Zero(dim);
    double n = 0.0;
    for (const auto& c : train) {
      const Eigen::MatrixXd& x = pick(c);
      sum += x.colwise().sum().transpose().array();
      sq += x.array().square().colwise().sum().transpose();
      n += static_cast<double>(x.rows());
    }
    const Eigen::ArrayXd mean = sum / n;
    const Eigen::ArrayXd sd = (sq / n - mean.square()).max(0.0).sqrt();
    std::vector<double> m(mean.data(), mean.data() + dim);
    std::vector<double> s(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) s[static_cast<std::size_t>(i)] = sd(i) > 1e-6 ? sd(i) : 1.0;
    return std::pair{m, s};
  };
  auto [am, as] = fit([](const ClipInput& c) -> const Eigen::MatrixXd& { return c.audio; });
  auto [vm, vs] = fit([](const ClipInput& c) -> const Eigen::MatrixXd& { return c.video; });
  model.set_input_standardization(std::move(am), std::move(as), std::move(vm), std::move(vs));
}

// Stage-1 epochs repeat the minority class so both labels contribute equally.
std::vector<std::size_t> balanced_indices(const std::vector<ClipInput>& train, std::uint64_t seed) {
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < train.size(); ++i) cls[train[i].target > 0.5 ? 1 : 0].push_back(i);
  std::vector<std::size_t> out;
  if (cls[0].empty() || cls[1].empty()) {
    out.resize(train.size());
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  const std::size_t n = std::max(cls[0].size(), cls[1].size());
  for (int c = 0; c < 2; ++c) {
    auto pool = cls[c];
    shuffle(pool, hash_combine(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t k = 0; k < n; ++k) out.push_back(pool[k % pool.size()]);
  }
  return out;
}

struct EvalStats {
  double loss = 0.0;
  double metric = 0.0;
};

EvalStats eval_stage1(const Model& model, const std::vector<ClipInput>& data) {
  if (data.empty()) return {};
  std::vector<double> d;
  std::vector<int> y;
  double sum[2] = {0, 0};
  int cnt[2] = {0, 0};
  for (const auto& c : data) {
    Graph g(false, false);
    const auto n = model.build(g, c.audio, c.video);
    d.push_back(g.value(g.l2_distance(n.h_audio, n.h_video))(0, 0));
    y.push_back(c.target > 0.5 ? 1 : 0);
    sum[y.back()] += d.back();
    ++cnt[y.back()];
  }
  EvalStats s;
  if (cnt[0] > 0 && cnt[1] > 0) {
    // Same class weighting as the balanced training epochs.
    for (int c = 0; c < 2; ++c) {
      std::vector<double> dc;
      std::vector<int> yc;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (y[i] == c) {
          dc.push_back(d[i]);
          yc.push_back(c);
        }
      }
      s.loss += 0.5 * contrastive_loss(dc, yc, model.config().margin).value;
    }
    s.metric = sum[0] / cnt[0] - sum[1] / cnt[1];
  } else {
    s.loss = contrastive_loss(d, y, model.config().margin).value;
  }
  return s;
}

EvalStats eval_stage2(const Model& model, const std::vector<ClipInput>& data) {
  if (data.size() < 2) return {};
  std::vector<double> truth;
  std::vector<double> pred;
  for (const auto& c : data) {
    Graph g(false, false);
    pred.push_back(g.value(model.build(g, c.audio, c.video).score)(0, 0));
    truth.push_back(c.target);
  }
  const double r = ccc(truth, pred);
  return {1.0 - r, r};
}

TrainResult run(std::span<const Example> examples, Model model, const TrainConfig& cfg, const std::string& extractor,
                const EpochCallback& on_epoch) {
  cfg.validate();
  if (examples.empty()) throw Error(Errc::EmptyBatch, "no training examples");
  const bool stage1 = cfg.stage == Stage::One;

  TrainResult result;
  std::tie(result.train_sources, result.val_sources) = split_sources(examples, cfg.val_fraction, cfg.seed);
  const std::set<std::string> val_set(result.val_sources.begin(), result.val_sources.end());
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < examples.size(); ++i) (val_set.count(examples[i].source_id) ? val_idx : train_idx).push_back(i);
  const auto train = to_inputs(examples, train_idx);
  const auto val = to_inputs(examples, val_idx);

  if (stage1) {
    for (const auto& c : train) {
      if (c.target != 0.0 && c.target != 1.0) throw Error(Errc::LabelMismatch, "stage-1 labels must be 0 or 1");
    }
  } else {
    if (train.size() < 2) throw Error(Errc::EmptyBatch, "stage 2 needs at least two training clips");
    const bool constant = std::all_of(train.begin(), train.end(), [&](const ClipInput& c) { return c.target == train[0].target; });
    if (constant) throw Error(Errc::DegenerateBatch, "training targets are constant");
  }

  if (!model.config().has_input_standardization() && !train.empty()) fit_input_standardization(model, train);

  Adam adam(cfg.lr);
  ReduceLROnPlateau plateau(cfg.plateau_factor, cfg.patience, !stage1);
  const auto evaluate = [&](const std::vector<ClipInput>& data) {
    return stage1 ? eval_stage1(model, data) : eval_stage2(model, data);
  };
  const bool has_val = stage1 ? !val.empty() : val.size() >= 2;
  std::optional<double> best_score;
  result.best = make_checkpoint(model, cfg.stage, extractor);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    int loss_count = 0;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    if (stage1) order = balanced_indices(train, hash_combine(epoch_seed, 0xBA1));
    for (const auto& batch : make_batches(std::move(order), cfg.batch_size, epoch_seed)) {
      if (!stage1) {
        const double t0 = train[batch[0]].target;
        if (std::all_of(batch.begin(), batch.end(), [&](std::size_t i) { return train[i].target == t0; })) {
          ++result.skipped_batches;
          continue;
        }
      }
      model.zero_grad();
      Graph g(true, true, hash_combine(epoch_seed, batch[0] + 1));
      std::vector<Graph::Id> outs;
      std::vector<double> values;
      for (std::size_t i : batch) {
        const auto n = model.build(g, train[i].audio, train[i].video);
        outs.push_back(stage1 ? g.l2_distance(n.h_audio, n.h_video) : n.score);
        values.push_back(g.value(outs.back())(0, 0));
      }
      LossWithGrad loss;
      if (stage1) {
        std::vector<int> labels;
        for (std::size_t i : batch) labels.push_back(train[i].target > 0.5 ? 1 : 0);
        loss = contrastive_loss(values, labels, model.config().margin);
      } else {
        std::vector<double> truth;
        for (std::size_t i : batch) truth.push_back(train[i].target);
        loss = ccc_loss(truth, values);
      }
      if (!std::isfinite(loss.value)) {
        throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch), result.best);
      }
      for (std::size_t k = 0; k < outs.size(); ++k) g.seed_grad(outs[k], Mat::Constant(1, 1, loss.grad[k]));
      g.backward();
      adam.step(model.parameters());
      loss_sum += loss.value;
      ++loss_count;
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = adam.lr();
    log.train_loss = loss_count ? loss_sum / loss_count : 0.0;
    const EvalStats tr = evaluate(train);
    log.train_metric = tr.metric;
    const EvalStats va = has_val ? evaluate(val) : tr;
    log.val_loss = va.loss;
    log.val_metric = va.metric;
    if (!std::isfinite(log.val_loss) || !std::isfinite(tr.loss)) {
      throw TrainingAborted("non-finite evaluation loss at epoch " + std::to_string(epoch), result.best);
    }
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    // Stage 1 keeps the lowest validation loss, stage 2 the highest validation CCC.
    const double score = stage1 ? -va.loss : va.metric;
    if (!best_score || score > *best_score) {
      best_score = score;
      result.best = make_checkpoint(model, cfg.stage, extractor);
      result.best_epoch = epoch;
    }
    if (plateau.observe(stage1 ? va.loss : va.metric)) adam.set_lr(adam.lr() * plateau.factor());
    if (cfg.stop_at_train_metric && tr.metric >= *cfg.stop_at_train_metric) break;
  }
  return result;
}

}  // namespace

TrainConfig TrainConfig::defaults(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  if (stage == Stage::Two) {
    c.lr = 0.0001;
    c.batch_size = 64;
    c.epochs = 20;
    c.patience = 3;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw Error(Errc::InvalidConfig, "lr must be non-negative");
  if (batch_size < 2) throw Error(Errc::InvalidConfig, "batch_size must be at least 2");
  if (epochs < 1) throw Error(Errc::InvalidConfig, "epochs must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw Error(Errc::InvalidConfig, "plateau factor must lie in (0, 1)");
  if (patience < 0) throw Error(Errc::InvalidConfig, "patience must be non-negative");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw Error(Errc::InvalidConfig, "val_fraction must lie in [0, 1)");
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_sources(std::span<const Example> examples,
                                                                            double val_fraction, std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& e : examples) unique.insert(e.source_id);
  std::vector<std::string> sources(unique.begin(), unique.end());
  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, hash_combine(seed, 0x5B117));
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(sources.size())));
  if (val_fraction > 0.0 && sources.size() > 1) n_val = std::clamp<std::size_t>(n_val, 1, sources.size() - 1);
  std::vector<std::string> train;
  std::vector<std::string> val;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_val ? val : train).push_back(sources[order[k]]);
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

DistanceSummary mean_distances(const Model& model, std::span<const Example> examples) {
  DistanceSummary s;
  int n[2] = {0, 0};
  for (const auto& e : examples) {
    const auto out = model.forward(e.clip.audio, e.clip.video, Mode::Eval);
    const double d = (out.h_audio - out.h_video).norm();
    if (e.target > 0.5) {
      s.aligned += d;
      ++n[1];
    } else {
      s.misaligned += d;
      ++n[0];
    }
  }
  if (n[1]) s.aligned /= n[1];
  if (n[0]) s.misaligned /= n[0];
  return s;
}

TrainResult train_stage1(std::span<const Example> examples, const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::string& extractor, const EpochCallback& on_epoch) {
  if (cfg.stage != Stage::One) throw Error(Errc::InvalidConfig, "train_stage1 needs a stage-1 config");
  return run(examples, Model(model_cfg), cfg, extractor, on_epoch);
}

TrainResult train_stage2(std::span<const Example> examples, const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::string& extractor, const EpochCallback& on_epoch) {
  if (cfg.stage != Stage::Two) throw Error(Errc::InvalidConfig, "train_stage2 needs a stage-2 config");
  return run(examples, Model(model_cfg), cfg, extractor, on_epoch);
}

TrainResult train_stage2(std::span<const Example> examples, const Checkpoint& init, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  if (cfg.stage != Stage::Two) throw Error(Errc::InvalidConfig, "train_stage2 needs a stage-2 config");
  if (init.stage != Stage::One) throw Error(Errc::CheckpointStageMismatch, "fine-tuning starts from a stage-1 checkpoint");
  return run(examples, init.model, cfg, init.extractor, on_epoch);
}

}  // namespace peavs::net
