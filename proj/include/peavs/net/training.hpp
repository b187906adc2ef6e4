#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peavs/error.hpp"
#include "peavs/net/model.hpp"

namespace peavs::net {

struct TrainConfig {
  Stage stage = Stage::One;
  double lr = 0.001;
  int batch_size = 128;
  int epochs = 60;
  double plateau_factor = 0.1;
  int patience = 10;
  std::uint64_t seed = 0;
  // Fraction of source groups held out for validation.
  double val_fraction = 0.2;
  // Stop once the eval-mode training metric reaches this value.
  std::optional<double> stop_at_train_metric;

  static TrainConfig defaults(Stage stage);
  void validate() const;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(const std::vector<Parameter*>& params);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Mat> m_, v_;
};

class ReduceLROnPlateau {
 public:
  ReduceLROnPlateau(double factor, int patience, bool maximize, double threshold = 1e-4);
  // Returns true when the learning rate should be multiplied by the factor.
  bool observe(double metric);
  double factor() const { return factor_; }

 private:
  double factor_;
  int patience_;
  bool maximize_;
  double threshold_;
  std::optional<double> best_;
  int bad_ = 0;
};

struct Example {
  features::EmbeddingPair clip;
  std::string source_id;
  // Stage 1: 1 aligned, 0 misaligned. Stage 2: aggregated score.
  double target = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean batch loss in train mode
  double val_loss = 0.0;    // eval mode
  // Stage 1: mean distance gap (misaligned - aligned). Stage 2: CCC.
  double val_metric = 0.0;
  double train_metric = 0.0;
};

struct TrainResult {
  Checkpoint best;
  int best_epoch = 0;
  std::vector<EpochLog> history;
  std::vector<std::string> train_sources;
  std::vector<std::string> val_sources;
  std::size_t skipped_batches = 0;
};

class TrainingAborted : public Error {
 public:
  TrainingAborted(std::string what, Checkpoint last_finite)
      : Error(Errc::NonFiniteLoss, std::move(what)), last_finite_(std::move(last_finite)) {}
  const Checkpoint& last_finite() const { return last_finite_; }

 private:
  Checkpoint last_finite_;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Splits source groups into (train, validation) sets; every example of a source lands on one side.
std::pair<std::vector<std::string>, std::vector<std::string>> split_sources(std::span<const Example> examples,
                                                                            double val_fraction, std::uint64_t seed);

struct DistanceSummary {
  double aligned = 0.0;
  double misaligned = 0.0;
};
DistanceSummary mean_distances(const Model& model, std::span<const Example> examples);

TrainResult train_stage1(std::span<const Example> examples, const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::string& extractor, const EpochCallback& on_epoch = {});

// Fresh initialization (cross-modal base ablation) or fine-tuning from a checkpoint.
TrainResult train_stage2(std::span<const Example> examples, const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const std::string& extractor, const EpochCallback& on_epoch = {});
TrainResult train_stage2(std::span<const Example> examples, const Checkpoint& init, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

}  // namespace peavs::net
