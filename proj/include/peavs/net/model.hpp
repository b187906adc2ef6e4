#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "peavs/features.hpp"
#include "peavs/net/graph.hpp"

namespace peavs::net {

struct ModelConfig {
  int embed_dim = 128;
  int heads = 8;
  int layers = 3;
  // Self-attention layers after the cross-modal stack; -1 means `layers`.
  int self_layers = -1;
  double attention_dropout = 0.1;
  double relu_dropout = 0.1;
  double embed_dropout = 0.25;
  double residual_dropout = 0.1;
  double margin = 1.0;
  std::vector<int> mlp_hidden{128, 64};
  int audio_in_dim = 128;
  int video_in_dim = 1024;
  int conv_kernel = 1;
  // false drops the cross-modal layers and keeps only the self-attention branches.
  bool cross_modal = true;
  std::uint64_t init_seed = 7;
  // Per-feature input standardization (x - mean) / scale; empty vectors mean identity.
  std::vector<double> audio_mean;
  std::vector<double> audio_scale;
  std::vector<double> video_mean;
  std::vector<double> video_scale;

  bool has_input_standardization() const { return !audio_mean.empty(); }
  int effective_self_layers() const { return self_layers < 0 ? layers : self_layers; }
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

enum class Mode { Train, Eval };

struct BranchOutputs {
  Eigen::VectorXd h_audio;
  Eigen::VectorXd h_video;
  double score = 0.0;
};

struct LinearParams {
  Parameter w;
  Parameter b;
};

struct NormParams {
  Parameter gain;
  Parameter bias;
};

struct AttentionLayer {
  bool cross = false;
  NormParams ln_q;
  NormParams ln_kv;  // cross layers only
  LinearParams q, k, v, o;
  NormParams ln_ff;
  LinearParams ff1, ff2;
};

struct Branch {
  std::vector<AttentionLayer> cross;
  std::vector<AttentionLayer> self;
  NormParams final_ln;
};

class Model {
 public:
  struct Nodes {
    Graph::Id h_audio;
    Graph::Id h_video;
    Graph::Id score;
  };

  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  // Registration order is stable and defines checkpoint tensor order.
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
  std::size_t cross_modal_parameter_count() const;

  // Adds one clip to `g`. Throws ShapeMismatch or NonFiniteActivation (with layer index).
  Nodes build(Graph& g, const Eigen::MatrixXd& audio, const Eigen::MatrixXd& video) const;

  BranchOutputs forward(const features::EmbeddingSequence& audio, const features::EmbeddingSequence& video,
                        Mode mode, std::uint64_t seed = 0) const;

  void zero_grad() const;
  // Replaces the input standardization; shapes must match the input dimensions.
  void set_input_standardization(std::vector<double> audio_mean, std::vector<double> audio_scale,
                                 std::vector<double> video_mean, std::vector<double> video_scale);
  // Rounds every parameter to the nearest float32.
  void round_to_float();

 private:
  Graph::Id branch(Graph& g, const Branch& b, Graph::Id x, Graph::Id other, int& layer_index) const;
  Graph::Id layer(Graph& g, const AttentionLayer& l, Graph::Id x, Graph::Id kv) const;
  void check_finite(const Graph& g, Graph::Id id, int layer_index) const;

  ModelConfig cfg_;
  bool project_audio_ = false;
  LinearParams audio_proj_;
  LinearParams video_proj_;
  Branch audio_;
  Branch video_;
  std::vector<LinearParams> head_;
};

Eigen::MatrixXd positional_encoding(Eigen::Index steps, Eigen::Index dim);

enum class Stage { One = 1, Two = 2 };

struct Checkpoint {
  ModelConfig config;
  Stage stage = Stage::One;
  std::string extractor;
  Model model{ModelConfig{}};
};

Checkpoint make_checkpoint(const Model& model, Stage stage, std::string extractor);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Eval-mode forward clamped to [1, 5]; requires a stage-2 checkpoint.
double predict_score(const features::EmbeddingPair& clip, const Checkpoint& ckpt);

}  // namespace peavs::net
