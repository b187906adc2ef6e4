#include <cmath>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/net/model.hpp"
#include "peavs/rng.hpp"

namespace peavs::net {

namespace {

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const std::vector<double>& mean, const std::vector<double>& scale) {
  if (mean.empty()) return x;
  const Eigen::Map<const Eigen::RowVectorXd> mu(mean.data(), static_cast<Eigen::Index>(mean.size()));
  const Eigen::Map<const Eigen::RowVectorXd> sd(scale.data(), static_cast<Eigen::Index>(scale.size()));
  return (x.rowwise() - mu).array().rowwise() / sd.array();
}

Parameter uniform_param(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  const std::uint64_t stream = hash_combine(seed, fnv1a(name));
  Parameter p{name, Mat(rows, cols), Mat()};
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = (2.0 * counter_uniform(stream, static_cast<std::uint64_t>(i)) - 1.0) * bound;
  }
  return p;
}

LinearParams make_linear(const std::string& name, int in, int out, std::uint64_t seed) {
  return {uniform_param(name + ".w", in, out, seed), Parameter{name + ".b", Mat::Zero(1, out), Mat()}};
}

NormParams make_norm(const std::string& name, int dim) {
  return {Parameter{name + ".gain", Mat::Ones(1, dim), Mat()}, Parameter{name + ".bias", Mat::Zero(1, dim), Mat()}};
}

AttentionLayer make_layer(const std::string& name, bool cross, const ModelConfig& cfg) {
  const int d = cfg.embed_dim;
  AttentionLayer l;
  l.cross = cross;
  l.ln_q = make_norm(name + ".ln_q", d);
  if (cross) l.ln_kv = make_norm(name + ".ln_kv", d);
  l.q = make_linear(name + ".q", d, d, cfg.init_seed);
  l.k = make_linear(name + ".k", d, d, cfg.init_seed);
  l.v = make_linear(name + ".v", d, d, cfg.init_seed);
  l.o = make_linear(name + ".o", d, d, cfg.init_seed);
  l.ln_ff = make_norm(name + ".ln_ff", d);
  l.ff1 = make_linear(name + ".ff1", d, 4 * d, cfg.init_seed);
  l.ff2 = make_linear(name + ".ff2", 4 * d, d, cfg.init_seed);
  return l;
}

Branch make_branch(const std::string& name, const ModelConfig& cfg) {
  Branch b;
  if (cfg.cross_modal) {
    for (int i = 0; i < cfg.layers; ++i) b.cross.push_back(make_layer(name + ".cross." + std::to_string(i), true, cfg));
  }
  for (int i = 0; i < cfg.effective_self_layers(); ++i) {
    b.self.push_back(make_layer(name + ".self." + std::to_string(i), false, cfg));
  }
  b.final_ln = make_norm(name + ".final_ln", cfg.embed_dim);
  return b;
}

template <typename F>
void visit_layer(AttentionLayer& l, F&& f) {
  f(l.ln_q.gain);
  f(l.ln_q.bias);
  if (l.cross) {
    f(l.ln_kv.gain);
    f(l.ln_kv.bias);
  }
  for (LinearParams* lp : {&l.q, &l.k, &l.v, &l.o}) {
    f(lp->w);
    f(lp->b);
  }
  f(l.ln_ff.gain);
  f(l.ln_ff.bias);
  f(l.ff1.w);
  f(l.ff1.b);
  f(l.ff2.w);
  f(l.ff2.b);
}

std::size_t layer_size(const AttentionLayer& l) {
  std::size_t n = 0;
  visit_layer(const_cast<AttentionLayer&>(l), [&](Parameter& p) { n += static_cast<std::size_t>(p.value.size()); });
  return n;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " must be a positive multiple of heads " + std::to_string(heads));
  }
  if (layers < 0 || (cross_modal && layers == 0)) fail("layers must be positive");
  for (double p : {attention_dropout, relu_dropout, embed_dropout, residual_dropout}) {
    if (!(p >= 0.0 && p < 1.0)) fail("dropout must lie in [0, 1)");
  }
  if (!(margin > 0.0)) fail("margin must be positive");
  if (audio_in_dim <= 0 || video_in_dim <= 0) fail("input dimensions must be positive");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) fail("conv_kernel must be odd and positive");
  for (int h : mlp_hidden) {
    if (h <= 0) fail("mlp hidden sizes must be positive");
  }
  auto check_norm = [&](const std::vector<double>& mean, const std::vector<double>& scale, int dim, const char* what) {
    if (mean.size() != scale.size() || (!mean.empty() && mean.size() != static_cast<std::size_t>(dim))) {
      fail(std::string(what) + " standardization must have " + std::to_string(dim) + " entries");
    }
    for (double v : scale) {
      if (!(v > 0.0)) fail(std::string(what) + " standardization scales must be positive");
    }
  };
  check_norm(audio_mean, audio_scale, audio_in_dim, "audio");
  check_norm(video_mean, video_scale, video_in_dim, "video");
  if (audio_mean.empty() != video_mean.empty()) fail("audio and video standardization must be set together");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"heads", c.heads},
          {"layers", c.layers},
          {"self_layers", c.self_layers},
          {"attention_dropout", c.attention_dropout},
          {"relu_dropout", c.relu_dropout},
          {"embed_dropout", c.embed_dropout},
          {"residual_dropout", c.residual_dropout},
          {"margin", c.margin},
          {"mlp_hidden", c.mlp_hidden},
          {"audio_in_dim", c.audio_in_dim},
          {"video_in_dim", c.video_in_dim},
          {"conv_kernel", c.conv_kernel},
          {"cross_modal", c.cross_modal},
          {"init_seed", c.init_seed},
          {"audio_mean", c.audio_mean},
          {"audio_scale", c.audio_scale},
          {"video_mean", c.video_mean},
          {"video_scale", c.video_scale}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("embed_dim", c.embed_dim);
  get("heads", c.heads);
  get("layers", c.layers);
  get("self_layers", c.self_layers);
  get("attention_dropout", c.attention_dropout);
  get("relu_dropout", c.relu_dropout);
  get("embed_dropout", c.embed_dropout);
  get("residual_dropout", c.residual_dropout);
  get("margin", c.margin);
  get("mlp_hidden", c.mlp_hidden);
  get("audio_in_dim", c.audio_in_dim);
  get("video_in_dim", c.video_in_dim);
  get("conv_kernel", c.conv_kernel);
  get("cross_modal", c.cross_modal);
  get("init_seed", c.init_seed);
  get("audio_mean", c.audio_mean);
  get("audio_scale", c.audio_scale);
  get("video_mean", c.video_mean);
  get("video_scale", c.video_scale);
  c.validate();
  return c;
}

void Model::set_input_standardization(std::vector<double> audio_mean, std::vector<double> audio_scale,
                                      std::vector<double> video_mean, std::vector<double> video_scale) {
  ModelConfig next = cfg_;
  next.audio_mean = std::move(audio_mean);
  next.audio_scale = std::move(audio_scale);
  next.video_mean = std::move(video_mean);
  next.video_scale = std::move(video_scale);
  next.validate();
  cfg_ = std::move(next);
}

Eigen::MatrixXd positional_encoding(Eigen::Index steps, Eigen::Index dim) {
  Eigen::MatrixXd pe(steps, dim);
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      pe(t, i) = (i % 2 == 0) ? std::sin(static_cast<double>(t) * rate) : std::cos(static_cast<double>(t) * rate);
    }
  }
  return pe;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int d = cfg_.embed_dim;
  project_audio_ = cfg_.audio_in_dim != d;
  if (project_audio_) audio_proj_ = make_linear("audio.proj", cfg_.audio_in_dim * cfg_.conv_kernel, d, cfg_.init_seed);
  video_proj_ = make_linear("video.proj", cfg_.video_in_dim * cfg_.conv_kernel, d, cfg_.init_seed);
  audio_ = make_branch("audio", cfg_);
  video_ = make_branch("video", cfg_);
  int in = 2 * d;
  for (std::size_t i = 0; i < cfg_.mlp_hidden.size(); ++i) {
    head_.push_back(make_linear("head." + std::to_string(i), in, cfg_.mlp_hidden[i], cfg_.init_seed));
    in = cfg_.mlp_hidden[i];
  }
  head_.push_back(make_linear("head." + std::to_string(cfg_.mlp_hidden.size()), in, 1, cfg_.init_seed));
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  auto add = [&](Parameter& p) { out.push_back(&p); };
  if (project_audio_) {
    add(audio_proj_.w);
    add(audio_proj_.b);
  }
  add(video_proj_.w);
  add(video_proj_.b);
  for (Branch* b : {&audio_, &video_}) {
    for (auto& l : b->cross) visit_layer(l, add);
    for (auto& l : b->self) visit_layer(l, add);
    add(b->final_ln.gain);
    add(b->final_ln.bias);
  }
  for (auto& h : head_) {
    add(h.w);
    add(h.b);
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

std::size_t Model::cross_modal_parameter_count() const {
  std::size_t n = 0;
  for (const Branch* b : {&audio_, &video_}) {
    for (const auto& l : b->cross) n += layer_size(l);
  }
  return n;
}

void Model::zero_grad() const {
  for (const Parameter* p : parameters()) p->zero_grad();
}

void Model::round_to_float() {
  for (Parameter* p : parameters()) p->value = p->value.cast<float>().cast<double>();
}

void Model::check_finite(const Graph& g, Graph::Id id, int layer_index) const {
  if (!g.value(id).allFinite()) {
    throw Error(Errc::NonFiniteActivation, "non-finite activation at layer " + std::to_string(layer_index));
  }
}

Graph::Id Model::layer(Graph& g, const AttentionLayer& l, Graph::Id x, Graph::Id kv) const {
  const Graph::Id xq = g.layer_norm(x, l.ln_q.gain, l.ln_q.bias);
  const Graph::Id xkv = l.cross ? g.layer_norm(kv, l.ln_kv.gain, l.ln_kv.bias) : xq;
  const Graph::Id q = g.linear(xq, l.q.w, l.q.b);
  const Graph::Id k = g.linear(xkv, l.k.w, l.k.b);
  const Graph::Id v = g.linear(xkv, l.v.w, l.v.b);
  Graph::Id a = g.attention(q, k, v, cfg_.heads, cfg_.attention_dropout);
  a = g.dropout(g.linear(a, l.o.w, l.o.b), cfg_.residual_dropout);
  x = g.add(x, a);
  Graph::Id f = g.layer_norm(x, l.ln_ff.gain, l.ln_ff.bias);
  f = g.dropout(g.relu(g.linear(f, l.ff1.w, l.ff1.b)), cfg_.relu_dropout);
  f = g.dropout(g.linear(f, l.ff2.w, l.ff2.b), cfg_.residual_dropout);
  return g.add(x, f);
}

Graph::Id Model::branch(Graph& g, const Branch& b, Graph::Id x, Graph::Id other, int& layer_index) const {
  for (const auto& l : b.cross) {
    x = layer(g, l, x, other);
    check_finite(g, x, layer_index++);
  }
  for (const auto& l : b.self) {
    x = layer(g, l, x, x);
    check_finite(g, x, layer_index++);
  }
  return g.mean_rows(g.layer_norm(x, b.final_ln.gain, b.final_ln.bias));
}

Model::Nodes Model::build(Graph& g, const Eigen::MatrixXd& audio, const Eigen::MatrixXd& video) const {
  if (audio.rows() != video.rows()) {
    throw Error(Errc::ShapeMismatch, std::to_string(audio.rows()) + " audio vs " + std::to_string(video.rows()) + " video windows");
  }
  if (audio.rows() < 1) throw Error(Errc::ShapeMismatch, "empty sequence");
  if (audio.cols() != cfg_.audio_in_dim || video.cols() != cfg_.video_in_dim) {
    throw Error(Errc::ShapeMismatch, "input dims (" + std::to_string(audio.cols()) + ", " + std::to_string(video.cols()) +
                                         ") vs config (" + std::to_string(cfg_.audio_in_dim) + ", " +
                                         std::to_string(cfg_.video_in_dim) + ")");
  }
  const Graph::Id pos = g.constant(positional_encoding(audio.rows(), cfg_.embed_dim));
  Graph::Id a = g.constant(standardize(audio, cfg_.audio_mean, cfg_.audio_scale));
  if (project_audio_) a = g.linear(g.unfold(a, cfg_.conv_kernel), audio_proj_.w, audio_proj_.b);
  Graph::Id v = g.linear(g.unfold(g.constant(standardize(video, cfg_.video_mean, cfg_.video_scale)), cfg_.conv_kernel),
                         video_proj_.w, video_proj_.b);
  a = g.dropout(g.add(a, pos), cfg_.embed_dropout);
  v = g.dropout(g.add(v, pos), cfg_.embed_dropout);
  check_finite(g, a, 0);
  check_finite(g, v, 0);

  int audio_layer = 1;
  int video_layer = 1;
  const Graph::Id ha = branch(g, audio_, a, v, audio_layer);
  const Graph::Id hv = branch(g, video_, v, a, video_layer);

  Graph::Id h = g.concat_cols(ha, hv);
  for (std::size_t i = 0; i < head_.size(); ++i) {
    h = g.linear(h, head_[i].w, head_[i].b);
    if (i + 1 < head_.size()) h = g.relu(h);
  }
  check_finite(g, h, audio_layer);
  return {ha, hv, h};
}

BranchOutputs Model::forward(const features::EmbeddingSequence& audio, const features::EmbeddingSequence& video,
                             Mode mode, std::uint64_t seed) const {
  Graph g(false, mode == Mode::Train, seed);
  const Nodes n = build(g, audio.rows.cast<double>(), video.rows.cast<double>());
  return {g.value(n.h_audio).row(0).transpose(), g.value(n.h_video).row(0).transpose(), g.value(n.score)(0, 0)};
}

}  // namespace peavs::net
