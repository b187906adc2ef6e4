#include <algorithm>
#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/media.hpp"
#include "peavs/net/model.hpp"

namespace peavs::net {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'A', 'V', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, Stage stage, std::string extractor) {
  Checkpoint c{model.config(), stage, std::move(extractor), model};
  c.model.round_to_float();
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header{{"config", to_json(ckpt.config)},
                        {"stage", static_cast<int>(ckpt.stage)},
                        {"extractor", ckpt.extractor},
                        {"tensors", nlohmann::json::array()}};
  const auto params = ckpt.model.parameters();
  for (const Parameter* p : params) header["tensors"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p->value.data()[i])));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || !std::equal(kMagic, kMagic + 8, bytes.begin())) {
    throw Error(Errc::MalformedHeader, "not a PEAVS checkpoint", 0);
  }
  if (get_u32(bytes, 8) != kVersion) throw Error(Errc::UnsupportedEncoding, "checkpoint version " + std::to_string(get_u32(bytes, 8)));
  const std::size_t header_len = get_u32(bytes, 12);
  if (16 + header_len > bytes.size()) throw Error(Errc::MalformedHeader, "truncated checkpoint header", 12);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedHeader, std::string("checkpoint header: ") + e.what(), 16);
  }
  Checkpoint c;
  c.config = model_config_from_json(header.at("config"));
  const int stage = header.at("stage").get<int>();
  if (stage != 1 && stage != 2) throw Error(Errc::MalformedHeader, "stage " + std::to_string(stage));
  c.stage = static_cast<Stage>(stage);
  c.extractor = header.value("extractor", "");
  c.model = Model(c.config);

  const auto params = c.model.parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) {
    throw Error(Errc::ShapeMismatch, "checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                                         std::to_string(params.size()));
  }
  std::size_t at = 16 + header_len;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != p.name || t.at("rows").get<Eigen::Index>() != p.value.rows() ||
        t.at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw Error(Errc::ShapeMismatch, "checkpoint tensor " + t.at("name").get<std::string>() + " does not match " + p.name);
    }
    const auto n = static_cast<std::size_t>(p.value.size());
    if (at + 4 * n > bytes.size()) throw Error(Errc::MalformedHeader, "truncated tensor " + p.name, at);
    for (std::size_t k = 0; k < n; ++k, at += 4) p.value.data()[k] = std::bit_cast<float>(get_u32(bytes, at));
  }
  if (at != bytes.size()) throw Error(Errc::MalformedHeader, "trailing bytes after tensors", at);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  media::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = media::read_file(path);
  return decode_checkpoint(bytes);
}

double predict_score(const features::EmbeddingPair& clip, const Checkpoint& ckpt) {
  if (ckpt.stage != Stage::Two) throw Error(Errc::CheckpointStageMismatch, "scoring needs a stage-2 checkpoint");
  const double s = ckpt.model.forward(clip.audio, clip.video, Mode::Eval).score;
  return std::clamp(s, 1.0, 5.0);
}

}  // namespace peavs::net
