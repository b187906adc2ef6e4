#include <cstring>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/features.hpp"

namespace peavs::features {

using nlohmann::json;

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSequence& seq) {
  const json header = {
      {"clip_id", seq.clip_id},
      {"modality", modality_name(seq.modality)},
      {"N", seq.windows()},
      {"D", seq.dim()},
      {"window_seconds", seq.window_seconds},
      {"extractor", seq.extractor},
  };
  const std::string line = header.dump() + "\n";
  std::vector<std::uint8_t> out(line.begin(), line.end());
  const std::size_t values = static_cast<std::size_t>(seq.rows.size());
  out.reserve(out.size() + 4 * values);
  const float* data = seq.rows.data();
  for (std::size_t i = 0; i < values; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

EmbeddingSequence decode_embeddings(std::span<const std::uint8_t> bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw Error(Errc::MalformedHeader, "embedding header line is unterminated", 0);
  json header;
  try {
    header = json::parse(bytes.begin(), nl);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedHeader, "embedding header: " + std::string(e.what()), e.byte);
  }
  EmbeddingSequence seq;
  std::int64_t n = 0;
  std::int64_t d = 0;
  try {
    seq.clip_id = header.at("clip_id").get<std::string>();
    seq.modality = modality_from_name(header.at("modality").get<std::string>());
    n = header.at("N").get<std::int64_t>();
    d = header.at("D").get<std::int64_t>();
    seq.window_seconds = header.at("window_seconds").get<double>();
    seq.extractor = header.value("extractor", "");
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedHeader, "embedding header: " + std::string(e.what()), 0);
  }
  if (n < 0 || d < 0) throw Error(Errc::MalformedHeader, "negative embedding shape", 0);
  const std::size_t payload_at = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t expected = static_cast<std::size_t>(n) * static_cast<std::size_t>(d) * 4;
  const std::size_t actual = bytes.size() - payload_at;
  if (actual != expected) {
    throw Error(Errc::DimensionMismatch, "header declares " + std::to_string(n) + "x" + std::to_string(d) + " (" +
                                             std::to_string(expected) + " bytes), payload has " + std::to_string(actual));
  }
  seq.rows.resize(n, d);
  float* data = seq.rows.data();
  for (std::size_t i = 0; i < expected / 4; ++i) {
    const std::uint8_t* p = bytes.data() + payload_at + 4 * i;
    const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                               (std::uint32_t{p[3]} << 24);
    std::memcpy(&data[i], &bits, 4);
  }
  if (!seq.rows.allFinite()) throw Error(Errc::MalformedHeader, "embedding payload has non-finite values", payload_at);
  return seq;
}

void write_embeddings(const EmbeddingSequence& seq, const std::filesystem::path& path) {
  media::write_file(path, encode_embeddings(seq));
}

EmbeddingSequence read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(media::read_file(path));
}

}  // namespace peavs::features
