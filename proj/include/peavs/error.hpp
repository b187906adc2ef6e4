#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace peavs {

enum class Errc {
  MissingFile,
  MalformedHeader,
  UnsupportedEncoding,
  IoFailure,
  LevelOutOfCatalog,
  ClipTooShort,
  DuplicateSourceId,
  UnknownExtractor,
  DimensionMismatch,
  InsufficientWindows,
  NumericalFailure,
  ShapeMismatch,
  NonFiniteActivation,
  NonFiniteLoss,
  EmptyBatch,
  DegenerateBatch,
  CheckpointStageMismatch,
  EmptyManifest,
  InsufficientRatings,
  UnknownVideoId,
  EmptyInput,
  DegenerateInput,
  MissingScore,
  InsufficientData,
  LabelMismatch,
  UnknownAnnotator,
  UnknownTask,
  ScoreOutOfRange,
  DuplicateSubmission,
  TaskNotAssigned,
  InvalidConfig,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Error(Errc code, const std::string& what, std::uint64_t byte_offset);

  Errc code() const noexcept { return code_; }
  // Set for parse failures.
  std::optional<std::uint64_t> byte_offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace peavs
