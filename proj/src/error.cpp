#include "peavs/error.hpp"

namespace peavs {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::IoFailure: return "IoFailure";
    case Errc::LevelOutOfCatalog: return "LevelOutOfCatalog";
    case Errc::ClipTooShort: return "ClipTooShort";
    case Errc::DuplicateSourceId: return "DuplicateSourceId";
    case Errc::UnknownExtractor: return "UnknownExtractor";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientWindows: return "InsufficientWindows";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteActivation: return "NonFiniteActivation";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::CheckpointStageMismatch: return "CheckpointStageMismatch";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::InsufficientRatings: return "InsufficientRatings";
    case Errc::UnknownVideoId: return "UnknownVideoId";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::MissingScore: return "MissingScore";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::LabelMismatch: return "LabelMismatch";
    case Errc::UnknownAnnotator: return "UnknownAnnotator";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::DuplicateSubmission: return "DuplicateSubmission";
    case Errc::TaskNotAssigned: return "TaskNotAssigned";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

Error::Error(Errc code, const std::string& what, std::uint64_t byte_offset)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what + " (at byte " +
                         std::to_string(byte_offset) + ")"),
      code_(code),
      offset_(byte_offset) {}

}  // namespace peavs
