#include "nlim/error.hpp"

namespace nlim {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLexicon: return "UnknownLexicon";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::UnknownIntent: return "UnknownIntent";
    case ErrorCode::EmptyTemplate: return "EmptyTemplate";
    case ErrorCode::NonAsciiEntry: return "NonAsciiEntry";
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::InsufficientSource: return "InsufficientSource";
    case ErrorCode::NonAsciiChar: return "NonAsciiChar";
    case ErrorCode::IllegalSpecialTag: return "IllegalSpecialTag";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::OutOfRangeId: return "OutOfRangeId";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::NameMismatch: return "NameMismatch";
    case ErrorCode::InvalidArch: return "InvalidArch";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::UnresolvedEntity: return "UnresolvedEntity";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IncompleteModel: return "IncompleteModel";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::UnknownChart: return "UnknownChart";
    case ErrorCode::AmbiguousChart: return "AmbiguousChart";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
  }
  return "Unknown";
}

}  // namespace nlim
