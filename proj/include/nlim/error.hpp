#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlim {

enum class ErrorCode {
  // grammar
  UnknownLexicon,
  UnknownTag,
  UnknownIntent,
  EmptyTemplate,
  NonAsciiEntry,
  MalformedSpec,
  InsufficientSource,
  // encoding
  NonAsciiChar,
  IllegalSpecialTag,
  EmptyBatch,
  OutOfRangeId,
  // numcore
  ShapeMismatch,
  AllMasked,
  NameMismatch,
  // models
  InvalidArch,
  CorpusTooSmall,
  // interpreter
  MissingSlot,
  UnresolvedEntity,
  MalformedNumber,
  // evalharness
  EmptyDataset,
  // persistence
  IncompleteModel,
  IoFailure,
  BadMagic,
  BadVersion,
  ChecksumMismatch,
  VocabMismatch,
  // service
  UnknownChart,
  AmbiguousChart,
  PayloadTooLarge,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace nlim
