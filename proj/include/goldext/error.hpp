#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace goldext {

enum class ErrorCode {
  kEmptyText,
  kInvalidArg,
  kIo,
  kDegenerateChapter,
  kMissingVector,
  kZeroVector,
  kInconsistentAlignment,
  kParse,
  kMissingParse,
  kParseMismatch,
  kInsufficientData,
  kEmptyRanking,
  kWrongAlignmentKind,
  kInconsistentInput,
  kFormat,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kInvalidArg: return "InvalidArg";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kDegenerateChapter: return "DegenerateChapter";
    case ErrorCode::kMissingVector: return "MissingVector";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInconsistentAlignment: return "InconsistentAlignment";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kMissingParse: return "MissingParse";
    case ErrorCode::kParseMismatch: return "ParseMismatch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kEmptyRanking: return "EmptyRanking";
    case ErrorCode::kWrongAlignmentKind: return "WrongAlignmentKind";
    case ErrorCode::kInconsistentInput: return "InconsistentInput";
    case ErrorCode::kFormat: return "FormatError";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; the
// code lets callers (and the CLI exit-code mapping) branch on the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace goldext
