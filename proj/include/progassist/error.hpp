#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace progassist {

enum class Errc {
  kParseError,
  kSrNotFound,
  kSrAmbiguous,
  kContextMismatch,
  kUnrepresentable,
  kSpecialTokenInBody,
  kUnbalancedTokens,
  kOutOfBounds,
  kOrderViolation,
  kFormatMismatch,
  kTimeout,
  kHttpStatus,
  kMalformedResponse,
  kCassetteMiss,
  kIdenticalSnapshots,
  kUnparseableHistory,
  kNoChanges,
  kJudgeParseError,
  kInstructionParseError,
  kChatParseError,
  kSchemaError,
  kSchemaVersion,
  kCountMismatch,
  kIo,
  kOversizeItem,
  kEmptyCandidate,
  kInvalidArgument,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kParseError: return "PARSE_ERROR";
    case Errc::kSrNotFound: return "SR_NOT_FOUND";
    case Errc::kSrAmbiguous: return "SR_AMBIGUOUS";
    case Errc::kContextMismatch: return "CONTEXT_MISMATCH";
    case Errc::kUnrepresentable: return "UNREPRESENTABLE";
    case Errc::kSpecialTokenInBody: return "SPECIAL_TOKEN_IN_BODY";
    case Errc::kUnbalancedTokens: return "UNBALANCED_TOKENS";
    case Errc::kOutOfBounds: return "OUT_OF_BOUNDS";
    case Errc::kOrderViolation: return "ORDER_VIOLATION";
    case Errc::kFormatMismatch: return "FORMAT_MISMATCH";
    case Errc::kTimeout: return "TIMEOUT";
    case Errc::kHttpStatus: return "HTTP_STATUS";
    case Errc::kMalformedResponse: return "MALFORMED_RESPONSE";
    case Errc::kCassetteMiss: return "CASSETTE_MISS";
    case Errc::kIdenticalSnapshots: return "IDENTICAL_SNAPSHOTS";
    case Errc::kUnparseableHistory: return "UNPARSEABLE_HISTORY";
    case Errc::kNoChanges: return "NO_CHANGES";
    case Errc::kJudgeParseError: return "JUDGE_PARSE_ERROR";
    case Errc::kInstructionParseError: return "INSTRUCTION_PARSE_ERROR";
    case Errc::kChatParseError: return "CHAT_PARSE_ERROR";
    case Errc::kSchemaError: return "SCHEMA_ERROR";
    case Errc::kSchemaVersion: return "SCHEMA_VERSION";
    case Errc::kCountMismatch: return "COUNT_MISMATCH";
    case Errc::kIo: return "IO_ERROR";
    case Errc::kOversizeItem: return "OVERSIZE_ITEM";
    case Errc::kEmptyCandidate: return "EMPTY_CANDIDATE";
    case Errc::kInvalidArgument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

/// Every failure raised by the toolkit. `what()` is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace progassist
