#include "swpipe/error.h"

namespace swpipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kMissingAudio: return "MissingAudio";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kAdapterFailure: return "AdapterFailure";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMixedSource: return "MixedSource";
    case ErrorCode::kEmptyTranscript: return "EmptyTranscript";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kExtractionFailed: return "ExtractionFailed";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kUnknownMember: return "UnknownMember";
    case ErrorCode::kUnknownCombination: return "UnknownCombination";
    case ErrorCode::kMissingLabels: return "MissingLabels";
    case ErrorCode::kMissingUpstream: return "MissingUpstream";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace swpipe
