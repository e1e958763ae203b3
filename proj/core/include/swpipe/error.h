#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swpipe {

enum class ErrorCode {
  kMalformedManifest,
  kMissingAudio,
  kInvalidParams,
  kAdapterFailure,
  kOutOfRange,
  kDimensionMismatch,
  kEmptyInput,
  kMixedSource,
  kEmptyTranscript,
  kCacheCorrupt,
  kParseError,
  kExtractionFailed,
  kDegenerateLabels,
  kNonFiniteLoss,
  kTooFewSamples,
  kLengthMismatch,
  kUnknownMember,
  kUnknownCombination,
  kMissingLabels,
  kMissingUpstream,
  kConfigInvalid,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace swpipe
