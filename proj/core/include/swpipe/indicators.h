#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/encoders.h"

namespace swpipe::indicators {

// The five interpretable suicide-risk indicators, in feature-row order.
enum class IndicatorKind { kSelfHarm, kPressure, kSocialSupport, kUnhealthyOutlets, kExercise };

inline constexpr std::size_t kIndicatorCount = 5;
inline constexpr std::array<IndicatorKind, kIndicatorCount> kAllIndicators = {
    IndicatorKind::kSelfHarm, IndicatorKind::kPressure, IndicatorKind::kSocialSupport,
    IndicatorKind::kUnhealthyOutlets, IndicatorKind::kExercise};

// Name as it appears in the prompt and in responses, e.g. "Self-harm Behavior".
std::string_view display_name(IndicatorKind kind);
// Short identifier for documents and CLIs, e.g. "self_harm".
std::string_view key_name(IndicatorKind kind);
// Definition paragraph from the built-in prompt template.
std::string_view definition(IndicatorKind kind);

struct IndicatorVector {
  std::array<int, kIndicatorCount> flags{};
  std::array<std::vector<std::string>, kIndicatorCount> evidence;
  std::string prompt_version;
  std::string model_id;

  int flag(IndicatorKind kind) const { return flags[static_cast<std::size_t>(kind)]; }
  const std::vector<std::string>& quotes(IndicatorKind kind) const {
    return evidence[static_cast<std::size_t>(kind)];
  }
  bool operator==(const IndicatorVector&) const = default;
};

// flag 1 <=> 1..3 quotes, flag 0 <=> none; each quote non-blank and free of
// line breaks and double-quote delimiters. Throws ParseError otherwise.
void check_invariants(const IndicatorVector& v);

// Prompt template with exactly one "{transcript}" placeholder. The version is
// derived from a hash of the template bytes.
class PromptTemplate {
 public:
  static const PromptTemplate& builtin();
  static PromptTemplate from_text(std::string text);
  static PromptTemplate from_file(const std::filesystem::path& path);

  const std::string& text() const { return text_; }
  const std::string& version() const { return version_; }
  std::string_view prefix() const;
  std::string_view suffix() const;

  // Single substitution; the transcript is inserted verbatim and never
  // re-scanned for placeholders.
  std::string render(std::string_view transcript) const;

 private:
  PromptTemplate(std::string text);

  std::string text_;
  std::string version_;
  std::size_t placeholder_at_ = 0;
};

inline constexpr std::string_view kTranscriptPlaceholder = "{transcript}";

std::string build_prompt(std::string_view transcript,
                         const PromptTemplate& tmpl = PromptTemplate::builtin());

// Collapses whitespace runs (including U+3000) to one space and trims.
std::string normalize_transcript(std::string_view text);

// Strict line parser for
//   <Indicator Name>: <0|1> ["quote", "quote"]
// Blank lines are ignored; any other text is a ParseError, as are missing or
// repeated indicators, flags other than 0/1, and flag/evidence contradictions.
// Straight and curly double quotes are both accepted as delimiters.
IndicatorVector parse_response(std::string_view raw);

// Canonical response text; parse_response(render_response(v)) == v for every
// valid v (ignoring prompt_version/model_id).
std::string render_response(const IndicatorVector& v);

// [SelfHarm, Pressure, SocialSupport, UnhealthyOutlets, Exercise]
std::array<int, kIndicatorCount> to_feature_row(const IndicatorVector& v);

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 2048;
  // Optional per-attempt nonce for adapters that need a cache-busting field
  // on retries. Never part of the response-cache key.
  std::optional<std::uint64_t> nonce;
};

class LlmAdapter {
 public:
  virtual ~LlmAdapter() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
};

// Response cache: one JSON document per key holding the raw response and the
// metadata (model, prompt version, decoding params, transcript hash).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root);

  static std::string key(std::string_view transcript_sha256, std::string_view prompt_version,
                         std::string_view model_id, const DecodingParams& params);

  struct Entry {
    std::string raw_response;
    std::string model_id;
    std::string prompt_version;
    std::string transcript_sha256;
    double temperature = 0.0;
    int max_tokens = 0;
    int retry_count = 0;
  };

  std::optional<Entry> load(std::string_view key) const;
  void store(std::string_view key, const Entry& entry) const;
  std::filesystem::path path_for(std::string_view key) const;

 private:
  std::filesystem::path root_;
};

struct ExtractOptions {
  int retries = 2;
  DecodingParams decoding;
  bool retry_nonce = false;  // set DecodingParams::nonce = attempt index on each attempt
  const PromptTemplate* prompt = nullptr;  // defaults to the built-in template
  const ResponseCache* cache = nullptr;
};

struct ExtractionResult {
  IndicatorVector vector;
  std::string raw_response;
  int retry_count = 0;
  bool cache_hit = false;
  std::size_t adapter_calls = 0;
};

// normalize -> build_prompt -> complete -> parse_response, re-sending the same
// prompt up to `retries` times on ParseError. Throws EmptyTranscript,
// AdapterFailure, ExtractionFailed.
ExtractionResult extract_indicators(const encoders::Transcript& transcript, LlmAdapter& llm,
                                    const ExtractOptions& options = {});

}  // namespace swpipe::indicators
