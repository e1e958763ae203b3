#include "swpipe/indicators.h"

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"

namespace swpipe::resources {
extern const unsigned char indicator_prompt_v1[];
extern const std::size_t indicator_prompt_v1_size;
}  // namespace swpipe::resources

namespace swpipe::indicators {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t index_of(IndicatorKind kind) { return static_cast<std::size_t>(kind); }

constexpr std::string_view kOpenQuotes[] = {"\"", "\xE2\x80\x9C", "\xE2\x80\x9D"};  // " “ ”

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError, fmt::format("line {}: {}", line, what));
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void skip_spaces(std::string_view& s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
}

// Length of the quote delimiter at the front of `s`, or 0.
std::size_t quote_delimiter(std::string_view s) {
  for (auto q : kOpenQuotes) {
    if (s.starts_with(q)) return q.size();
  }
  return 0;
}

bool has_delimiter(std::string_view s) {
  for (auto q : kOpenQuotes) {
    if (s.find(q) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

std::string_view display_name(IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::kSelfHarm: return "Self-harm Behavior";
    case IndicatorKind::kPressure: return "Pressure";
    case IndicatorKind::kSocialSupport: return "Social Support";
    case IndicatorKind::kUnhealthyOutlets: return "Unhealthy Outlets";
    case IndicatorKind::kExercise: return "Exercise";
  }
  return "?";
}

std::string_view key_name(IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::kSelfHarm: return "self_harm";
    case IndicatorKind::kPressure: return "pressure";
    case IndicatorKind::kSocialSupport: return "social_support";
    case IndicatorKind::kUnhealthyOutlets: return "unhealthy_outlets";
    case IndicatorKind::kExercise: return "exercise";
  }
  return "?";
}

std::string_view definition(IndicatorKind kind) {
  static const auto definitions = [] {
    std::array<std::string, kIndicatorCount> out;
    const std::string_view text = PromptTemplate::builtin().text();
    for (auto k : kAllIndicators) {
      const std::string head = fmt::format("\n{}: ", display_name(k));
      const auto at = text.find(head);
      if (at == std::string_view::npos) continue;
      const auto begin = at + head.size();
      out[index_of(k)] = std::string(text.substr(begin, text.find('\n', begin) - begin));
    }
    return out;
  }();
  return definitions[index_of(kind)];
}

void check_invariants(const IndicatorVector& v) {
  for (auto k : kAllIndicators) {
    const int flag = v.flag(k);
    const auto& quotes = v.quotes(k);
    const auto name = display_name(k);
    if (flag != 0 && flag != 1) {
      throw Error(ErrorCode::kParseError, fmt::format("{}: flag {} is not 0 or 1", name, flag));
    }
    if (flag == 1 && (quotes.empty() || quotes.size() > 3)) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("{}: flag 1 needs 1-3 quotes, got {}", name, quotes.size()));
    }
    if (flag == 0 && !quotes.empty()) {
      throw Error(ErrorCode::kParseError, fmt::format("{}: flag 0 must have no quotes", name));
    }
    for (const auto& q : quotes) {
      if (is_blank(q) || q.find_first_of("\r\n") != std::string::npos || has_delimiter(q)) {
        throw Error(ErrorCode::kParseError, fmt::format("{}: invalid quote '{}'", name, q));
      }
    }
  }
}

// --- prompt ----------------------------------------------------------------

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  placeholder_at_ = text_.find(kTranscriptPlaceholder);
  if (placeholder_at_ == std::string::npos ||
      text_.find(kTranscriptPlaceholder, placeholder_at_ + 1) != std::string::npos) {
    throw Error(ErrorCode::kInvalidParams,
                "prompt template must contain exactly one {transcript} placeholder");
  }
  version_ = "p1-" + sha256_hex(text_).substr(0, 16);
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate tmpl(
      std::string(reinterpret_cast<const char*>(resources::indicator_prompt_v1),
                  resources::indicator_prompt_v1_size));
  return tmpl;
}

PromptTemplate PromptTemplate::from_text(std::string text) { return PromptTemplate(std::move(text)); }

PromptTemplate PromptTemplate::from_file(const fs::path& path) {
  return PromptTemplate(read_file(path));
}

std::string_view PromptTemplate::prefix() const {
  return std::string_view(text_).substr(0, placeholder_at_);
}

std::string_view PromptTemplate::suffix() const {
  return std::string_view(text_).substr(placeholder_at_ + kTranscriptPlaceholder.size());
}

std::string PromptTemplate::render(std::string_view transcript) const {
  std::string out;
  out.reserve(text_.size() + transcript.size());
  out += prefix();
  out += transcript;
  out += suffix();
  return out;
}

std::string build_prompt(std::string_view transcript, const PromptTemplate& tmpl) {
  return tmpl.render(transcript);
}

std::string normalize_transcript(std::string_view text) {
  static constexpr std::string_view kIdeographicSpace = "\xE3\x80\x80";
  std::string out;
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    if (text.substr(i).starts_with(kIdeographicSpace)) {
      pending_space = true;
      i += kIdeographicSpace.size();
      continue;
    }
    const char c = text[i++];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// --- response parsing --------------------------------------------------------

namespace {

std::vector<std::string> parse_quote_list(std::string_view rest, std::size_t line) {
  // `rest` starts just after '['.
  std::vector<std::string> quotes;
  skip_spaces(rest);
  if (rest.starts_with("]")) parse_error(line, "empty bracket list");
  while (true) {
    skip_spaces(rest);
    const std::size_t open = quote_delimiter(rest);
    if (open == 0) parse_error(line, "expected a double-quoted string in brackets");
    rest.remove_prefix(open);

    std::size_t close_at = std::string_view::npos;
    std::size_t close_len = 0;
    for (auto q : kOpenQuotes) {
      const auto at = rest.find(q);
      if (at < close_at) {
        close_at = at;
        close_len = q.size();
      }
    }
    if (close_at == std::string_view::npos) parse_error(line, "unterminated quote");
    const std::string_view content = rest.substr(0, close_at);
    if (is_blank(content)) parse_error(line, "empty quote");
    quotes.emplace_back(content);
    rest.remove_prefix(close_at + close_len);

    skip_spaces(rest);
    if (rest.starts_with(",")) {
      rest.remove_prefix(1);
      continue;
    }
    if (rest.starts_with("]")) {
      rest.remove_prefix(1);
      break;
    }
    parse_error(line, "expected ',' or ']' after quote");
  }
  if (!trim(rest).empty()) parse_error(line, "unexpected text after bracketed quotes");
  return quotes;
}

}  // namespace

IndicatorVector parse_response(std::string_view raw) {
  IndicatorVector v;
  std::array<bool, kIndicatorCount> seen{};

  std::size_t line_no = 0;
  while (!raw.empty() || line_no == 0) {
    ++line_no;
    const auto nl = raw.find('\n');
    const std::string_view line = trim(raw.substr(0, nl));
    raw = nl == std::string_view::npos ? std::string_view{} : raw.substr(nl + 1);
    if (line.empty()) {
      if (raw.empty()) break;
      continue;
    }

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) parse_error(line_no, "expected '<Indicator>: <0|1>'");
    const std::string_view name = trim(line.substr(0, colon));
    std::optional<IndicatorKind> kind;
    for (auto k : kAllIndicators) {
      if (display_name(k) == name) kind = k;
    }
    if (!kind) parse_error(line_no, fmt::format("unknown indicator '{}'", name));
    const std::size_t idx = index_of(*kind);
    if (seen[idx]) parse_error(line_no, fmt::format("duplicate indicator '{}'", name));
    seen[idx] = true;

    std::string_view rest = line.substr(colon + 1);
    skip_spaces(rest);
    std::size_t digits = 0;
    while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
    if (digits == 0) parse_error(line_no, fmt::format("'{}' has no 0/1 flag", name));
    const std::string_view flag = rest.substr(0, digits);
    if (flag != "0" && flag != "1") {
      parse_error(line_no, fmt::format("'{}' flag {} is out of range", name, flag));
    }
    v.flags[idx] = flag == "1" ? 1 : 0;
    rest.remove_prefix(digits);
    skip_spaces(rest);
    if (!rest.empty()) {
      if (!rest.starts_with("[")) parse_error(line_no, "unexpected text after flag");
      v.evidence[idx] = parse_quote_list(rest.substr(1), line_no);
    }
  }

  for (auto k : kAllIndicators) {
    if (!seen[index_of(k)]) {
      throw Error(ErrorCode::kParseError, fmt::format("missing indicator '{}'", display_name(k)));
    }
  }
  check_invariants(v);
  return v;
}

std::string render_response(const IndicatorVector& v) {
  check_invariants(v);
  std::string out;
  for (auto k : kAllIndicators) {
    out += fmt::format("{}: {}", display_name(k), v.flag(k));
    const auto& quotes = v.quotes(k);
    if (!quotes.empty()) {
      out += " [";
      for (std::size_t i = 0; i < quotes.size(); ++i) {
        if (i) out += ", ";
        out += fmt::format("\"{}\"", quotes[i]);
      }
      out += "]";
    }
    out += "\n";
  }
  return out;
}

std::array<int, kIndicatorCount> to_feature_row(const IndicatorVector& v) { return v.flags; }

// --- cache -------------------------------------------------------------------

ResponseCache::ResponseCache(fs::path root) : root_(std::move(root)) {}

std::string ResponseCache::key(std::string_view transcript_sha256, std::string_view prompt_version,
                               std::string_view model_id, const DecodingParams& params) {
  const json material = {{"transcript_sha256", transcript_sha256},
                         {"prompt_version", prompt_version},
                         {"model_id", model_id},
                         {"temperature", params.temperature},
                         {"max_tokens", params.max_tokens}};
  return sha256_hex(material.dump());
}

fs::path ResponseCache::path_for(std::string_view key) const {
  return root_ / (std::string(key) + ".json");
}

std::optional<ResponseCache::Entry> ResponseCache::load(std::string_view key) const {
  const auto path = path_for(key);
  if (!fs::exists(path)) return std::nullopt;
  try {
    const json doc = json::parse(read_file(path));
    Entry e;
    e.raw_response = doc.at("raw_response").get<std::string>();
    e.model_id = doc.at("model_id").get<std::string>();
    e.prompt_version = doc.at("prompt_version").get<std::string>();
    e.transcript_sha256 = doc.at("transcript_sha256").get<std::string>();
    e.temperature = doc.at("decoding").at("temperature").get<double>();
    e.max_tokens = doc.at("decoding").at("max_tokens").get<int>();
    e.retry_count = doc.value("retry_count", 0);
    return e;
  } catch (const json::exception&) {
    // An unreadable entry is a miss; the next store overwrites it.
    return std::nullopt;
  }
}

void ResponseCache::store(std::string_view key, const Entry& e) const {
  const json doc = {{"raw_response", e.raw_response},
                    {"model_id", e.model_id},
                    {"prompt_version", e.prompt_version},
                    {"transcript_sha256", e.transcript_sha256},
                    {"decoding", {{"temperature", e.temperature}, {"max_tokens", e.max_tokens}}},
                    {"retry_count", e.retry_count}};
  write_file_atomic(path_for(key), doc.dump(2) + "\n");
}

// --- extraction --------------------------------------------------------------

ExtractionResult extract_indicators(const encoders::Transcript& transcript, LlmAdapter& llm,
                                    const ExtractOptions& options) {
  const std::string text = normalize_transcript(transcript.text);
  if (text.empty()) throw Error(ErrorCode::kEmptyTranscript, "transcript is empty");
  if (options.retries < 0) throw Error(ErrorCode::kInvalidParams, "retries must be >= 0");

  const PromptTemplate& tmpl = options.prompt ? *options.prompt : PromptTemplate::builtin();
  const std::string model_id = llm.model_id();
  const std::string transcript_hash = sha256_hex(text);
  const std::string key =
      ResponseCache::key(transcript_hash, tmpl.version(), model_id, options.decoding);

  ExtractionResult result;
  if (options.cache) {
    if (auto entry = options.cache->load(key)) {
      try {
        result.vector = parse_response(entry->raw_response);
        result.vector.prompt_version = tmpl.version();
        result.vector.model_id = model_id;
        result.raw_response = std::move(entry->raw_response);
        result.retry_count = entry->retry_count;
        result.cache_hit = true;
        return result;
      } catch (const Error&) {
        // Stale or hand-edited entry; fall through and re-query.
      }
    }
  }

  const std::string prompt = tmpl.render(text);
  std::string last_error;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    DecodingParams params = options.decoding;
    if (options.retry_nonce) params.nonce = static_cast<std::uint64_t>(attempt);
    std::string raw;
    ++result.adapter_calls;
    try {
      raw = llm.complete(prompt, params);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kAdapterFailure) throw;
      throw Error(ErrorCode::kAdapterFailure, fmt::format("llm '{}': {}", model_id, e.what()));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kAdapterFailure, fmt::format("llm '{}': {}", model_id, e.what()));
    }
    try {
      result.vector = parse_response(raw);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseError) throw;
      last_error = e.what();
      continue;
    }
    result.vector.prompt_version = tmpl.version();
    result.vector.model_id = model_id;
    result.raw_response = std::move(raw);
    result.retry_count = attempt;
    if (options.cache) {
      options.cache->store(key, {result.raw_response, model_id, tmpl.version(), transcript_hash,
                                 options.decoding.temperature, options.decoding.max_tokens,
                                 attempt});
    }
    return result;
  }
  throw Error(ErrorCode::kExtractionFailed,
              fmt::format("no parseable response from '{}' after {} attempts; last error: {}",
                          model_id, options.retries + 1, last_error));
}

}  // namespace swpipe::indicators
