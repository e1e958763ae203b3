#include "swpipe/mock_adapters.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "swpipe/random.h"

namespace swpipe::mocks {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

float unit_from_bits(std::uint64_t bits) {
  return static_cast<float>(static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0);
}

}  // namespace

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) {
  // FNV-1a, then a splitmix finalizer.
  std::uint64_t h = 0xcbf29ce484222325ull ^ splitmix64(seed);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(h);
}

// --- acoustic ------------------------------------------------------------------

MockAcousticEncoder::MockAcousticEncoder(std::string encoder_id, std::size_t dim,
                                         int expected_rate, std::uint64_t seed)
    : encoder_id_(std::move(encoder_id)), dim_(dim), expected_rate_(expected_rate) {
  Rng rng(stable_hash(encoder_id_, seed));
  projection_.resize(dim_ * kFeatures);
  for (float& w : projection_) w = static_cast<float>(rng.normal());
}

encoders::FrameMatrix MockAcousticEncoder::encode(const AudioClip& clip) {
  const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(clip.sample_rate / 50));
  const std::size_t n = clip.samples.size();
  const std::size_t frames = std::max<std::size_t>(1, (n + hop - 1) / hop);

  encoders::FrameMatrix out;
  out.rows = frames;
  out.cols = dim_;
  out.data.resize(frames * dim_);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = std::min(f * hop, n);
    const std::size_t end = std::min(begin + hop, n);
    double sum = 0, sq = 0, peak = 0;
    std::size_t crossings = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const double s = clip.samples[i];
      sum += s;
      sq += s * s;
      peak = std::max(peak, std::abs(s));
      if (i > begin && (clip.samples[i - 1] < 0) != (s < 0)) ++crossings;
    }
    const double len = std::max<std::size_t>(1, end - begin);
    const double features[kFeatures] = {std::sqrt(sq / len) * 4.0, crossings / len * 8.0,
                                        sum / len * 4.0, peak * 2.0, 1.0};
    for (std::size_t d = 0; d < dim_; ++d) {
      double acc = 0;
      for (std::size_t k = 0; k < kFeatures; ++k) acc += projection_[d * kFeatures + k] * features[k];
      out.data[f * dim_ + d] = static_cast<float>(std::tanh(acc));
    }
  }
  return out;
}

// --- text ----------------------------------------------------------------------

HashingTextEncoder::HashingTextEncoder(std::string encoder_id, std::size_t dim, std::uint64_t seed)
    : encoder_id_(std::move(encoder_id)), dim_(dim), seed_(seed) {}

std::vector<float> HashingTextEncoder::encode(std::string_view text) {
  std::vector<double> acc(dim_, 0.0);
  std::size_t tokens = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      const std::uint64_t h = stable_hash(text.substr(i, j - i), seed_ ^ stable_hash(encoder_id_));
      for (std::size_t d = 0; d < dim_; ++d) acc[d] += unit_from_bits(splitmix64(h + d));
      ++tokens;
    }
    i = j;
  }
  std::vector<float> out(dim_, 0.0f);
  if (tokens == 0) return out;
  for (std::size_t d = 0; d < dim_; ++d) out[d] = static_cast<float>(acc[d] / tokens);
  return out;
}

// --- ASR -----------------------------------------------------------------------

namespace {

constexpr std::string_view kDistressBank[] = {
    "My parents say I’m not good enough.",
    "They say some very awful things.",
    "Sometimes I hit my head against the wall.",
    "I lock myself in my room and refuse to talk.",
    "I broke my phone when I was angry.",
    "I argue with my friends almost every day.",
    "I just sit alone and cry.",
};

constexpr std::string_view kCopingBank[] = {
    "I complained to my family.",
    "I felt calm after talking with my family.",
    "I exercised at home on the weekend.",
    "I play basketball with my classmates.",
    "I talk to my teacher about my worries.",
    "I go running after school.",
    "I listen to music and feel better.",
};

}  // namespace

MockAsr::MockAsr(std::string asr_id, std::uint64_t seed) : asr_id_(std::move(asr_id)), seed_(seed) {}

double MockAsr::pitch_estimate(const AudioClip& clip) {
  if (clip.samples.size() < 2 || clip.sample_rate <= 0) return 0.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < clip.samples.size(); ++i) {
    if ((clip.samples[i - 1] < 0) != (clip.samples[i] < 0)) ++crossings;
  }
  return crossings * 0.5 / clip.duration();
}

encoders::Transcript MockAsr::transcribe(const AudioClip& clip) {
  const std::string_view bytes(reinterpret_cast<const char*>(clip.samples.data()),
                               clip.samples.size() * sizeof(float));
  std::uint64_t h = stable_hash(bytes, seed_);
  const bool distress = pitch_estimate(clip) < 180.0;
  const auto& main_bank = distress ? kDistressBank : kCopingBank;
  const auto& other_bank = distress ? kCopingBank : kDistressBank;
  constexpr std::size_t kBankSize = std::size(kDistressBank);

  // Three distinct sentences from the main bank, one from the other.
  std::vector<std::size_t> picks;
  while (picks.size() < 3) {
    h = splitmix64(h);
    const std::size_t idx = h % kBankSize;
    if (std::find(picks.begin(), picks.end(), idx) == picks.end()) picks.push_back(idx);
  }
  std::string text;
  for (std::size_t idx : picks) {
    if (!text.empty()) text += ' ';
    text += main_bank[idx];
  }
  h = splitmix64(h);
  text += ' ';
  text += other_bank[h % kBankSize];
  return {text, "en"};
}

// --- LLM -----------------------------------------------------------------------

namespace {

struct KeywordRule {
  indicators::IndicatorKind kind;
  std::vector<std::string_view> keywords;
};

const std::vector<KeywordRule>& keyword_rules() {
  using K = indicators::IndicatorKind;
  static const std::vector<KeywordRule> rules = {
      {K::kSelfHarm, {"hit my head", "cut myself", "hurt myself", "overdos"}},
      {K::kPressure, {"parents say", "awful things", "criticiz", "argue with"}},
      {K::kSocialSupport, {"complained to my family", "talking with my family", "talk to my"}},
      {K::kUnhealthyOutlets, {"lock myself", "broke my", "smash", "refuse to talk"}},
      {K::kExercise, {"exercised", "basketball", "running", "swimming", "lifting weights"}},
  };
  return rules;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      const auto b = cur.find_first_not_of(' ');
      if (b != std::string::npos) out.push_back(cur.substr(b));
      cur.clear();
    }
  }
  const auto b = cur.find_first_not_of(' ');
  if (b != std::string::npos) out.push_back(cur.substr(b));
  return out;
}

}  // namespace

KeywordLlm::KeywordLlm(std::string model_id, const indicators::PromptTemplate& tmpl)
    : model_id_(std::move(model_id)), prefix_(tmpl.prefix()), suffix_(tmpl.suffix()) {}

std::string KeywordLlm::complete(const std::string& prompt, const indicators::DecodingParams&) {
  ++calls_;
  std::string_view transcript = prompt;
  if (transcript.starts_with(prefix_)) transcript.remove_prefix(prefix_.size());
  if (transcript.ends_with(suffix_)) transcript.remove_suffix(suffix_.size());

  indicators::IndicatorVector v;
  for (const auto& sentence : split_sentences(transcript)) {
    const std::string lower = lowercase(sentence);
    std::string quote;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (sentence.compare(i, 3, "\xE2\x80\x9C") == 0 || sentence.compare(i, 3, "\xE2\x80\x9D") == 0) {
        i += 2;
        continue;
      }
      if (sentence[i] != '"') quote.push_back(sentence[i]);
    }
    if (quote.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    for (const auto& rule : keyword_rules()) {
      auto& quotes = v.evidence[static_cast<std::size_t>(rule.kind)];
      const bool hit = std::any_of(rule.keywords.begin(), rule.keywords.end(),
                                   [&](std::string_view k) { return lower.find(k) != std::string::npos; });
      if (hit && quotes.size() < 3 && std::find(quotes.begin(), quotes.end(), quote) == quotes.end()) {
        quotes.push_back(quote);
      }
    }
  }
  for (auto k : indicators::kAllIndicators) {
    v.flags[static_cast<std::size_t>(k)] = v.quotes(k).empty() ? 0 : 1;
  }
  return indicators::render_response(v);
}

}  // namespace swpipe::mocks
