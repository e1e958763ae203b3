#pragma once

// Deterministic stand-ins for the external models. Each output is a pure
// function of (input bytes, seed), so pipeline runs with mocks reproduce
// exactly.

#include <cstdint>
#include <string>

#include "swpipe/encoders.h"
#include "swpipe/indicators.h"

namespace swpipe::mocks {

// Non-overlapping 20 ms frames; each frame's (rms, zero-crossing rate, mean,
// peak) summary goes through a fixed random projection and tanh.
class MockAcousticEncoder final : public encoders::AcousticEncoderAdapter {
 public:
  MockAcousticEncoder(std::string encoder_id, std::size_t dim, int expected_rate = 16000,
                      std::uint64_t seed = 0);

  std::string encoder_id() const override { return encoder_id_; }
  std::size_t dim() const override { return dim_; }
  int expected_rate() const override { return expected_rate_; }
  encoders::FrameMatrix encode(const AudioClip& clip) override;

 private:
  static constexpr std::size_t kFeatures = 5;

  std::string encoder_id_;
  std::size_t dim_;
  int expected_rate_;
  std::vector<float> projection_;  // dim x kFeatures
};

// Mean of per-token pseudo-random vectors keyed by a stable hash of each
// whitespace-separated token.
class HashingTextEncoder final : public encoders::TextEncoderAdapter {
 public:
  HashingTextEncoder(std::string encoder_id, std::size_t dim, std::uint64_t seed = 0);

  std::string encoder_id() const override { return encoder_id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<float> encode(std::string_view text) override;

 private:
  std::string encoder_id_;
  std::size_t dim_;
  std::uint64_t seed_;
};

// Picks sentences from two phrase banks. Clips whose zero-crossing pitch
// estimate is below 180 Hz draw mostly from the distress bank, others from
// the coping bank; the choice within a bank hashes the sample bytes.
class MockAsr final : public encoders::AsrAdapter {
 public:
  explicit MockAsr(std::string asr_id = "whisper-large-v3", std::uint64_t seed = 0);

  std::string asr_id() const override { return asr_id_; }
  encoders::Transcript transcribe(const AudioClip& clip) override;

  static double pitch_estimate(const AudioClip& clip);

 private:
  std::string asr_id_;
  std::uint64_t seed_;
};

// Keyword matcher that answers in the indicator response format, quoting the
// sentences that triggered each indicator.
class KeywordLlm final : public indicators::LlmAdapter {
 public:
  explicit KeywordLlm(std::string model_id = "deepseek-r1",
                      const indicators::PromptTemplate& tmpl = indicators::PromptTemplate::builtin());

  std::string model_id() const override { return model_id_; }
  std::string complete(const std::string& prompt, const indicators::DecodingParams& params) override;

  std::size_t calls() const { return calls_; }

 private:
  std::string model_id_;
  std::string prefix_;
  std::string suffix_;
  std::size_t calls_ = 0;
};

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace swpipe::mocks
