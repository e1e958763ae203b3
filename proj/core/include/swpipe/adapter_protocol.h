#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/audio.h"
#include "swpipe/encoders.h"
#include "swpipe/indicators.h"
#include "swpipe/preprocess.h"

// Remote adapters speak newline-delimited JSON over a child process's stdio
// or a local stream socket. docs/adapter_protocol.md has the full schema.
namespace swpipe::adapters {

inline constexpr int kProtocolVersion = 1;

// Carries one request line and returns one response line (without the
// trailing newline). Implementations serialize calls internally.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual std::string roundtrip(const std::string& line) = 0;
  virtual std::string describe_endpoint() const = 0;
};

// Spawns `/bin/sh -c command` on first use and keeps it alive until
// destruction. Throws AdapterFailure on spawn or pipe errors.
class SubprocessChannel final : public LineChannel {
 public:
  explicit SubprocessChannel(std::string command);
  ~SubprocessChannel() override;
  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  std::string roundtrip(const std::string& line) override;
  std::string describe_endpoint() const override { return "exec:" + command_; }

 private:
  void start();
  void stop();

  std::string command_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mu_;
};

// Connects to a Unix domain stream socket on first use.
class UnixSocketChannel final : public LineChannel {
 public:
  explicit UnixSocketChannel(std::string path);
  ~UnixSocketChannel() override;
  UnixSocketChannel(const UnixSocketChannel&) = delete;
  UnixSocketChannel& operator=(const UnixSocketChannel&) = delete;

  std::string roundtrip(const std::string& line) override;
  std::string describe_endpoint() const override { return "unix:" + path_; }

 private:
  std::string path_;
  int fd_ = -1;
  std::string buffer_;
  std::mutex mu_;
};

// "exec:<command>" or "unix:<path>"; anything else is InvalidParams.
std::unique_ptr<LineChannel> open_channel(std::string_view endpoint);

// Result of the "describe" operation.
struct AdapterDescription {
  std::string kind;  // acoustic_encoder | text_encoder | asr | llm | denoiser
  std::string id;
  std::optional<std::size_t> dim;
  std::optional<int> sample_rate;
  int protocol_version = 0;
};

// Sends {"id", "op", ...params} and returns the "result" member as JSON
// text. Error responses and malformed replies raise AdapterFailure.
class ProtocolClient {
 public:
  explicit ProtocolClient(std::unique_ptr<LineChannel> channel);

  std::string call(std::string_view op, const std::string& params_json);
  AdapterDescription describe();
  std::string endpoint() const { return channel_->describe_endpoint(); }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::uint64_t next_id_ = 1;
};

// Little-endian float32 samples, base64 encoded.
std::string encode_samples(const std::vector<float>& samples);
std::vector<float> decode_samples(std::string_view b64);

class RemoteAcousticEncoder final : public encoders::AcousticEncoderAdapter {
 public:
  // Queries "describe" for dim and sample rate.
  RemoteAcousticEncoder(std::string encoder_id, std::unique_ptr<LineChannel> channel);
  std::string encoder_id() const override { return encoder_id_; }
  std::size_t dim() const override { return dim_; }
  int expected_rate() const override { return rate_; }
  encoders::FrameMatrix encode(const AudioClip& clip) override;

 private:
  std::string encoder_id_;
  ProtocolClient client_;
  std::size_t dim_ = 0;
  int rate_ = 16000;
};

class RemoteTextEncoder final : public encoders::TextEncoderAdapter {
 public:
  RemoteTextEncoder(std::string encoder_id, std::unique_ptr<LineChannel> channel);
  std::string encoder_id() const override { return encoder_id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<float> encode(std::string_view text) override;

 private:
  std::string encoder_id_;
  ProtocolClient client_;
  std::size_t dim_ = 0;
};

class RemoteAsr final : public encoders::AsrAdapter {
 public:
  RemoteAsr(std::string asr_id, std::unique_ptr<LineChannel> channel);
  std::string asr_id() const override { return asr_id_; }
  encoders::Transcript transcribe(const AudioClip& clip) override;

 private:
  std::string asr_id_;
  ProtocolClient client_;
};

// Forwards `access_key` (from DENOISER_ACCESS_KEY) with every request.
class RemoteDenoiser final : public preprocess::DenoiserAdapter {
 public:
  RemoteDenoiser(std::unique_ptr<LineChannel> channel, std::string access_key);
  std::string name() const override;
  AudioClip process(const AudioClip& clip) override;

 private:
  ProtocolClient client_;
  std::string access_key_;
};

class RemoteLlm final : public indicators::LlmAdapter {
 public:
  RemoteLlm(std::string model_id, std::unique_ptr<LineChannel> channel);
  std::string model_id() const override { return model_id_; }
  std::string complete(const std::string& prompt, const indicators::DecodingParams& params) override;

 private:
  std::string model_id_;
  ProtocolClient client_;
};

// POSTs {"model_id", "prompt", "temperature", "max_tokens"[, "nonce"]} to
// `url` and reads {"text": ...}. Sends "Authorization: Bearer <api_key>"
// when a key is given.
class HttpLlm final : public indicators::LlmAdapter {
 public:
  HttpLlm(std::string model_id, std::string url, std::string api_key, int timeout_s = 120);
  std::string model_id() const override { return model_id_; }
  std::string complete(const std::string& prompt, const indicators::DecodingParams& params) override;

 private:
  std::string model_id_;
  std::string url_;
  std::string api_key_;
  int timeout_s_;
};

}  // namespace swpipe::adapters
