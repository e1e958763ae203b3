#include "swpipe/adapter_protocol.h"

#include <fcntl.h>
#include <openssl/evp.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "swpipe/error.h"

namespace swpipe::adapters {
namespace {

using nlohmann::json;

Error failure(const std::string& msg) { return Error(ErrorCode::kAdapterFailure, msg); }

void write_all(int fd, std::string_view data, const std::string& who) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw failure(fmt::format("{}: write failed: {}", who, std::strerror(errno)));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_line(int fd, std::string& buffer, const std::string& who) {
  for (;;) {
    if (auto nl = buffer.find('\n'); nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw failure(fmt::format("{}: read failed: {}", who, std::strerror(errno)));
    }
    if (n == 0) throw failure(fmt::format("{}: adapter closed the connection", who));
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

json parse_result(const std::string& text, const std::string& who) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw failure(fmt::format("{}: malformed result: {}", who, e.what()));
  }
}

AudioClip clip_from(const json& r, const std::string& who) {
  if (!r.contains("samples") || !r["samples"].is_string() || !r.contains("sample_rate") ||
      !r["sample_rate"].is_number_integer()) {
    throw failure(fmt::format("{}: result needs samples and sample_rate", who));
  }
  AudioClip clip;
  clip.samples = decode_samples(r["samples"].get<std::string>());
  clip.sample_rate = r["sample_rate"].get<int>();
  return clip;
}

json audio_params(const AudioClip& clip) {
  return {{"sample_rate", clip.sample_rate}, {"samples", encode_samples(clip.samples)}};
}

}  // namespace

// --- channels -------------------------------------------------------------------

SubprocessChannel::SubprocessChannel(std::string command) : command_(std::move(command)) {}

SubprocessChannel::~SubprocessChannel() { stop(); }

void SubprocessChannel::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw failure("pipe() failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw failure("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw failure("fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // A dead child must surface as an error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
}

void SubprocessChannel::stop() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  buffer_.clear();
}

std::string SubprocessChannel::roundtrip(const std::string& line) {
  std::lock_guard lock(mu_);
  if (pid_ < 0) start();
  const std::string who = describe_endpoint();
  try {
    write_all(to_child_, line + "\n", who);
    return read_line(from_child_, buffer_, who);
  } catch (const Error&) {
    stop();
    throw;
  }
}

UnixSocketChannel::UnixSocketChannel(std::string path) : path_(std::move(path)) {}

UnixSocketChannel::~UnixSocketChannel() {
  if (fd_ >= 0) ::close(fd_);
}

std::string UnixSocketChannel::roundtrip(const std::string& line) {
  std::lock_guard lock(mu_);
  const std::string who = describe_endpoint();
  if (fd_ < 0) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path_.size() >= sizeof addr.sun_path) throw failure(who + ": socket path too long");
    std::memcpy(addr.sun_path, path_.c_str(), path_.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw failure(who + ": socket() failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw failure(fmt::format("{}: connect failed: {}", who, err));
    }
    fd_ = fd;
  }
  try {
    const std::string out = line + "\n";
    std::string_view rest = out;
    while (!rest.empty()) {
      const ssize_t n = ::send(fd_, rest.data(), rest.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw failure(fmt::format("{}: send failed: {}", who, std::strerror(errno)));
      }
      rest.remove_prefix(static_cast<std::size_t>(n));
    }
    return read_line(fd_, buffer_, who);
  } catch (const Error&) {
    ::close(fd_);
    fd_ = -1;
    buffer_.clear();
    throw;
  }
}

std::unique_ptr<LineChannel> open_channel(std::string_view endpoint) {
  if (endpoint.starts_with("exec:") && endpoint.size() > 5) {
    return std::make_unique<SubprocessChannel>(std::string(endpoint.substr(5)));
  }
  if (endpoint.starts_with("unix:") && endpoint.size() > 5) {
    return std::make_unique<UnixSocketChannel>(std::string(endpoint.substr(5)));
  }
  throw Error(ErrorCode::kInvalidParams, fmt::format("unsupported endpoint '{}'", endpoint));
}

// --- client ---------------------------------------------------------------------

ProtocolClient::ProtocolClient(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
  if (!channel_) throw Error(ErrorCode::kInvalidParams, "null adapter channel");
}

std::string ProtocolClient::call(std::string_view op, const std::string& params_json) {
  const std::string who = channel_->describe_endpoint();
  json req = params_json.empty() ? json::object() : json::parse(params_json);
  const std::uint64_t id = next_id_++;
  req["id"] = id;
  req["op"] = std::string(op);
  const std::string reply = channel_->roundtrip(req.dump());
  json resp;
  try {
    resp = json::parse(reply);
  } catch (const json::exception&) {
    throw failure(fmt::format("{}: reply to '{}' is not JSON", who, op));
  }
  if (!resp.is_object() || !resp.contains("ok") || !resp["ok"].is_boolean()) {
    throw failure(fmt::format("{}: reply to '{}' lacks an ok flag", who, op));
  }
  if (!resp.contains("id") || resp["id"] != id) {
    throw failure(fmt::format("{}: reply id does not match request {}", who, id));
  }
  if (!resp["ok"].get<bool>()) {
    std::string msg = "unknown error";
    if (resp.contains("error") && resp["error"].is_object()) {
      const auto& e = resp["error"];
      msg = fmt::format("{}: {}", e.value("code", std::string("error")),
                        e.value("message", std::string("")));
    }
    throw failure(fmt::format("{}: '{}' failed: {}", who, op, msg));
  }
  if (!resp.contains("result")) throw failure(fmt::format("{}: reply to '{}' has no result", who, op));
  return resp["result"].dump();
}

AdapterDescription ProtocolClient::describe() {
  const json r = parse_result(call("describe", "{}"), endpoint());
  AdapterDescription d;
  try {
    d.kind = r.at("kind").get<std::string>();
    d.id = r.at("id").get<std::string>();
    d.protocol_version = r.at("protocol_version").get<int>();
    if (r.contains("dim")) d.dim = r["dim"].get<std::size_t>();
    if (r.contains("sample_rate")) d.sample_rate = r["sample_rate"].get<int>();
  } catch (const json::exception& e) {
    throw failure(fmt::format("{}: malformed describe result: {}", endpoint(), e.what()));
  }
  if (d.protocol_version != kProtocolVersion) {
    throw failure(fmt::format("{}: protocol version {} (expected {})", endpoint(),
                              d.protocol_version, kProtocolVersion));
  }
  return d;
}

// --- sample encoding -------------------------------------------------------------

std::string encode_samples(const std::vector<float>& samples) {
  std::string raw(samples.size() * 4, '\0');
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &samples[i], 4);
    for (int b = 0; b < 4; ++b) raw[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(raw.data()),
                                static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<float> decode_samples(std::string_view b64) {
  if (b64.size() % 4 != 0) throw failure("sample payload is not valid base64");
  std::string raw(b64.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(raw.data()),
                                reinterpret_cast<const unsigned char*>(b64.data()),
                                static_cast<int>(b64.size()));
  if (n < 0) throw failure("sample payload is not valid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes that stand in for '=' padding.
  if (!b64.empty() && b64.back() == '=') --len;
  if (b64.size() >= 2 && b64[b64.size() - 2] == '=') --len;
  if (len % 4 != 0) throw failure("sample payload length is not a multiple of 4 bytes");
  std::vector<float> out(len / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + b])) << (8 * b);
    }
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

// --- remote adapters ------------------------------------------------------------

RemoteAcousticEncoder::RemoteAcousticEncoder(std::string encoder_id,
                                             std::unique_ptr<LineChannel> channel)
    : encoder_id_(std::move(encoder_id)), client_(std::move(channel)) {
  const auto d = client_.describe();
  if (d.kind != "acoustic_encoder" || !d.dim || *d.dim == 0) {
    throw failure(fmt::format("{}: not an acoustic encoder", client_.endpoint()));
  }
  dim_ = *d.dim;
  if (d.sample_rate) rate_ = *d.sample_rate;
}

encoders::FrameMatrix RemoteAcousticEncoder::encode(const AudioClip& clip) {
  const json r = parse_result(client_.call("encode_audio", audio_params(clip).dump()), client_.endpoint());
  encoders::FrameMatrix m;
  try {
    m.rows = r.at("rows").get<std::size_t>();
    m.cols = r.at("cols").get<std::size_t>();
    m.data = decode_samples(r.at("frames").get<std::string>());
  } catch (const json::exception& e) {
    throw failure(fmt::format("{}: malformed encode_audio result: {}", client_.endpoint(), e.what()));
  }
  if (m.data.size() != m.rows * m.cols) {
    throw failure(fmt::format("{}: frame payload does not match {}x{}", client_.endpoint(), m.rows,
                              m.cols));
  }
  return m;
}

RemoteTextEncoder::RemoteTextEncoder(std::string encoder_id, std::unique_ptr<LineChannel> channel)
    : encoder_id_(std::move(encoder_id)), client_(std::move(channel)) {
  const auto d = client_.describe();
  if (d.kind != "text_encoder" || !d.dim || *d.dim == 0) {
    throw failure(fmt::format("{}: not a text encoder", client_.endpoint()));
  }
  dim_ = *d.dim;
}

std::vector<float> RemoteTextEncoder::encode(std::string_view text) {
  const json params = {{"text", std::string(text)}};
  const json r = parse_result(client_.call("encode_text", params.dump()), client_.endpoint());
  try {
    return r.at("vector").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw failure(fmt::format("{}: malformed encode_text result: {}", client_.endpoint(), e.what()));
  }
}

RemoteAsr::RemoteAsr(std::string asr_id, std::unique_ptr<LineChannel> channel)
    : asr_id_(std::move(asr_id)), client_(std::move(channel)) {}

encoders::Transcript RemoteAsr::transcribe(const AudioClip& clip) {
  const json r = parse_result(client_.call("transcribe", audio_params(clip).dump()), client_.endpoint());
  try {
    return {r.at("text").get<std::string>(), r.value("language", std::string())};
  } catch (const json::exception& e) {
    throw failure(fmt::format("{}: malformed transcribe result: {}", client_.endpoint(), e.what()));
  }
}

RemoteDenoiser::RemoteDenoiser(std::unique_ptr<LineChannel> channel, std::string access_key)
    : client_(std::move(channel)), access_key_(std::move(access_key)) {}

std::string RemoteDenoiser::name() const { return "remote:" + client_.endpoint(); }

AudioClip RemoteDenoiser::process(const AudioClip& clip) {
  json params = audio_params(clip);
  if (!access_key_.empty()) params["access_key"] = access_key_;
  return clip_from(parse_result(client_.call("denoise", params.dump()), client_.endpoint()),
                   client_.endpoint());
}

RemoteLlm::RemoteLlm(std::string model_id, std::unique_ptr<LineChannel> channel)
    : model_id_(std::move(model_id)), client_(std::move(channel)) {}

namespace {

json completion_params(const std::string& model_id, const std::string& prompt,
                       const indicators::DecodingParams& params) {
  json p = {{"model_id", model_id},
            {"prompt", prompt},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (params.nonce) p["nonce"] = *params.nonce;
  return p;
}

}  // namespace

std::string RemoteLlm::complete(const std::string& prompt, const indicators::DecodingParams& params) {
  const json r = parse_result(
      client_.call("complete", completion_params(model_id_, prompt, params).dump()), client_.endpoint());
  if (!r.contains("text") || !r["text"].is_string()) {
    throw failure(fmt::format("{}: complete result has no text", client_.endpoint()));
  }
  return r["text"].get<std::string>();
}

HttpLlm::HttpLlm(std::string model_id, std::string url, std::string api_key, int timeout_s)
    : model_id_(std::move(model_id)), url_(std::move(url)), api_key_(std::move(api_key)),
      timeout_s_(timeout_s) {}

std::string HttpLlm::complete(const std::string& prompt, const indicators::DecodingParams& params) {
  const auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) throw failure(fmt::format("bad LLM URL '{}'", url_));
  const auto path_start = url_.find('/', scheme_end + 3);
  const std::string origin = url_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string body = completion_params(model_id_, prompt, params).dump();
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw failure(fmt::format("{}: request failed: {}", origin, httplib::to_string(res.error())));
  }
  if (res->status != 200) throw failure(fmt::format("{}: HTTP status {}", origin, res->status));
  const json r = parse_result(res->body, origin);
  if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) {
    throw failure(fmt::format("{}: response has no text field", origin));
  }
  return r["text"].get<std::string>();
}

}  // namespace swpipe::adapters
