#include "swpipe/audio.h"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "swpipe/error.h"
#include "swpipe/io.h"

namespace swpipe {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::string& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

[[noreturn]] void bad_wav(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::kIo, fmt::format("{}: {}", path.string(), what));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    bad_wav(path, "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const auto size = read_le<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) bad_wav(path, "truncated fmt chunk");
      format = read_le<std::uint16_t>(bytes, body);
      channels = read_le<std::uint16_t>(bytes, body + 2);
      rate = read_le<std::uint32_t>(bytes, body + 4);
      bits = read_le<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 26) bad_wav(path, "truncated extensible fmt chunk");
        format = read_le<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_offset = body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) bad_wav(path, "missing fmt chunk");
  if (data_offset == 0) bad_wav(path, "missing data chunk");
  if (channels == 0 || rate == 0) bad_wav(path, "zero channels or sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    bad_wav(path, fmt::format("unsupported encoding (format {}, {} bits)", format, bits));
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_offset + (f * channels + c) * bytes_per_sample;
      if (pcm16) {
        acc += read_le<std::int16_t>(bytes, at) / 32768.0;
      } else {
        const float v = read_le<float>(bytes, at);
        acc += std::isfinite(v) ? v : 0.0f;
      }
    }
    clip.samples[f] = static_cast<float>(std::clamp(acc / channels, -1.0, 1.0));
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  append_le<std::uint32_t>(out, 36 + data_size);
  out += "WAVEfmt ";
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, pcm16 ? kFormatPcm : kFormatFloat);
  append_le<std::uint16_t>(out, 1);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  append_le<std::uint16_t>(out, bits / 8);
  append_le<std::uint16_t>(out, bits);
  out += "data";
  append_le<std::uint32_t>(out, data_size);
  for (float s : clip.samples) {
    if (pcm16) {
      const double scaled = std::round(std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0);
      append_le<std::int16_t>(out, static_cast<std::int16_t>(scaled));
    } else {
      append_le<float>(out, s);
    }
  }
  write_file_atomic(path, out);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::kInvalidParams, "target rate must be positive");
  if (clip.sample_rate == target_rate || clip.samples.empty()) {
    AudioClip out = clip;
    out.sample_rate = target_rate;
    return out;
  }
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) / ratio));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double src = static_cast<double>(i) * ratio;
    const auto lo = std::min(static_cast<std::size_t>(src), last);
    const std::size_t hi = std::min(lo + 1, last);
    const double frac = src - static_cast<double>(lo);
    out.samples[i] =
        static_cast<float>(clip.samples[lo] + (clip.samples[hi] - clip.samples[lo]) * frac);
  }
  return out;
}

}  // namespace swpipe
