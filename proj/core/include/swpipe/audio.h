#pragma once

#include <filesystem>
#include <vector>

namespace swpipe {

// Mono audio. Samples are kept in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  bool operator==(const AudioClip&) const = default;
};

// Reads RIFF/WAVE with PCM 16-bit or IEEE float 32-bit data (plain or
// WAVE_FORMAT_EXTENSIBLE). Multi-channel input is averaged down to mono.
AudioClip read_wav(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kFloat32);

// Linear-interpolation resampler. Returns the input unchanged when the rates
// already match.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace swpipe
