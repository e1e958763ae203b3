#include "swpipe/pipeline/synthetic.h"

#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <vector>

#include "swpipe/audio.h"
#include "swpipe/corpus.h"
#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/random.h"

namespace swpipe::pipeline {
namespace fs = std::filesystem;

namespace {

// A vowel-like tone with slow vibrato and a syllable-rate envelope. Its
// zero-crossing rate stays close to 2 * pitch.
AudioClip synth_voice(double pitch_hz, double duration_s, int rate, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n);
  const double vib_rate = rng.uniform(4.0, 6.0);
  const double syl_rate = rng.uniform(2.5, 4.5);
  const double amp = rng.uniform(0.25, 0.45);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double f = pitch_hz * (1.0 + 0.01 * std::sin(2 * std::numbers::pi * vib_rate * t));
    phase += 2 * std::numbers::pi * f / rate;
    const double env = 0.6 + 0.4 * std::sin(2 * std::numbers::pi * syl_rate * t);
    const double v = amp * env * (std::sin(phase) + 0.15 * std::sin(2 * phase));
    clip.samples[i] = static_cast<float>(v);
  }
  return clip;
}

}  // namespace

fs::path write_synthetic_corpus(const fs::path& dir, const SyntheticCorpusOptions& opt) {
  if (opt.participants < 8) {
    throw Error(ErrorCode::kInvalidParams, "synthetic corpus needs at least 8 participants");
  }
  if (opt.sample_rate <= 0 || opt.min_duration_s <= 0 || opt.max_duration_s < opt.min_duration_s) {
    throw Error(ErrorCode::kInvalidParams, "invalid synthetic corpus durations or sample rate");
  }
  fs::create_directories(dir / "audio");
  Rng rng(derive_seed(opt.seed, "synthetic/corpus"));

  const std::size_t n = opt.participants;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < (n + 1) / 2 ? 1 : 0;
  rng.shuffle(std::span<int>(labels));

  // Per class: 20% dev, 20% test (at least one each), the rest train.
  std::vector<corpus::Split> splits(n, corpus::Split::kTrain);
  for (int c : {1, 0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    const std::size_t held = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * members.size())));
    for (std::size_t j = 0; j < held; ++j) {
      splits[members[members.size() - 1 - j]] = corpus::Split::kTest;
      splits[members[members.size() - 1 - held - j]] = corpus::Split::kDev;
    }
  }

  bool dropped_ed = false;
  std::vector<corpus::ParticipantRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::ParticipantRecord r;
    r.participant_id = fmt::format("S{:03}", i + 1);
    r.label = labels[i];
    r.split = splits[i];
    r.age = static_cast<double>(12 + rng.index(6));
    r.gender = rng.bernoulli(0.5) ? corpus::Gender::kFemale : corpus::Gender::kMale;
    const double pitch = labels[i] == 1 ? rng.uniform(110.0, 160.0) : rng.uniform(200.0, 260.0);
    for (auto task : corpus::kAllTasks) {
      if (task == corpus::TaskKind::kED && r.split == corpus::Split::kTest && !dropped_ed) {
        dropped_ed = true;
        continue;
      }
      const double dur = rng.uniform(opt.min_duration_s, opt.max_duration_s);
      const auto clip = synth_voice(pitch * rng.uniform(0.97, 1.03), dur, opt.sample_rate, rng);
      const fs::path rel = fs::path("audio") / fmt::format("{}_{}.wav", r.participant_id, corpus::to_string(task));
      write_wav(dir / rel, clip, WavEncoding::kPcm16);
      r.audio[task] = rel;
    }
    records.push_back(std::move(r));
  }
  const fs::path manifest = dir / "manifest.csv";
  corpus::write_manifest(corpus::Corpus(std::move(records)), manifest);
  return manifest;
}

}  // namespace swpipe::pipeline
