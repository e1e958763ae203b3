#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace swpipe::pipeline {

struct SyntheticCorpusOptions {
  std::size_t participants = 10;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  double min_duration_s = 8.0;
  double max_duration_s = 40.0;
};

// Writes WAV files and manifest.csv under `dir` and returns the manifest
// path. Labels are balanced and split per class into train/dev/test
// (60/20/20, at least two training participants per class). At-risk speakers
// get lower-pitched voices so the mock ASR and LLM track the labels. The
// first test participant has no ED recording.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             const SyntheticCorpusOptions& options = {});

}  // namespace swpipe::pipeline
