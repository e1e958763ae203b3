#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/classify/mlp.h"
#include "swpipe/classify/random_forest.h"
#include "swpipe/corpus.h"
#include "swpipe/ensemble.h"
#include "swpipe/indicators.h"
#include "swpipe/preprocess.h"

namespace swpipe::pipeline {

// "mock" selects the deterministic in-process twin; otherwise an
// "exec:<command>", "unix:<path>" or (LLM only) "http(s)://..." endpoint.
struct AdapterEndpoint {
  std::string endpoint = "mock";
  std::optional<std::size_t> dim;  // required to match for remote encoders

  bool operator==(const AdapterEndpoint&) const = default;
};

enum class RefitMode { kFull, kFoldEnsemble };
std::string_view to_string(RefitMode mode);

struct PipelineConfig {
  std::filesystem::path config_path;  // empty for in-memory configs
  std::filesystem::path manifest;
  std::filesystem::path cache_root;
  std::uint64_t seed = 0;

  preprocess::SegmentParams segment;
  int sample_rate = 16000;
  // "identity" | "mock" | "gain:<g>" | "exec:<cmd>" | "unix:<path>"
  std::string denoiser = "identity";
  preprocess::DenoiseErrorPolicy on_denoise_error = preprocess::DenoiseErrorPolicy::kFail;

  std::map<std::string, AdapterEndpoint> adapters;  // asset id -> endpoint
  std::size_t workers = 1;
  std::string asr = "whisper-large-v3";

  std::string llm_model = "deepseek-r1";
  int llm_retries = 2;
  indicators::DecodingParams decoding;
  bool retry_nonce = false;
  std::optional<std::filesystem::path> prompt_file;

  classify::MlpConfig mlp;
  classify::RfConfig rf;
  RefitMode refit = RefitMode::kFull;
  std::size_t folds = 10;
  bool cross_validate = false;

  ensemble::EnsembleSpec ensemble = ensemble::preset_combination("combo-B");

  // Asset ids the ensemble needs, by role.
  std::set<std::string> acoustic_encoders() const;
  std::set<std::string> text_encoders() const;
  // Tasks to transcribe: ER (for indicators) plus tasks of text members.
  std::set<corpus::TaskKind> transcribe_tasks() const;
  const indicators::PromptTemplate& prompt() const;

  // Whole-config checks: member/adapter coverage, parameter ranges.
  // Throws ConfigInvalid.
  void validate() const;

 private:
  std::shared_ptr<const indicators::PromptTemplate> prompt_;
  friend PipelineConfig parse_config(std::string_view, const std::filesystem::path&);
};

// JSON document; unknown keys at any level are ConfigInvalid. Relative paths
// resolve against `base_dir`. The result has been validate()d.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Config document for a corpus with every adapter set to "mock".
std::string mock_config_json(const std::filesystem::path& manifest,
                             const std::filesystem::path& cache_root, std::uint64_t seed,
                             std::size_t mock_dim = 0);

}  // namespace swpipe::pipeline
