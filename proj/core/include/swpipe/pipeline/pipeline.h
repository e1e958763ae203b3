#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/classify/feature_io.h"
#include "swpipe/encoders.h"
#include "swpipe/indicators.h"
#include "swpipe/pipeline/config.h"
#include "swpipe/preprocess.h"

namespace swpipe::pipeline {

enum class Stage {
  kPreprocess,
  kEmbed,
  kTranscribe,
  kTextEmbed,
  kIndicators,
  kTrain,
  kPredict,
  kEnsemble,
  kReport,
};

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view token);
// Topological order.
const std::vector<Stage>& all_stages();
// Direct upstream stages:
//   preprocess -> {embed, transcribe}; transcribe -> {text-embed, indicators};
//   {embed, text-embed, indicators} -> train -> predict -> ensemble -> report.
std::vector<Stage> upstream_of(Stage stage);

// Creates adapter instances. One instance serves one request at a time, so
// stages ask for one instance per worker.
class AdapterFactory {
 public:
  virtual ~AdapterFactory() = default;
  virtual std::unique_ptr<preprocess::DenoiserAdapter> denoiser(const PipelineConfig& cfg) = 0;
  virtual std::unique_ptr<encoders::AcousticEncoderAdapter> acoustic(const PipelineConfig& cfg,
                                                                     const std::string& id) = 0;
  virtual std::unique_ptr<encoders::TextEncoderAdapter> text(const PipelineConfig& cfg,
                                                             const std::string& id) = 0;
  virtual std::unique_ptr<encoders::AsrAdapter> asr(const PipelineConfig& cfg) = 0;
  virtual std::unique_ptr<indicators::LlmAdapter> llm(const PipelineConfig& cfg) = 0;
};

// "mock" endpoints map to the swpipe::mocks twins seeded from cfg.seed;
// exec:/unix: endpoints to the line protocol; http(s):// to HttpLlm with
// LLM_API_KEY. The remote denoiser receives DENOISER_ACCESS_KEY.
class DefaultAdapterFactory final : public AdapterFactory {
 public:
  std::unique_ptr<preprocess::DenoiserAdapter> denoiser(const PipelineConfig& cfg) override;
  std::unique_ptr<encoders::AcousticEncoderAdapter> acoustic(const PipelineConfig& cfg,
                                                             const std::string& id) override;
  std::unique_ptr<encoders::TextEncoderAdapter> text(const PipelineConfig& cfg,
                                                     const std::string& id) override;
  std::unique_ptr<encoders::AsrAdapter> asr(const PipelineConfig& cfg) override;
  std::unique_ptr<indicators::LlmAdapter> llm(const PipelineConfig& cfg) override;
};

struct RunOptions {
  // Restricts participant-level stages (preprocess, embed, transcribe,
  // text-embed, indicators, report). Corpus-level stages ignore it.
  std::vector<std::string> only;
  bool force = false;  // redo work even when artifacts are current
};

struct StageResult {
  Stage stage = Stage::kPreprocess;
  std::string config_hash;
  std::filesystem::path dir;
  std::size_t work_done = 0;  // units (participants or members) computed
  std::size_t reused = 0;     // units already present
};

struct MemberVoteLine {
  int member_id = 0;
  std::string model;
  std::string task;
  std::string classifier;
  std::string weight;
  std::optional<int> vote;     // nullopt: member absent
  std::optional<double> score;
};

struct EvidenceReport {
  std::string participant_id;
  std::string split;
  std::optional<int> label;
  std::optional<int> final;  // nullopt only when the ensemble abstains
  bool decided_by_tie_rule = false;
  std::string w_pos;
  std::string w_neg;
  std::string ensemble_name;
  std::string ensemble_members;
  std::string tie_break;
  std::vector<MemberVoteLine> members;
  std::optional<indicators::IndicatorVector> indicators;
  std::string indicator_block;  // canonical response text, quotes verbatim
  std::vector<std::string> audio;  // "ER: <basename>"
  std::vector<std::pair<std::string, std::string>> versions;
  std::string generated_at;  // ISO 8601 UTC, kept out of text()

  std::string json() const;  // includes generated_at
  std::string text() const;  // deterministic body
};

// Runs stages against one cache root. Holds `<cache_root>/.lock` for the
// duration of each call; a concurrent run fails with Io.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, std::shared_ptr<AdapterFactory> factory = nullptr);

  const PipelineConfig& config() const { return cfg_; }
  const corpus::Corpus& corpus() const { return corpus_; }

  // Chained hash: the stage's own settings plus the hashes of its upstream
  // stages.
  std::string stage_hash(Stage stage) const;
  std::filesystem::path stage_dir(Stage stage) const;

  // Throws MissingUpstream (naming the stage) when an upstream artifact set
  // is absent, AdapterFailure, ConfigInvalid.
  StageResult run_stage(Stage stage, const RunOptions& options = {});
  // Every stage in order.
  std::vector<StageResult> run_all(const RunOptions& options = {});

  // Assembles a report from cached ensemble, prediction and indicator
  // artifacts. Throws MissingUpstream.
  EvidenceReport render_report(const std::string& participant_id) const;

  // Cached feature rows of one ensemble member for every participant that
  // has the member's task. Throws UnknownMember, MissingUpstream.
  classify::FeatureTable member_features(int member_id) const;

 private:
  class Impl;
  PipelineConfig cfg_;
  std::shared_ptr<AdapterFactory> factory_;
  corpus::Corpus corpus_;
  std::string corpus_digest_;  // manifest text plus audio content
};

struct DoctorCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

// Loads the corpus, instantiates every configured adapter, runs "describe"
// on remote ones and checks required credentials.
std::vector<DoctorCheck> doctor(const PipelineConfig& cfg,
                                std::shared_ptr<AdapterFactory> factory = nullptr);

}  // namespace swpipe::pipeline
