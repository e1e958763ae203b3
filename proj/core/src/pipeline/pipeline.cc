#include "swpipe/pipeline/pipeline.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fmt/format.h>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "swpipe/audio.h"
#include "swpipe/classify/cross_validation.h"
#include "swpipe/classify/folds.h"
#include "swpipe/classify/model.h"
#include "swpipe/embedding_cache.h"
#include "swpipe/ensemble.h"
#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"

namespace swpipe::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;
using corpus::TaskKind;

namespace {

constexpr int kArtifactFormat = 1;
constexpr std::size_t kHashChars = 16;

Error missing_upstream(Stage stage, const std::string& detail) {
  return Error(ErrorCode::kMissingUpstream,
               fmt::format("stage '{}' has no usable artifacts: {}", to_string(stage), detail));
}

std::string short_hash(const json& j) { return sha256_hex(j.dump()).substr(0, kHashChars); }

std::string item_name(const std::string& pid, TaskKind task) {
  return fmt::format("{}_{}", encoders::escape_path_component(pid), corpus::to_string(task));
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCacheCorrupt, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// Loads an upstream artifact document and refuses one written under another
// config hash.
json load_artifact(Stage stage, const fs::path& path, const std::string& expected_hash) {
  if (!fs::exists(path)) throw missing_upstream(stage, fmt::format("{} not found", path.string()));
  json j = read_json(path);
  if (j.value("config_hash", std::string()) != expected_hash) {
    throw Error(ErrorCode::kMissingUpstream,
                fmt::format("{} was produced under config hash '{}' but '{}' is expected; "
                            "refusing to assemble artifacts from different configurations",
                            path.string(), j.value("config_hash", std::string()), expected_hash));
  }
  return j;
}

// Process-wide advisory lock on <cache_root>/.lock.
class CacheLock {
 public:
  explicit CacheLock(const fs::path& root) {
    fs::create_directories(root);
    const fs::path p = root / ".lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::kIo, fmt::format("cannot open lock file {}", p.string()));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIo,
                  fmt::format("another pipeline run holds {}; one run per cache root", p.string()));
    }
  }
  ~CacheLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  int fd_ = -1;
};

// Runs fn(worker, item) for item in [0, n) on up to `workers` threads. The
// first exception stops further dispatch and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (;;) {
        if (failed) return;
        const std::size_t i = next++;
        if (i >= n) return;
        try {
          fn(w, i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          failed = true;
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string member_file(int id, std::string_view suffix) {
  return fmt::format("member_{:02}{}", id, suffix);
}

}  // namespace

// --- stage graph -----------------------------------------------------------------

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kPreprocess: return "preprocess";
    case Stage::kEmbed: return "embed";
    case Stage::kTranscribe: return "transcribe";
    case Stage::kTextEmbed: return "text-embed";
    case Stage::kIndicators: return "indicators";
    case Stage::kTrain: return "train";
    case Stage::kPredict: return "predict";
    case Stage::kEnsemble: return "ensemble";
    case Stage::kReport: return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view token) {
  for (Stage s : all_stages()) {
    if (to_string(s) == token) return s;
  }
  return std::nullopt;
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {
      Stage::kPreprocess, Stage::kEmbed, Stage::kTranscribe, Stage::kTextEmbed, Stage::kIndicators,
      Stage::kTrain,      Stage::kPredict, Stage::kEnsemble, Stage::kReport};
  return stages;
}

std::vector<Stage> upstream_of(Stage stage) {
  switch (stage) {
    case Stage::kPreprocess: return {};
    case Stage::kEmbed:
    case Stage::kTranscribe: return {Stage::kPreprocess};
    case Stage::kTextEmbed:
    case Stage::kIndicators: return {Stage::kTranscribe};
    case Stage::kTrain: return {Stage::kEmbed, Stage::kTextEmbed, Stage::kIndicators};
    case Stage::kPredict: return {Stage::kTrain};
    case Stage::kEnsemble: return {Stage::kPredict};
    case Stage::kReport: return {Stage::kEnsemble, Stage::kIndicators};
  }
  return {};
}

// --- implementation --------------------------------------------------------------

class Pipeline::Impl {
 public:
  explicit Impl(Pipeline& p) : p_(p), cfg_(p.cfg_), corpus_(p.corpus_) {}

  // Participant-level scope after --only filtering, in manifest order.
  std::vector<const corpus::ParticipantRecord*> scope(const RunOptions& opt) const {
    std::vector<const corpus::ParticipantRecord*> out;
    for (const auto& id : opt.only) {
      if (!corpus_.find(id)) {
        throw Error(ErrorCode::kConfigInvalid, fmt::format("--only: unknown participant '{}'", id));
      }
    }
    for (const auto& r : corpus_.records()) {
      if (opt.only.empty() ||
          std::find(opt.only.begin(), opt.only.end(), r.participant_id) != opt.only.end()) {
        out.push_back(&r);
      }
    }
    return out;
  }

  // encoder id -> tasks it must embed
  std::map<std::string, std::set<TaskKind>> pairs(bool acoustic) const {
    std::map<std::string, std::set<TaskKind>> out;
    for (const auto& m : cfg_.ensemble.members) {
      if (acoustic ? ensemble::is_acoustic(m.source) : ensemble::is_text(m.source)) {
        out[std::string(ensemble::asset_id(m.source))].insert(m.task);
      }
    }
    return out;
  }

  void require_complete(Stage stage) const {
    const fs::path marker = p_.stage_dir(stage) / "stage.json";
    if (!fs::exists(marker)) {
      throw missing_upstream(stage, fmt::format("run 'swpipe {}' first", to_string(stage)));
    }
    load_artifact(stage, marker, p_.stage_hash(stage));
  }

  void finish_stage(Stage stage, const StageResult& r) const {
    json up = json::object();
    for (Stage u : upstream_of(stage)) up[std::string(to_string(u))] = p_.stage_hash(u);
    write_json(r.dir / "stage.json", {{"stage", to_string(stage)},
                                      {"config_hash", r.config_hash},
                                      {"format_version", kArtifactFormat},
                                      {"upstream", up}});
  }

  AudioClip load_preprocessed(const corpus::ParticipantRecord& r, TaskKind task,
                              preprocess::SegmentPlan* plan) const {
    const fs::path dir = p_.stage_dir(Stage::kPreprocess);
    const std::string hash = p_.stage_hash(Stage::kPreprocess);
    const json meta = load_artifact(Stage::kPreprocess,
                                    dir / "segments" / (item_name(r.participant_id, task) + ".json"), hash);
    if (plan) {
      plan->windows.clear();
      for (const auto& w : meta.at("windows")) plan->windows.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    }
    const fs::path wav = dir / "audio" / (item_name(r.participant_id, task) + ".wav");
    if (!fs::exists(wav)) throw missing_upstream(Stage::kPreprocess, wav.string() + " not found");
    return read_wav(wav);
  }

  encoders::Transcript load_transcript(const corpus::ParticipantRecord& r, TaskKind task) const {
    const json j = load_artifact(
        Stage::kTranscribe,
        p_.stage_dir(Stage::kTranscribe) / (item_name(r.participant_id, task) + ".json"),
        p_.stage_hash(Stage::kTranscribe));
    return {j.at("text").get<std::string>(), j.at("language").get<std::string>()};
  }

  std::optional<json> load_indicator_doc(const corpus::ParticipantRecord& r) const {
    if (!r.audio.count(TaskKind::kER)) return std::nullopt;
    return load_artifact(
        Stage::kIndicators,
        p_.stage_dir(Stage::kIndicators) / (encoders::escape_path_component(r.participant_id) + ".json"),
        p_.stage_hash(Stage::kIndicators));
  }

  // --- preprocess --------------------------------------------------------------

  StageResult preprocess(const RunOptions& opt, StageResult res) {
    auto items = scope(opt);
    std::vector<std::unique_ptr<preprocess::DenoiserAdapter>> denoisers;
    const fs::path seg_dir = res.dir / "segments";
    const fs::path audio_dir = res.dir / "audio";
    fs::create_directories(seg_dir);
    fs::create_directories(audio_dir);

    std::vector<const corpus::ParticipantRecord*> todo;
    for (const auto* r : items) {
      bool done = !opt.force;
      for (const auto& [task, _] : r->audio) {
        done = done && fs::exists(seg_dir / (item_name(r->participant_id, task) + ".json"));
      }
      if (done) {
        ++res.reused;
      } else {
        todo.push_back(r);
      }
    }
    const std::size_t workers = std::min(cfg_.workers, std::max<std::size_t>(1, todo.size()));
    for (std::size_t w = 0; w < workers && !todo.empty(); ++w) denoisers.push_back(p_.factory_->denoiser(cfg_));

    parallel_for(todo.size(), workers, [&](std::size_t w, std::size_t i) {
      const auto& r = *todo[i];
      for (const auto& [task, path] : r.audio) {
        AudioClip clip = read_wav(path);
        preprocess::DenoiseOutcome outcome;
        clip = preprocess::denoise(clip, *denoisers[w], cfg_.on_denoise_error, &outcome);
        clip = resample(clip, cfg_.sample_rate);
        const auto plan = preprocess::plan_segments(clip.duration(), cfg_.segment);
        const std::string name = item_name(r.participant_id, task);
        write_wav(audio_dir / (name + ".wav"), clip, WavEncoding::kFloat32);
        json windows = json::array();
        for (const auto& win : plan.windows) windows.push_back({win.start, win.end});
        write_json(seg_dir / (name + ".json"),
                   {{"participant_id", r.participant_id},
                    {"task", corpus::to_string(task)},
                    {"source", path.filename().string()},
                    {"duration_s", clip.duration()},
                    {"sample_rate", clip.sample_rate},
                    {"windows", windows},
                    {"denoiser", denoisers[w]->name()},
                    {"denoise_passthrough", outcome.passthrough},
                    {"denoise_error", outcome.error},
                    {"config_hash", res.config_hash}});
      }
    });
    res.work_done = todo.size();
    return res;
  }

  // --- embed / text-embed ------------------------------------------------------

  StageResult embed(const RunOptions& opt, StageResult res, bool acoustic) {
    const Stage upstream = acoustic ? Stage::kPreprocess : Stage::kTranscribe;
    require_complete(upstream);
    const auto needed = pairs(acoustic);
    const encoders::EmbeddingCache cache(res.dir);
    auto items = scope(opt);

    auto done = [&](const corpus::ParticipantRecord& r) {
      for (const auto& [enc, tasks] : needed) {
        for (TaskKind t : tasks) {
          if (!r.audio.count(t)) continue;
          if (!cache.load({r.participant_id, t, enc, encoders::Level::kSpeaker}, res.config_hash)) return false;
        }
      }
      return true;
    };
    std::vector<const corpus::ParticipantRecord*> todo;
    for (const auto* r : items) {
      if (!opt.force && done(*r)) {
        ++res.reused;
      } else {
        todo.push_back(r);
      }
    }
    const std::size_t workers = std::min(cfg_.workers, std::max<std::size_t>(1, todo.size()));
    std::vector<std::map<std::string, std::unique_ptr<encoders::AcousticEncoderAdapter>>> ac(workers);
    std::vector<std::map<std::string, std::unique_ptr<encoders::TextEncoderAdapter>>> tx(workers);
    if (!todo.empty()) {
      for (std::size_t w = 0; w < workers; ++w) {
        for (const auto& [enc, _] : needed) {
          if (acoustic) {
            ac[w][enc] = p_.factory_->acoustic(cfg_, enc);
          } else {
            tx[w][enc] = p_.factory_->text(cfg_, enc);
          }
        }
      }
    }

    parallel_for(todo.size(), workers, [&](std::size_t w, std::size_t i) {
      const auto& r = *todo[i];
      for (const auto& [enc, tasks] : needed) {
        for (TaskKind t : tasks) {
          if (!r.audio.count(t)) continue;
          const encoders::SourceTag tag{r.participant_id, t};
          encoders::Embedding e;
          if (acoustic) {
            preprocess::SegmentPlan plan;
            const AudioClip clip = load_preprocessed(r, t, &plan);
            e = encoders::pool_speaker(encoders::embed_segments(clip, plan, *ac[w][enc], tag));
          } else {
            e = encoders::embed_text(load_transcript(r, t), *tx[w][enc], tag);
          }
          cache.store(e, res.config_hash);
        }
      }
    });
    res.work_done = todo.size();
    return res;
  }

  // --- transcribe --------------------------------------------------------------

  StageResult transcribe(const RunOptions& opt, StageResult res) {
    require_complete(Stage::kPreprocess);
    const auto tasks = cfg_.transcribe_tasks();
    auto path_for = [&](const std::string& pid, TaskKind t) {
      return res.dir / (item_name(pid, t) + ".json");
    };
    std::vector<const corpus::ParticipantRecord*> todo;
    for (const auto* r : scope(opt)) {
      bool done = !opt.force;
      for (TaskKind t : tasks) {
        if (r->audio.count(t)) done = done && fs::exists(path_for(r->participant_id, t));
      }
      if (done) {
        ++res.reused;
      } else {
        todo.push_back(r);
      }
    }
    const std::size_t workers = std::min(cfg_.workers, std::max<std::size_t>(1, todo.size()));
    std::vector<std::unique_ptr<encoders::AsrAdapter>> asr;
    for (std::size_t w = 0; w < workers && !todo.empty(); ++w) asr.push_back(p_.factory_->asr(cfg_));

    parallel_for(todo.size(), workers, [&](std::size_t w, std::size_t i) {
      const auto& r = *todo[i];
      for (TaskKind t : tasks) {
        if (!r.audio.count(t)) continue;
        const auto tr = asr[w]->transcribe(load_preprocessed(r, t, nullptr));
        write_json(path_for(r.participant_id, t), {{"participant_id", r.participant_id},
                                                  {"task", corpus::to_string(t)},
                                                  {"asr_id", asr[w]->asr_id()},
                                                  {"text", tr.text},
                                                  {"language", tr.language},
                                                  {"config_hash", res.config_hash}});
      }
    });
    res.work_done = todo.size();
    return res;
  }

  // --- indicators --------------------------------------------------------------

  StageResult indicators(const RunOptions& opt, StageResult res) {
    require_complete(Stage::kTranscribe);
    const indicators::ResponseCache responses(cfg_.cache_root / "llm-responses");
    std::vector<const corpus::ParticipantRecord*> todo;
    for (const auto* r : scope(opt)) {
      if (!r->audio.count(TaskKind::kER)) continue;
      const fs::path out = res.dir / (encoders::escape_path_component(r->participant_id) + ".json");
      if (!opt.force && fs::exists(out)) {
        ++res.reused;
      } else {
        todo.push_back(r);
      }
    }
    const std::size_t workers = std::min(cfg_.workers, std::max<std::size_t>(1, todo.size()));
    std::vector<std::unique_ptr<indicators::LlmAdapter>> llms;
    for (std::size_t w = 0; w < workers && !todo.empty(); ++w) llms.push_back(p_.factory_->llm(cfg_));

    indicators::ExtractOptions eo;
    eo.retries = cfg_.llm_retries;
    eo.decoding = cfg_.decoding;
    eo.retry_nonce = cfg_.retry_nonce;
    eo.prompt = &cfg_.prompt();
    eo.cache = &responses;

    parallel_for(todo.size(), workers, [&](std::size_t w, std::size_t i) {
      const auto& r = *todo[i];
      const auto transcript = load_transcript(r, TaskKind::kER);
      const auto result = indicators::extract_indicators(transcript, *llms[w], eo);
      json flags = json::object();
      json evidence = json::object();
      for (auto kind : indicators::kAllIndicators) {
        const auto k = static_cast<std::size_t>(kind);
        flags[std::string(indicators::key_name(kind))] = result.vector.flags[k];
        evidence[std::string(indicators::key_name(kind))] = result.vector.evidence[k];
      }
      write_json(res.dir / (encoders::escape_path_component(r.participant_id) + ".json"),
                 {{"participant_id", r.participant_id},
                  {"task", "ER"},
                  {"flags", flags},
                  {"evidence", evidence},
                  {"rendered", indicators::render_response(result.vector)},
                  {"raw_response", result.raw_response},
                  {"retry_count", result.retry_count},
                  {"prompt_version", result.vector.prompt_version},
                  {"model_id", result.vector.model_id},
                  {"config_hash", res.config_hash}});
    });
    res.work_done = todo.size();
    return res;
  }

  static indicators::IndicatorVector vector_from_doc(const json& j) {
    indicators::IndicatorVector v;
    for (auto kind : indicators::kAllIndicators) {
      const auto k = static_cast<std::size_t>(kind);
      const std::string key(indicators::key_name(kind));
      v.flags[k] = j.at("flags").at(key).get<int>();
      v.evidence[k] = j.at("evidence").at(key).get<std::vector<std::string>>();
    }
    v.prompt_version = j.at("prompt_version").get<std::string>();
    v.model_id = j.at("model_id").get<std::string>();
    indicators::check_invariants(v);
    return v;
  }

  // --- features ----------------------------------------------------------------

  // Feature row for one member, or nullopt when the participant has no audio
  // for the member's task. Missing artifacts for present audio are
  // MissingUpstream.
  std::optional<std::vector<double>> features(const ensemble::MemberSpec& m,
                                              const corpus::ParticipantRecord& r) const {
    if (!r.audio.count(m.task)) return std::nullopt;
    if (m.source == ensemble::FeatureSource::kDeepSeek) {
      const auto doc = load_indicator_doc(r);
      const auto row = indicators::to_feature_row(vector_from_doc(*doc));
      return std::vector<double>(row.begin(), row.end());
    }
    const bool acoustic = ensemble::is_acoustic(m.source);
    const Stage stage = acoustic ? Stage::kEmbed : Stage::kTextEmbed;
    const encoders::EmbeddingCache cache(p_.stage_dir(stage));
    const encoders::EmbeddingSource key{r.participant_id, m.task, std::string(ensemble::asset_id(m.source)),
                                        encoders::Level::kSpeaker};
    const auto e = cache.load(key, p_.stage_hash(stage));
    if (!e) {
      throw missing_upstream(stage, fmt::format("no {} embedding for {} / {}", key.encoder_id,
                                                r.participant_id, corpus::to_string(m.task)));
    }
    return std::vector<double>(e->vector.begin(), e->vector.end());
  }

  // --- train -------------------------------------------------------------------

  classify::TrainedModel fit(const ensemble::MemberSpec& m, const classify::FeatureMatrix& x,
                             std::span<const int> y, std::uint64_t seed) const {
    if (m.classifier == classify::ModelKind::kRf) return classify::fit_rf(x, y, cfg_.rf, seed);
    return classify::fit_mlp(x, y, cfg_.mlp, seed);
  }

  StageResult train(const RunOptions& opt, StageResult res) {
    for (Stage u : upstream_of(Stage::kTrain)) require_complete(u);
    std::vector<classify::CvTableRow> table;
    for (const auto& m : cfg_.ensemble.members) {
      const fs::path meta_path = res.dir / member_file(m.member_id, ".json");
      if (!opt.force && fs::exists(meta_path)) {
        ++res.reused;
        const json meta = read_json(meta_path);
        if (meta.contains("cv")) {
          table.push_back({m.member_id, std::string(ensemble::display_name(m.source)),
                           std::string(corpus::to_string(m.task)), std::string(classify::to_string(m.classifier)),
                           meta["cv"].at("mean_accuracy").get<double>(), meta["cv"].at("mean_f1").get<double>()});
        }
        continue;
      }
      classify::FeatureMatrix x;
      std::vector<int> y;
      std::vector<std::string> ids;
      for (const auto& r : corpus_.records()) {
        if (r.split != corpus::Split::kTrain || !r.label) continue;
        auto row = features(m, r);
        if (!row) continue;
        if (x.empty()) x = classify::FeatureMatrix(0, row->size());
        x.append_row(*row);
        y.push_back(*r.label);
        ids.push_back(r.participant_id);
      }
      if (x.empty()) {
        throw Error(ErrorCode::kTooFewSamples,
                    fmt::format("member {}: no labeled training participants", m.member_id));
      }
      const std::uint64_t seed = derive_seed(cfg_.seed, fmt::format("train/member/{}", m.member_id));
      json meta = {{"member_id", m.member_id},
                   {"model", ensemble::display_name(m.source)},
                   {"task", corpus::to_string(m.task)},
                   {"classifier", classify::to_string(m.classifier)},
                   {"n_train", ids.size()},
                   {"participants", ids},
                   {"refit", to_string(cfg_.refit)},
                   {"config_hash", res.config_hash}};
      if (cfg_.refit == RefitMode::kFull) {
        classify::save_model(fit(m, x, y, seed), res.dir / member_file(m.member_id, ".model"));
        meta["models"] = {member_file(m.member_id, ".model")};
      } else {
        const auto folds = classify::make_fold_indices(y, cfg_.folds, derive_seed(seed, "folds"));
        json files = json::array();
        for (std::size_t f = 0; f < folds.size(); ++f) {
          std::vector<std::size_t> keep;
          for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g != f) keep.insert(keep.end(), folds[g].begin(), folds[g].end());
          }
          std::sort(keep.begin(), keep.end());
          std::vector<int> yk;
          for (auto i : keep) yk.push_back(y[i]);
          const std::string name = member_file(m.member_id, fmt::format("_fold{:02}.model", f));
          classify::save_model(fit(m, x.select_rows(keep), yk, derive_seed(seed, fmt::format("fold/{}", f))),
                               res.dir / name);
          files.push_back(name);
        }
        meta["models"] = files;
      }
      if (cfg_.cross_validate) {
        const classify::Trainer trainer = m.classifier == classify::ModelKind::kRf
                                              ? classify::rf_trainer(cfg_.rf)
                                              : classify::mlp_trainer(cfg_.mlp);
        const auto report = classify::cross_validate(ids, x, y, trainer, cfg_.folds, derive_seed(seed, "cv"));
        meta["cv"] = json::parse(classify::cv_report_json(report));
        table.push_back({m.member_id, std::string(ensemble::display_name(m.source)),
                         std::string(corpus::to_string(m.task)), std::string(classify::to_string(m.classifier)),
                         report.mean_accuracy, report.mean_f1});
      }
      write_json(meta_path, meta);
      ++res.work_done;
    }
    if (cfg_.cross_validate) write_file_atomic(res.dir / "cv_table.txt", classify::format_cv_table(table));
    return res;
  }

  // --- predict -----------------------------------------------------------------

  StageResult predict(const RunOptions& opt, StageResult res) {
    require_complete(Stage::kTrain);
    const fs::path train_dir = p_.stage_dir(Stage::kTrain);
    const std::string train_hash = p_.stage_hash(Stage::kTrain);
    for (const auto& m : cfg_.ensemble.members) {
      const fs::path out = res.dir / member_file(m.member_id, ".csv");
      if (!opt.force && fs::exists(out)) {
        ++res.reused;
        continue;
      }
      const json meta = load_artifact(Stage::kTrain, train_dir / member_file(m.member_id, ".json"), train_hash);
      std::vector<classify::TrainedModel> models;
      for (const auto& f : meta.at("models")) models.push_back(classify::load_model(train_dir / f.get<std::string>()));

      std::vector<ensemble::MemberPredictionRow> rows;
      for (const auto& r : corpus_.records()) {
        auto row = features(m, r);
        if (!row) continue;
        const classify::FeatureMatrix x(1, row->size(), *row);
        double score = 0.0;
        for (const auto& model : models) score += classify::predict(model, x).scores[0];
        score /= static_cast<double>(models.size());
        rows.push_back({r.participant_id, m.member_id, classify::decide_label(1.0 - score, score), score});
      }
      ensemble::write_prediction_file(out, rows);
      ++res.work_done;
    }
    return res;
  }

  // --- ensemble ----------------------------------------------------------------

  StageResult run_ensemble(const RunOptions& opt, StageResult res) {
    require_complete(Stage::kPredict);
    const fs::path records_path = res.dir / "records.json";
    if (!opt.force && fs::exists(records_path)) {
      res.reused = 1;
      return res;
    }
    ensemble::MemberPredictions preds;
    for (const auto& m : cfg_.ensemble.members) {
      const fs::path f = p_.stage_dir(Stage::kPredict) / member_file(m.member_id, ".csv");
      if (!fs::exists(f)) throw missing_upstream(Stage::kPredict, f.string() + " not found");
      for (const auto& row : ensemble::read_prediction_file(f)) preds[row.member_id][row.participant_id] = row.vote;
    }
    std::vector<std::string> ids;
    for (const auto& r : corpus_.records()) ids.push_back(r.participant_id);
    const auto records = ensemble::combine(cfg_.ensemble, preds, &ids);

    json metrics = json::object();
    std::vector<ensemble::VotingTableRow> table(1);
    table[0].label = cfg_.ensemble.name + " " + cfg_.ensemble.member_tuple();
    for (auto split : corpus::kAllSplits) {
      std::vector<std::string> in_split;
      std::map<std::string, int> labels;
      for (const auto& r : corpus_.records()) {
        if (r.split != split || !r.label) continue;
        in_split.push_back(r.participant_id);
        labels[r.participant_id] = *r.label;
      }
      if (in_split.empty()) continue;
      const auto ev = ensemble::evaluate_ensemble(cfg_.ensemble, preds, labels, &in_split);
      metrics[std::string(corpus::to_string(split))] = {
          {"n", in_split.size()},
          {"accuracy", ev.metrics.accuracy},
          {"precision", ev.metrics.precision},
          {"recall", ev.metrics.recall},
          {"f1", ev.metrics.f1},
          {"abstained", ev.abstained},
          {"decided_by_tie_rule", ev.decided_by_tie}};
      if (split == corpus::Split::kDev) table[0].dev = ev.metrics;
      if (split == corpus::Split::kTest) table[0].test = ev.metrics;
    }

    std::string decisions = "participant_id,final,w_pos,w_neg,decided_by_tie_rule\n";
    for (const auto& rec : records) {
      decisions += csv_line({rec.participant_id, rec.result.final ? std::to_string(*rec.result.final) : "",
                             ensemble::format_weight(rec.result.w_pos), ensemble::format_weight(rec.result.w_neg),
                             rec.result.tie ? "1" : "0"});
    }
    write_file_atomic(res.dir / "decisions.csv", decisions);
    write_json(res.dir / "metrics.json", {{"config_hash", res.config_hash}, {"splits", metrics}});
    write_file_atomic(res.dir / "voting_table.txt", ensemble::format_voting_table(table));
    write_json(records_path, {{"config_hash", res.config_hash},
                              {"spec", json::parse(ensemble::spec_to_json(cfg_.ensemble))},
                              {"records", json::parse(ensemble::records_to_json(records))}});
    res.work_done = 1;
    return res;
  }

  // --- report ------------------------------------------------------------------

  StageResult report(const RunOptions& opt, StageResult res) {
    require_complete(Stage::kEnsemble);
    require_complete(Stage::kIndicators);
    for (const auto* r : scope(opt)) {
      const std::string base = encoders::escape_path_component(r->participant_id);
      if (!opt.force && fs::exists(res.dir / (base + ".json")) && fs::exists(res.dir / (base + ".txt"))) {
        ++res.reused;
        continue;
      }
      const auto rep = p_.render_report(r->participant_id);
      write_file_atomic(res.dir / (base + ".txt"), rep.text());
      write_file_atomic(res.dir / (base + ".json"), rep.json());
      ++res.work_done;
    }
    return res;
  }

  EvidenceReport render(const std::string& pid) const {
    const auto* r = corpus_.find(pid);
    if (!r) throw Error(ErrorCode::kConfigInvalid, fmt::format("unknown participant '{}'", pid));
    require_complete(Stage::kEnsemble);
    const json doc = load_artifact(Stage::kEnsemble, p_.stage_dir(Stage::kEnsemble) / "records.json",
                                   p_.stage_hash(Stage::kEnsemble));
    const json* rec = nullptr;
    for (const auto& x : doc.at("records")) {
      if (x.at("participant_id") == pid) rec = &x;
    }
    if (!rec) throw missing_upstream(Stage::kEnsemble, fmt::format("no ensemble record for '{}'", pid));

    EvidenceReport rep;
    rep.participant_id = pid;
    rep.split = std::string(corpus::to_string(r->split));
    rep.label = r->label;
    if (!rec->at("final").is_null()) rep.final = rec->at("final").get<int>();
    rep.decided_by_tie_rule = rec->at("decided_by_tie_rule").get<bool>();
    rep.w_pos = rec->at("w_pos").get<std::string>();
    rep.w_neg = rec->at("w_neg").get<std::string>();
    rep.ensemble_name = cfg_.ensemble.name;
    rep.ensemble_members = cfg_.ensemble.member_tuple();
    rep.tie_break = std::string(ensemble::to_string(cfg_.ensemble.tie_break));

    for (const auto& m : cfg_.ensemble.members) {
      MemberVoteLine line;
      line.member_id = m.member_id;
      line.model = std::string(ensemble::display_name(m.source));
      line.task = std::string(corpus::to_string(m.task));
      line.classifier = std::string(classify::to_string(m.classifier));
      line.weight = ensemble::format_weight(m.weight);
      const fs::path f = p_.stage_dir(Stage::kPredict) / member_file(m.member_id, ".csv");
      if (!fs::exists(f)) throw missing_upstream(Stage::kPredict, f.string() + " not found");
      for (const auto& row : ensemble::read_prediction_file(f)) {
        if (row.participant_id == pid) {
          line.vote = row.vote;
          line.score = row.score;
        }
      }
      rep.members.push_back(line);
    }

    if (r->audio.count(TaskKind::kER)) {
      require_complete(Stage::kIndicators);
      const auto ind = load_indicator_doc(*r);
      rep.indicators = vector_from_doc(*ind);
      rep.indicator_block = indicators::render_response(*rep.indicators);
    }
    for (const auto& [task, path] : r->audio) {
      rep.audio.push_back(fmt::format("{}: {}", corpus::to_string(task), path.filename().string()));
    }
    for (Stage s : all_stages()) {
      if (s == Stage::kReport) continue;
      rep.versions.emplace_back(std::string(to_string(s)), p_.stage_hash(s));
    }
    rep.versions.emplace_back("prompt", cfg_.prompt().version());
    rep.versions.emplace_back("llm", cfg_.llm_model);
    rep.generated_at = utc_now();
    return rep;
  }

 private:
  Pipeline& p_;
  const PipelineConfig& cfg_;
  const corpus::Corpus& corpus_;
};

// --- Pipeline --------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<AdapterFactory> factory)
    : cfg_(std::move(cfg)), factory_(std::move(factory)) {
  cfg_.validate();
  if (!factory_) factory_ = std::make_shared<DefaultAdapterFactory>();
  corpus_ = corpus::load_manifest(cfg_.manifest);
  // Content, not location: moving the corpus keeps artifacts valid.
  json records = json::array();
  for (const auto& r : corpus_.records()) {
    json audio = json::array();
    for (const auto& [task, path] : r.audio) {
      audio.push_back({corpus::to_string(task), path.filename().string(), sha256_hex(read_file(path))});
    }
    records.push_back({r.participant_id, corpus::to_string(r.split),
                       r.label ? json(*r.label) : json(nullptr), r.age ? json(*r.age) : json(nullptr),
                       r.gender ? json(*r.gender == corpus::Gender::kMale ? "M" : "F") : json(nullptr),
                       audio});
  }
  corpus_digest_ = sha256_hex(records.dump());
}

std::string Pipeline::stage_hash(Stage stage) const {
  json j = {{"stage", to_string(stage)}, {"format_version", kArtifactFormat}};
  auto up = [&](Stage s) { return stage_hash(s); };
  switch (stage) {
    case Stage::kPreprocess: {
      j["corpus"] = corpus_digest_;
      j["window_s"] = cfg_.segment.window_s;
      j["overlap"] = cfg_.segment.overlap;
      j["min_tail_s"] = cfg_.segment.min_tail_s;
      j["sample_rate"] = cfg_.sample_rate;
      j["denoiser"] = cfg_.denoiser;
      j["on_denoise_error"] = cfg_.on_denoise_error == preprocess::DenoiseErrorPolicy::kFail ? "fail" : "passthrough";
      break;
    }
    case Stage::kEmbed:
    case Stage::kTextEmbed: {
      const bool acoustic = stage == Stage::kEmbed;
      j["upstream"] = up(acoustic ? Stage::kPreprocess : Stage::kTranscribe);
      json enc = json::object();
      for (const auto& id : acoustic ? cfg_.acoustic_encoders() : cfg_.text_encoders()) {
        const auto& ep = cfg_.adapters.at(id);
        enc[id] = {{"endpoint", ep.endpoint}, {"dim", ep.dim ? json(*ep.dim) : json(nullptr)}};
      }
      j["encoders"] = enc;
      j["seed"] = cfg_.seed;
      break;
    }
    case Stage::kTranscribe: {
      j["upstream"] = up(Stage::kPreprocess);
      j["asr"] = cfg_.asr;
      j["endpoint"] = cfg_.adapters.at(cfg_.asr).endpoint;
      json tasks = json::array();
      for (auto t : cfg_.transcribe_tasks()) tasks.push_back(corpus::to_string(t));
      j["tasks"] = tasks;
      j["seed"] = cfg_.seed;
      break;
    }
    case Stage::kIndicators:
      j["upstream"] = up(Stage::kTranscribe);
      j["model"] = cfg_.llm_model;
      j["endpoint"] = cfg_.adapters.at(cfg_.llm_model).endpoint;
      j["prompt_version"] = cfg_.prompt().version();
      j["temperature"] = cfg_.decoding.temperature;
      j["max_tokens"] = cfg_.decoding.max_tokens;
      j["retries"] = cfg_.llm_retries;
      break;
    case Stage::kTrain: {
      j["upstream"] = {up(Stage::kEmbed), up(Stage::kTextEmbed), up(Stage::kIndicators)};
      json members = json::array();
      for (const auto& m : cfg_.ensemble.members) members.push_back(m.member_id);
      j["members"] = members;
      const auto& mlp = cfg_.mlp;
      j["mlp"] = {{"hidden", mlp.hidden},         {"dropout", mlp.dropout},     {"lr", mlp.learning_rate},
                  {"beta1", mlp.beta1},           {"beta2", mlp.beta2},         {"eps", mlp.epsilon},
                  {"batch", mlp.batch_size},      {"epochs", mlp.max_epochs},   {"patience", mlp.patience},
                  {"val_fraction", mlp.val_fraction}, {"class_weights", mlp.class_weights}};
      const auto& rf = cfg_.rf;
      j["rf"] = {{"n_trees", rf.n_trees},
                 {"max_depth", rf.max_depth ? json(*rf.max_depth) : json(nullptr)},
                 {"mtry", rf.mtry ? json(*rf.mtry) : json(nullptr)},
                 {"min_samples_leaf", rf.min_samples_leaf},
                 {"bootstrap", rf.bootstrap}};
      j["refit"] = to_string(cfg_.refit);
      j["folds"] = cfg_.folds;
      j["cross_validate"] = cfg_.cross_validate;
      j["seed"] = cfg_.seed;
      break;
    }
    case Stage::kPredict:
      j["upstream"] = up(Stage::kTrain);
      break;
    case Stage::kEnsemble:
      j["upstream"] = up(Stage::kPredict);
      j["spec"] = json::parse(ensemble::spec_to_json(cfg_.ensemble));
      break;
    case Stage::kReport:
      j["upstream"] = {up(Stage::kEnsemble), up(Stage::kIndicators)};
      break;
  }
  return short_hash(j);
}

fs::path Pipeline::stage_dir(Stage stage) const {
  return cfg_.cache_root / std::string(to_string(stage)) / stage_hash(stage);
}

StageResult Pipeline::run_stage(Stage stage, const RunOptions& options) {
  CacheLock lock(cfg_.cache_root);
  Impl impl(*this);
  StageResult res;
  res.stage = stage;
  res.config_hash = stage_hash(stage);
  res.dir = stage_dir(stage);
  fs::create_directories(res.dir);
  switch (stage) {
    case Stage::kPreprocess: res = impl.preprocess(options, res); break;
    case Stage::kEmbed: res = impl.embed(options, res, true); break;
    case Stage::kTranscribe: res = impl.transcribe(options, res); break;
    case Stage::kTextEmbed: res = impl.embed(options, res, false); break;
    case Stage::kIndicators: res = impl.indicators(options, res); break;
    case Stage::kTrain: res = impl.train(options, res); break;
    case Stage::kPredict: res = impl.predict(options, res); break;
    case Stage::kEnsemble: res = impl.run_ensemble(options, res); break;
    case Stage::kReport: res = impl.report(options, res); break;
  }
  impl.finish_stage(stage, res);
  return res;
}

std::vector<StageResult> Pipeline::run_all(const RunOptions& options) {
  std::vector<StageResult> out;
  for (Stage s : all_stages()) out.push_back(run_stage(s, options));
  return out;
}

EvidenceReport Pipeline::render_report(const std::string& participant_id) const {
  return Impl(const_cast<Pipeline&>(*this)).render(participant_id);
}

classify::FeatureTable Pipeline::member_features(int member_id) const {
  const auto* m = cfg_.ensemble.find(member_id);
  if (!m) throw Error(ErrorCode::kUnknownMember, fmt::format("member {} is not in the ensemble", member_id));
  Impl impl(const_cast<Pipeline&>(*this));
  classify::FeatureTable t;
  for (const auto& r : corpus_.records()) {
    auto row = impl.features(*m, r);
    if (!row) continue;
    if (t.x.empty()) t.x = classify::FeatureMatrix(0, row->size());
    t.x.append_row(*row);
    t.participant_ids.push_back(r.participant_id);
  }
  return t;
}

}  // namespace swpipe::pipeline
