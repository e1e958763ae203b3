#include "cli.h"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <iostream>
#include <nlohmann/json.hpp>

#include "swpipe/adapter_protocol.h"
#include "swpipe/audio.h"
#include "swpipe/classify/cross_validation.h"
#include "swpipe/classify/feature_io.h"
#include "swpipe/classify/model.h"
#include "swpipe/corpus.h"
#include "swpipe/ensemble.h"
#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/io.h"
#include "swpipe/mock_adapters.h"
#include "swpipe/pipeline/pipeline.h"
#include "swpipe/pipeline/synthetic.h"

namespace swpipe::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kMalformedManifest:
    case ErrorCode::kMissingAudio:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kParseError:
    case ErrorCode::kUnknownCombination:
    case ErrorCode::kUnknownMember:
    case ErrorCode::kMissingLabels:
      return 2;
    case ErrorCode::kMissingUpstream:
      return 3;
    case ErrorCode::kAdapterFailure:
    case ErrorCode::kExtractionFailed:
      return 4;
    default:
      return 1;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct StageArgs {
  std::string config;
  std::string only;
  bool force = false;
};

void add_stage_options(CLI::App* sub, StageArgs& a, bool required = true) {
  auto* opt = sub->add_option("--config,-c", a.config, "Pipeline config (JSON)");
  if (required) opt->required();
  sub->add_option("--only", a.only, "Comma-separated participant ids");
  sub->add_flag("--force", a.force, "Recompute even when artifacts are current");
}

void print_result(const pipeline::StageResult& r) {
  fmt::print("{:<11} [{}] computed {}, reused {} -> {}\n", pipeline::to_string(r.stage), r.config_hash,
             r.work_done, r.reused, r.dir.string());
}

int run_stages(const StageArgs& a, std::optional<pipeline::Stage> stage) {
  if (a.config.empty()) throw Error(ErrorCode::kConfigInvalid, "--config is required");
  pipeline::Pipeline p(pipeline::load_config(a.config));
  pipeline::RunOptions opt{split_list(a.only), a.force};
  if (stage) {
    print_result(p.run_stage(*stage, opt));
  } else {
    for (auto s : pipeline::all_stages()) print_result(p.run_stage(s, opt));
  }
  return 0;
}

// --- corpus ------------------------------------------------------------------

int corpus_validate(const std::string& path) {
  const auto c = corpus::load_manifest(path);
  std::size_t recordings = 0;
  for (const auto& r : c.records()) recordings += r.audio.size();
  fmt::print("ok: {} participants, {} recordings\n", c.size(), recordings);
  return 0;
}

int corpus_summarize(const std::string& path) {
  fmt::print("{}", corpus::format_summary(corpus::summarize(corpus::load_manifest(path))));
  return 0;
}

// --- indicators extract ------------------------------------------------------

struct ExtractArgs {
  std::string manifest;
  std::string task = "ER";
  std::string model = "deepseek-r1";
  std::string llm = "mock";
  std::string asr = "mock";
  std::string cache;
  std::string prompt;
  std::string only;
  std::string out;
  int retries = 2;
  std::uint64_t seed = 0;
};

int indicators_extract(const ExtractArgs& a) {
  if (a.task != "ER") {
    throw Error(ErrorCode::kInvalidParams,
                fmt::format("--task {}: indicators are defined on ER transcripts only", a.task));
  }
  const auto corpus = corpus::load_manifest(a.manifest);
  std::optional<indicators::PromptTemplate> tmpl;
  if (!a.prompt.empty()) tmpl = indicators::PromptTemplate::from_file(a.prompt);
  const auto& prompt = tmpl ? *tmpl : indicators::PromptTemplate::builtin();

  std::unique_ptr<indicators::LlmAdapter> llm;
  if (a.llm == "mock") {
    llm = std::make_unique<mocks::KeywordLlm>(a.model, prompt);
  } else if (a.llm.starts_with("http://") || a.llm.starts_with("https://")) {
    const char* key = std::getenv("LLM_API_KEY");
    llm = std::make_unique<adapters::HttpLlm>(a.model, a.llm, key ? key : "");
  } else {
    llm = std::make_unique<adapters::RemoteLlm>(a.model, adapters::open_channel(a.llm));
  }
  std::unique_ptr<encoders::AsrAdapter> asr;
  if (a.asr == "mock") {
    asr = std::make_unique<mocks::MockAsr>("whisper-large-v3", derive_seed(a.seed, "mock/asr/whisper-large-v3"));
  } else {
    asr = std::make_unique<adapters::RemoteAsr>("whisper-large-v3", adapters::open_channel(a.asr));
  }
  std::optional<indicators::ResponseCache> cache;
  if (!a.cache.empty()) cache.emplace(a.cache);

  indicators::ExtractOptions eo;
  eo.retries = a.retries;
  eo.prompt = &prompt;
  eo.cache = cache ? &*cache : nullptr;

  const auto only = split_list(a.only);
  std::string lines;
  for (const auto& r : corpus.records()) {
    if (!only.empty() && std::find(only.begin(), only.end(), r.participant_id) == only.end()) continue;
    auto it = r.audio.find(corpus::TaskKind::kER);
    if (it == r.audio.end()) continue;
    const auto clip = resample(read_wav(it->second), 16000);
    const auto res = indicators::extract_indicators(asr->transcribe(clip), *llm, eo);
    json flags = json::object();
    json evidence = json::object();
    for (auto kind : indicators::kAllIndicators) {
      const auto k = static_cast<std::size_t>(kind);
      flags[std::string(indicators::key_name(kind))] = res.vector.flags[k];
      evidence[std::string(indicators::key_name(kind))] = res.vector.evidence[k];
    }
    lines += json{{"participant_id", r.participant_id},
                  {"flags", flags},
                  {"evidence", evidence},
                  {"prompt_version", res.vector.prompt_version},
                  {"model_id", res.vector.model_id},
                  {"retry_count", res.retry_count},
                  {"cache_hit", res.cache_hit}}
                 .dump() +
             "\n";
  }
  if (a.out.empty()) {
    fmt::print("{}", lines);
  } else {
    write_file_atomic(a.out, lines);
  }
  return 0;
}

// --- classify ----------------------------------------------------------------

struct ClassifyArgs {
  std::string features;
  std::string labels;
  std::string model = "mlp";
  std::string out;
  std::string report;
  std::string name;
  std::string task;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  int member_id = 0;
};

struct LabeledData {
  std::vector<std::string> ids;
  classify::FeatureMatrix x;
  std::vector<int> y;
};

LabeledData labeled(const ClassifyArgs& a) {
  const auto table = classify::read_feature_table(a.features);
  const auto labels = classify::read_labels(a.labels);
  LabeledData d;
  d.x = classify::FeatureMatrix(0, table.x.cols());
  for (std::size_t i = 0; i < table.participant_ids.size(); ++i) {
    auto it = labels.find(table.participant_ids[i]);
    if (it == labels.end()) continue;
    d.ids.push_back(table.participant_ids[i]);
    d.x.append_row(table.x.row(i));
    d.y.push_back(it->second);
  }
  if (d.ids.empty()) throw Error(ErrorCode::kMissingLabels, "no feature row has a label");
  return d;
}

classify::ModelKind model_kind(const std::string& s) {
  if (s == "mlp") return classify::ModelKind::kMlp;
  if (s == "rf") return classify::ModelKind::kRf;
  throw Error(ErrorCode::kInvalidParams, fmt::format("--model must be mlp or rf, not '{}'", s));
}

int classify_train(const ClassifyArgs& a) {
  const auto d = labeled(a);
  const auto model = model_kind(a.model) == classify::ModelKind::kMlp
                         ? classify::fit_mlp(d.x, d.y, {}, a.seed)
                         : classify::fit_rf(d.x, d.y, {}, a.seed);
  classify::save_model(model, a.out);
  fmt::print("trained {} on {} participants ({} features) -> {}\n", a.model, d.ids.size(), d.x.cols(), a.out);
  if (model.kind() == classify::ModelKind::kMlp) {
    fmt::print("epochs run {}, best epoch {}, validation F1 {:.3f}\n", model.metadata().epochs_run,
               model.metadata().best_epoch, model.metadata().best_metric);
  }
  return 0;
}

int classify_cv(const ClassifyArgs& a) {
  const auto d = labeled(a);
  const auto trainer = model_kind(a.model) == classify::ModelKind::kMlp ? classify::mlp_trainer({})
                                                                        : classify::rf_trainer({});
  const auto report = classify::cross_validate(d.ids, d.x, d.y, trainer, a.k, a.seed);
  fmt::print("{}\n", classify::format_cv_report(report));
  const classify::CvTableRow row{a.member_id,
                                 a.name.empty() ? fs::path(a.features).stem().string() : a.name,
                                 a.task.empty() ? "-" : a.task,
                                 a.model,
                                 report.mean_accuracy,
                                 report.mean_f1};
  fmt::print("{}", classify::format_cv_table(std::span(&row, 1)));
  if (!a.report.empty()) write_file_atomic(a.report, classify::cv_report_json(report));
  return 0;
}

int classify_predict(const ClassifyArgs& a) {
  const auto model = classify::load_model(a.model);
  const auto table = classify::read_feature_table(a.features);
  const auto preds = classify::predict(model, table.x);
  std::vector<ensemble::MemberPredictionRow> rows;
  for (std::size_t i = 0; i < table.participant_ids.size(); ++i) {
    rows.push_back({table.participant_ids[i], a.member_id, preds.labels[i], preds.scores[i]});
  }
  if (a.out.empty()) {
    fmt::print("participant_id,member_id,vote,score\n");
    for (const auto& r : rows) {
      fmt::print("{}", csv_line({r.participant_id, std::to_string(r.member_id), std::to_string(r.vote),
                                 fmt::format("{:.17g}", r.score)}));
    }
  } else {
    ensemble::write_prediction_file(a.out, rows);
  }
  return 0;
}

// --- ensemble eval -----------------------------------------------------------

struct EnsembleArgs {
  std::string spec = "combo-B";
  std::string pred_dir;
  std::string labels;
  std::string indicator_weight = "2";
  std::string tie_break;
  std::string records;
};

int ensemble_eval(const EnsembleArgs& a) {
  ensemble::EnsembleSpec spec;
  const auto presets = ensemble::preset_names();
  if (std::find(presets.begin(), presets.end(), a.spec) != presets.end()) {
    spec = ensemble::preset_combination(a.spec, ensemble::parse_weight(a.indicator_weight));
  } else if (fs::exists(a.spec)) {
    spec = ensemble::spec_from_json(read_file(a.spec));
  } else {
    throw Error(ErrorCode::kUnknownCombination,
                fmt::format("'{}' is neither a preset ({}) nor a spec file", a.spec, fmt::join(presets, ", ")));
  }
  if (!a.tie_break.empty()) {
    auto tb = ensemble::parse_tie_break(a.tie_break);
    if (!tb) throw Error(ErrorCode::kInvalidParams, "--tie-break must be positive, negative or abstain");
    spec.tie_break = *tb;
  }
  if (!std::filesystem::is_directory(a.pred_dir)) {
    throw Error(ErrorCode::kMissingUpstream, fmt::format("prediction directory {} not found", a.pred_dir));
  }
  const auto preds = ensemble::read_prediction_dir(a.pred_dir);
  if (std::none_of(spec.members.begin(), spec.members.end(),
                   [&](const ensemble::MemberSpec& m) { return preds.count(m.member_id) > 0; })) {
    throw Error(ErrorCode::kMissingUpstream,
                fmt::format("{} holds no predictions for any member of {}", a.pred_dir, spec.member_tuple()));
  }

  // Split-aware when the labels file carries a split column (a manifest).
  const auto rows = parse_csv(read_file(a.labels));
  std::map<std::string, std::string> split_of;
  if (!rows.empty()) {
    const auto& h = rows[0];
    auto id_it = std::find(h.begin(), h.end(), "participant_id");
    auto sp_it = std::find(h.begin(), h.end(), "split");
    if (id_it != h.end() && sp_it != h.end()) {
      const auto ic = static_cast<std::size_t>(id_it - h.begin());
      const auto sc = static_cast<std::size_t>(sp_it - h.begin());
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == h.size()) split_of[rows[i][ic]] = rows[i][sc];
      }
    }
  }
  const auto labels = classify::read_labels(a.labels);

  std::set<std::string> predicted;
  for (const auto& m : spec.members) {
    if (auto it = preds.find(m.member_id); it != preds.end()) {
      for (const auto& [pid, _] : it->second) predicted.insert(pid);
    }
  }
  auto scope_for = [&](const std::optional<std::string>& split) {
    std::vector<std::string> ids;
    for (const auto& [pid, _] : labels) {
      if (!predicted.count(pid)) continue;
      if (split && split_of[pid] != *split) continue;
      ids.push_back(pid);
    }
    return ids;
  };

  fmt::print("Ensemble {} {}, tie rule {}\n", spec.name, spec.member_tuple(), ensemble::to_string(spec.tie_break));
  std::vector<ensemble::PredictionRecord> all_records;
  if (!split_of.empty()) {
    ensemble::VotingTableRow row{spec.member_tuple(), std::nullopt, std::nullopt};
    for (const char* split : {"dev", "test"}) {
      const auto ids = scope_for(std::string(split));
      if (ids.empty()) continue;
      const auto ev = ensemble::evaluate_ensemble(spec, preds, labels, &ids);
      (std::string(split) == "dev" ? row.dev : row.test) = ev.metrics;
      fmt::print("{}: {} participants, {} abstained, {} decided by tie rule\n", split, ids.size(), ev.abstained,
                 ev.decided_by_tie);
      all_records.insert(all_records.end(), ev.records.begin(), ev.records.end());
    }
    fmt::print("{}", ensemble::format_voting_table(std::span(&row, 1)));
  } else {
    const auto ids = scope_for(std::nullopt);
    if (ids.empty()) throw Error(ErrorCode::kMissingLabels, "no predicted participant has a label");
    const auto ev = ensemble::evaluate_ensemble(spec, preds, labels, &ids);
    fmt::print("{} participants, {} abstained, {} decided by tie rule\n", ids.size(), ev.abstained, ev.decided_by_tie);
    fmt::print("accuracy {:.3f}  precision {:.3f}  recall {:.3f}  F1 {:.3f}\n", ev.metrics.accuracy,
               ev.metrics.precision, ev.metrics.recall, ev.metrics.f1);
    all_records = ev.records;
  }
  if (!a.records.empty()) write_file_atomic(a.records, ensemble::records_to_json(all_records));
  return 0;
}

}  // namespace

int run(const std::string& program, const std::vector<std::string>& args) {
  CLI::App app{"Speech-based suicide-risk screening pipeline", program};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::map<pipeline::Stage, StageArgs> stage_args;
  std::map<pipeline::Stage, CLI::App*> stage_cmds;
  for (auto s : pipeline::all_stages()) {
    const bool grouped = s == pipeline::Stage::kIndicators || s == pipeline::Stage::kEnsemble;
    auto* sub = app.add_subcommand(std::string(pipeline::to_string(s)),
                                   fmt::format("Run the {} stage", pipeline::to_string(s)));
    add_stage_options(sub, stage_args[s], !grouped);
    stage_cmds[s] = sub;
  }

  StageArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run every stage in order");
  add_stage_options(run_cmd, run_args);

  std::string doctor_config;
  auto* doctor_cmd = app.add_subcommand("doctor", "Check corpus, adapters and credentials");
  doctor_cmd->add_option("--config,-c", doctor_config, "Pipeline config (JSON)")->required();

  std::string rr_config, rr_participant;
  bool rr_json = false;
  auto* rr_cmd = app.add_subcommand("render-report", "Print one participant's evidence report");
  rr_cmd->add_option("--config,-c", rr_config, "Pipeline config (JSON)")->required();
  rr_cmd->add_option("--participant,-p", rr_participant, "Participant id")->required();
  rr_cmd->add_flag("--json", rr_json, "Print the structured document");

  std::string ef_config, ef_out;
  int ef_member = 0;
  auto* ef_cmd = app.add_subcommand("export-features", "Write one member's cached features as a CSV table");
  ef_cmd->add_option("--config,-c", ef_config, "Pipeline config (JSON)")->required();
  ef_cmd->add_option("--member", ef_member, "Member index (1-16)")->required();
  ef_cmd->add_option("--out,-o", ef_out, "Output CSV")->required();

  pipeline::SyntheticCorpusOptions synth_opt;
  std::string synth_out;
  std::size_t synth_dim = 32;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus and a mock-adapter config");
  synth_cmd->add_option("--out,-o", synth_out, "Output directory")->required();
  synth_cmd->add_option("--participants,-n", synth_opt.participants, "Number of participants");
  synth_cmd->add_option("--seed", synth_opt.seed, "Master seed");
  synth_cmd->add_option("--mock-dim", synth_dim, "Embedding size of mock encoders (0: real sizes)");

  auto* corpus_cmd = app.add_subcommand("corpus", "Manifest tools");
  corpus_cmd->require_subcommand(1);
  std::string corpus_path;
  auto* cv_validate = corpus_cmd->add_subcommand("validate", "Validate a manifest");
  cv_validate->add_option("path", corpus_path, "Manifest CSV")->required();
  auto* cv_summarize = corpus_cmd->add_subcommand("summarize", "Summarize a manifest");
  cv_summarize->add_option("path", corpus_path, "Manifest CSV")->required();

  ExtractArgs ex;
  auto* ind_cmd = stage_cmds[pipeline::Stage::kIndicators];
  ind_cmd->require_subcommand(0, 1);
  auto* extract_cmd = ind_cmd->add_subcommand("extract", "Extract indicators straight from a manifest");
  extract_cmd->add_option("--manifest,-m", ex.manifest, "Manifest CSV")->required();
  extract_cmd->add_option("--task", ex.task, "Speech task (only ER is supported)");
  extract_cmd->add_option("--model", ex.model, "LLM model id");
  extract_cmd->add_option("--llm", ex.llm, "LLM endpoint: mock, exec:, unix:, http(s)://");
  extract_cmd->add_option("--asr", ex.asr, "ASR endpoint: mock, exec:, unix:");
  extract_cmd->add_option("--cache", ex.cache, "Response cache directory");
  extract_cmd->add_option("--prompt", ex.prompt, "Prompt template file");
  extract_cmd->add_option("--retries", ex.retries, "Re-sends on unparseable responses");
  extract_cmd->add_option("--only", ex.only, "Comma-separated participant ids");
  extract_cmd->add_option("--seed", ex.seed, "Seed for mock adapters");
  extract_cmd->add_option("--out,-o", ex.out, "Output JSON lines file (default stdout)");

  ClassifyArgs ca;
  auto* cls_cmd = app.add_subcommand("classify", "Train, cross-validate and apply classifiers");
  cls_cmd->require_subcommand(1);
  auto* train_cmd = cls_cmd->add_subcommand("train", "Fit a model");
  train_cmd->add_option("--features,-f", ca.features, "Feature table CSV")->required();
  train_cmd->add_option("--labels,-l", ca.labels, "Labels CSV")->required();
  train_cmd->add_option("--model", ca.model, "mlp or rf");
  train_cmd->add_option("--out,-o", ca.out, "Model file")->required();
  train_cmd->add_option("--seed", ca.seed, "Seed");
  auto* cvk_cmd = cls_cmd->add_subcommand("cv", "Stratified k-fold cross-validation");
  cvk_cmd->add_option("--features,-f", ca.features, "Feature table CSV")->required();
  cvk_cmd->add_option("--labels,-l", ca.labels, "Labels CSV")->required();
  cvk_cmd->add_option("--model", ca.model, "mlp or rf");
  cvk_cmd->add_option("--k", ca.k, "Folds");
  cvk_cmd->add_option("--seed", ca.seed, "Seed");
  cvk_cmd->add_option("--report", ca.report, "Write the CV report JSON here");
  cvk_cmd->add_option("--name", ca.name, "Model name for the summary row");
  cvk_cmd->add_option("--task", ca.task, "Task for the summary row");
  cvk_cmd->add_option("--index", ca.member_id, "Member index for the summary row");
  auto* pred_cmd = cls_cmd->add_subcommand("predict", "Apply a model to a feature table");
  pred_cmd->add_option("--model", ca.model, "Model file")->required();
  pred_cmd->add_option("--features,-f", ca.features, "Feature table CSV")->required();
  pred_cmd->add_option("--member-id", ca.member_id, "Member id written to the prediction file");
  pred_cmd->add_option("--out,-o", ca.out, "Prediction CSV (default stdout)");

  EnsembleArgs ea;
  auto* ens_cmd = stage_cmds[pipeline::Stage::kEnsemble];
  ens_cmd->require_subcommand(0, 1);
  auto* eval_cmd = ens_cmd->add_subcommand("eval", "Evaluate a voting ensemble on prediction files");
  eval_cmd->add_option("--spec", ea.spec, "Preset (audio-only, combo-A, combo-B) or spec JSON file");
  eval_cmd->add_option("--pred-dir", ea.pred_dir, "Directory of member prediction CSVs")->required();
  eval_cmd->add_option("--labels,-l", ea.labels, "Labels CSV or manifest")->required();
  eval_cmd->add_option("--indicator-weight", ea.indicator_weight, "Weight of member 16 in presets");
  eval_cmd->add_option("--tie-break", ea.tie_break, "positive, negative or abstain");
  eval_cmd->add_option("--records", ea.records, "Write per-participant records JSON here");

  std::vector<std::string> argv_store;
  argv_store.push_back(program);
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*extract_cmd) return indicators_extract(ex);
    if (*eval_cmd) return ensemble_eval(ea);
    for (auto& [stage, sub] : stage_cmds) {
      if (*sub) return run_stages(stage_args[stage], stage);
    }
    if (*run_cmd) return run_stages(run_args, std::nullopt);
    if (*doctor_cmd) {
      bool ok = true;
      for (const auto& c : pipeline::doctor(pipeline::load_config(doctor_config))) {
        fmt::print("[{}] {}: {}\n", c.ok ? " ok " : "FAIL", c.name, c.detail);
        ok = ok && c.ok;
      }
      return ok ? 0 : 4;
    }
    if (*rr_cmd) {
      pipeline::Pipeline p(pipeline::load_config(rr_config));
      const auto rep = p.render_report(rr_participant);
      fmt::print("{}", rr_json ? rep.json() : rep.text());
      return 0;
    }
    if (*ef_cmd) {
      pipeline::Pipeline p(pipeline::load_config(ef_config));
      const auto t = p.member_features(ef_member);
      classify::write_feature_table(ef_out, t);
      fmt::print("{} rows x {} features -> {}\n", t.x.rows(), t.x.cols(), ef_out);
      return 0;
    }
    if (*synth_cmd) {
      const fs::path out(synth_out);
      pipeline::write_synthetic_corpus(out / "corpus", synth_opt);
      write_file_atomic(out / "config.json",
                        pipeline::mock_config_json("corpus/manifest.csv", "cache", synth_opt.seed, synth_dim));
      fmt::print("wrote {} participants to {} and {}\n", synth_opt.participants, (out / "corpus").string(),
                 (out / "config.json").string());
      return 0;
    }
    if (*cv_validate) return corpus_validate(corpus_path);
    if (*cv_summarize) return corpus_summarize(corpus_path);
    if (*train_cmd) return classify_train(ca);
    if (*cvk_cmd) return classify_cv(ca);
    if (*pred_cmd) return classify_predict(ca);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace swpipe::cli
