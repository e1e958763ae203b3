#include "swpipe/pipeline/config.h"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "swpipe/encoders.h"
#include "swpipe/error.h"
#include "swpipe/io.h"

namespace swpipe::pipeline {
namespace {

using nlohmann::json;

Error invalid(const std::string& msg) { return Error(ErrorCode::kConfigInvalid, msg); }

// Reads an object's members by name and rejects any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw invalid(fmt::format("'{}' must be an object", path_));
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw invalid(fmt::format("'{}' has the wrong type", where(key)));
      }
    }
  }

  void read_size(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) {
        throw invalid(fmt::format("'{}' must be a non-negative integer", where(key)));
      }
      out = v->get<std::size_t>();
    }
  }

  void read_number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw invalid(fmt::format("'{}' must be a number", where(key)));
      out = v->get<double>();
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw invalid(fmt::format("unknown config key '{}'", where(key)));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

void parse_mlp(Section s, classify::MlpConfig& m) {
  s.read("hidden", m.hidden);
  s.read_number("dropout", m.dropout);
  s.read_number("learning_rate", m.learning_rate);
  s.read_number("beta1", m.beta1);
  s.read_number("beta2", m.beta2);
  s.read_number("epsilon", m.epsilon);
  s.read_size("batch_size", m.batch_size);
  s.read_size("max_epochs", m.max_epochs);
  s.read_size("patience", m.patience);
  s.read_number("val_fraction", m.val_fraction);
  s.read("class_weights", m.class_weights);
  s.finish();
}

void parse_rf(Section s, classify::RfConfig& r) {
  s.read_size("n_trees", r.n_trees);
  std::size_t v = 0;
  if (s.get("max_depth")) {
    s.read_size("max_depth", v);
    r.max_depth = v;
  }
  if (s.get("mtry")) {
    s.read_size("mtry", v);
    r.mtry = v;
  }
  s.read_size("min_samples_leaf", r.min_samples_leaf);
  s.read("bootstrap", r.bootstrap);
  s.finish();
}

ensemble::EnsembleSpec parse_ensemble(const json& j) {
  Section s(j, "ensemble");
  ensemble::EnsembleSpec spec;
  std::string combination;
  s.read("combination", combination);
  ensemble::Weight indicator_weight = 2;
  if (const json* w = s.get("indicator_weight")) {
    try {
      indicator_weight = ensemble::parse_weight(w->is_string() ? w->get<std::string>() : w->dump());
    } catch (const Error& e) {
      throw invalid(fmt::format("ensemble.indicator_weight: {}", e.what()));
    }
  }
  const json* members = s.get("members");
  std::string name;
  s.read("name", name);
  std::string tie = "positive";
  s.read("tie_break", tie);
  s.finish();

  if (!combination.empty() && members) {
    throw invalid("ensemble: give either 'combination' or 'members', not both");
  }
  if (members) {
    json custom = {{"members", *members}, {"tie_break", tie}, {"name", name.empty() ? "custom" : name}};
    spec = ensemble::spec_from_json(custom.dump());
  } else {
    try {
      spec = ensemble::preset_combination(combination.empty() ? "combo-B" : combination,
                                          indicator_weight);
    } catch (const Error& e) {
      throw invalid(e.what());
    }
    if (!name.empty()) spec.name = name;
  }
  auto tb = ensemble::parse_tie_break(tie);
  if (!tb) throw invalid("ensemble.tie_break must be positive, negative or abstain");
  spec.tie_break = *tb;
  return spec;
}

}  // namespace

std::string_view to_string(RefitMode mode) {
  return mode == RefitMode::kFull ? "full" : "fold-ensemble";
}

std::set<std::string> PipelineConfig::acoustic_encoders() const {
  std::set<std::string> out;
  for (const auto& m : ensemble.members) {
    if (ensemble::is_acoustic(m.source)) out.emplace(ensemble::asset_id(m.source));
  }
  return out;
}

std::set<std::string> PipelineConfig::text_encoders() const {
  std::set<std::string> out;
  for (const auto& m : ensemble.members) {
    if (ensemble::is_text(m.source)) out.emplace(ensemble::asset_id(m.source));
  }
  return out;
}

std::set<corpus::TaskKind> PipelineConfig::transcribe_tasks() const {
  std::set<corpus::TaskKind> out = {corpus::TaskKind::kER};
  for (const auto& m : ensemble.members) {
    if (ensemble::is_text(m.source)) out.insert(m.task);
  }
  return out;
}

const indicators::PromptTemplate& PipelineConfig::prompt() const {
  return prompt_ ? *prompt_ : indicators::PromptTemplate::builtin();
}

void PipelineConfig::validate() const {
  try {
    mlp.validate();
    rf.validate();
    ensemble.validate();
  } catch (const Error& e) {
    throw invalid(e.what());
  }
  if (segment.window_s <= 0 || segment.overlap < 0 || segment.overlap >= 1 ||
      segment.min_tail_s < 0 || segment.min_tail_s > segment.window_s) {
    throw invalid("preprocess: need window_s > 0, 0 <= overlap < 1, 0 <= min_tail_s <= window_s");
  }
  if (sample_rate <= 0) throw invalid("preprocess.sample_rate must be positive");
  if (workers == 0 || workers > 256) throw invalid("encoders.workers must be in [1, 256]");
  if (llm_retries < 0) throw invalid("indicators.retries must be >= 0");
  if (decoding.max_tokens <= 0) throw invalid("indicators.max_tokens must be positive");
  if (decoding.temperature < 0) throw invalid("indicators.temperature must be >= 0");
  if (folds < 2) throw invalid("classify.folds must be >= 2");
  if (manifest.empty()) throw invalid("corpus.manifest is required");
  if (cache_root.empty()) throw invalid("cache_root is required");

  auto require = [&](const std::string& id, const char* role) {
    auto it = adapters.find(id);
    if (it == adapters.end()) {
      throw invalid(fmt::format("adapters: no endpoint for {} '{}'", role, id));
    }
    const auto& ep = it->second.endpoint;
    const bool http = ep.starts_with("http://") || ep.starts_with("https://");
    if (ep != "mock" && !ep.starts_with("exec:") && !ep.starts_with("unix:") && !http) {
      throw invalid(fmt::format("adapters.{}: unsupported endpoint '{}'", id, ep));
    }
    if (http && id != llm_model) {
      throw invalid(fmt::format("adapters.{}: HTTP endpoints are only supported for the LLM", id));
    }
    if (it->second.dim && *it->second.dim == 0) {
      throw invalid(fmt::format("adapters.{}.dim must be positive", id));
    }
  };
  for (const auto& id : acoustic_encoders()) require(id, "acoustic encoder");
  for (const auto& id : text_encoders()) require(id, "text encoder");
  require(asr, "ASR");
  require(llm_model, "LLM");
  for (const auto& [id, _] : adapters) {
    if (id != asr && id != llm_model && !acoustic_encoders().count(id) && !text_encoders().count(id)) {
      throw invalid(fmt::format("adapters.{} is not used by this configuration", id));
    }
  }
  const bool denoiser_ok = denoiser == "identity" || denoiser == "mock" ||
                           denoiser.starts_with("gain:") || denoiser.starts_with("exec:") ||
                           denoiser.starts_with("unix:");
  if (!denoiser_ok) throw invalid(fmt::format("preprocess.denoiser: unsupported '{}'", denoiser));
  if (denoiser.starts_with("gain:")) {
    try {
      std::size_t pos = 0;
      const double g = std::stod(denoiser.substr(5), &pos);
      if (pos != denoiser.size() - 5 || !(g > 0)) throw std::invalid_argument("gain");
    } catch (const std::exception&) {
      throw invalid("preprocess.denoiser: gain must be a positive number");
    }
  }
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw invalid(fmt::format("config is not valid JSON: {}", e.what()));
  }
  PipelineConfig cfg;
  Section root(doc, "");

  if (const json* c = root.get("corpus")) {
    Section s(*c, "corpus");
    std::string manifest;
    s.read("manifest", manifest);
    s.finish();
    if (!manifest.empty()) cfg.manifest = resolve(base_dir, manifest);
  }
  std::string cache_root;
  root.read("cache_root", cache_root);
  if (!cache_root.empty()) cfg.cache_root = resolve(base_dir, cache_root);
  if (const json* seed = root.get("seed")) {
    if (!seed->is_number_unsigned()) throw invalid("'seed' must be a non-negative integer");
    cfg.seed = seed->get<std::uint64_t>();
  }

  if (const json* p = root.get("preprocess")) {
    Section s(*p, "preprocess");
    s.read_number("window_s", cfg.segment.window_s);
    s.read_number("overlap", cfg.segment.overlap);
    s.read_number("min_tail_s", cfg.segment.min_tail_s);
    s.read("sample_rate", cfg.sample_rate);
    s.read("denoiser", cfg.denoiser);
    std::string policy = "fail";
    s.read("on_denoise_error", policy);
    s.finish();
    if (policy == "fail") {
      cfg.on_denoise_error = preprocess::DenoiseErrorPolicy::kFail;
    } else if (policy == "passthrough") {
      cfg.on_denoise_error = preprocess::DenoiseErrorPolicy::kPassthrough;
    } else {
      throw invalid("preprocess.on_denoise_error must be 'fail' or 'passthrough'");
    }
  }

  if (const json* a = root.get("adapters")) {
    if (!a->is_object()) throw invalid("'adapters' must be an object");
    for (const auto& [id, v] : a->items()) {
      AdapterEndpoint ep;
      if (v.is_string()) {
        ep.endpoint = v.get<std::string>();
      } else {
        Section s(v, "adapters." + id);
        s.read("endpoint", ep.endpoint);
        if (s.get("dim")) {
          std::size_t d = 0;
          s.read_size("dim", d);
          ep.dim = d;
        }
        s.finish();
      }
      cfg.adapters[id] = ep;
    }
  }

  if (const json* e = root.get("encoders")) {
    Section s(*e, "encoders");
    s.read_size("workers", cfg.workers);
    s.read("asr", cfg.asr);
    s.finish();
  }

  if (const json* i = root.get("indicators")) {
    Section s(*i, "indicators");
    s.read("model", cfg.llm_model);
    s.read("retries", cfg.llm_retries);
    s.read_number("temperature", cfg.decoding.temperature);
    s.read("max_tokens", cfg.decoding.max_tokens);
    s.read("retry_nonce", cfg.retry_nonce);
    std::string prompt_file;
    s.read("prompt_file", prompt_file);
    std::string task = "ER";
    s.read("task", task);
    s.finish();
    if (task != "ER") throw invalid("indicators.task: indicators are defined on ER transcripts only");
    if (!prompt_file.empty()) cfg.prompt_file = resolve(base_dir, prompt_file);
  }

  if (const json* c = root.get("classify")) {
    Section s(*c, "classify");
    if (const json* m = s.get("mlp")) parse_mlp(Section(*m, "classify.mlp"), cfg.mlp);
    if (const json* r = s.get("rf")) parse_rf(Section(*r, "classify.rf"), cfg.rf);
    std::string refit = "full";
    s.read("refit", refit);
    s.read_size("folds", cfg.folds);
    s.read("cross_validate", cfg.cross_validate);
    s.finish();
    if (refit == "full") {
      cfg.refit = RefitMode::kFull;
    } else if (refit == "fold-ensemble") {
      cfg.refit = RefitMode::kFoldEnsemble;
    } else {
      throw invalid("classify.refit must be 'full' or 'fold-ensemble'");
    }
  }

  if (const json* e = root.get("ensemble")) cfg.ensemble = parse_ensemble(*e);
  root.finish();

  if (cfg.prompt_file) {
    try {
      cfg.prompt_ = std::make_shared<indicators::PromptTemplate>(
          indicators::PromptTemplate::from_file(*cfg.prompt_file));
    } catch (const Error& e) {
      throw invalid(fmt::format("indicators.prompt_file: {}", e.what()));
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw invalid(e.what());
  }
  auto cfg = parse_config(text, std::filesystem::absolute(path).parent_path());
  cfg.config_path = path;
  return cfg;
}

std::string mock_config_json(const std::filesystem::path& manifest,
                             const std::filesystem::path& cache_root, std::uint64_t seed,
                             std::size_t mock_dim) {
  json adapters = json::object();
  for (const char* id : {"hubert-large", "wav2vec2-xlsr-53", "whisper-large-v3", "xlm-roberta-base"}) {
    if (mock_dim) {
      adapters[id] = {{"endpoint", "mock"}, {"dim", mock_dim}};
    } else {
      adapters[id] = "mock";
    }
  }
  adapters["deepseek-r1"] = "mock";
  json doc = {
      {"corpus", {{"manifest", manifest.string()}}},
      {"cache_root", cache_root.string()},
      {"seed", seed},
      {"preprocess",
       {{"window_s", 30},
        {"overlap", 0.1},
        {"min_tail_s", 5},
        {"sample_rate", 16000},
        {"denoiser", "mock"},
        {"on_denoise_error", "fail"}}},
      {"adapters", adapters},
      {"encoders", {{"workers", 2}, {"asr", "whisper-large-v3"}}},
      {"indicators", {{"model", "deepseek-r1"}, {"retries", 2}, {"temperature", 0}, {"max_tokens", 2048}}},
      {"classify", {{"refit", "full"}, {"folds", 10}, {"cross_validate", false}}},
      {"ensemble", {{"combination", "combo-B"}, {"indicator_weight", 2}, {"tie_break", "positive"}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace swpipe::pipeline
