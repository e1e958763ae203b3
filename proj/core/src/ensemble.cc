#include "swpipe/ensemble.h"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <set>

#include "swpipe/error.h"
#include "swpipe/io.h"

namespace swpipe::ensemble {
namespace {

using classify::ModelKind;
using corpus::TaskKind;

constexpr std::array<FeatureSource, 6> kSources = {
    FeatureSource::kHubert, FeatureSource::kWav2Vec2, FeatureSource::kWhisper,
    FeatureSource::kBert,   FeatureSource::kRoberta,  FeatureSource::kDeepSeek};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::array<ModelTableRow, 16> build_table() {
  std::array<ModelTableRow, 16> rows{};
  int i = 0;
  for (FeatureSource s : {FeatureSource::kHubert, FeatureSource::kWav2Vec2, FeatureSource::kWhisper,
                          FeatureSource::kBert, FeatureSource::kRoberta}) {
    for (TaskKind t : corpus::kAllTasks) {
      rows[i] = {i + 1, s, t, ModelKind::kMlp};
      ++i;
    }
  }
  rows[15] = {16, FeatureSource::kDeepSeek, TaskKind::kER, ModelKind::kRf};
  return rows;
}

MemberSpec member_from_row(const ModelTableRow& row, const Weight& w) {
  return MemberSpec{row.index, row.source, row.classifier, row.task, w};
}

// cpp_int's string constructor reads a leading 0 as an octal prefix.
boost::multiprecision::cpp_int decimal(std::string_view digits) {
  boost::multiprecision::cpp_int v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

Weight parse_weight(std::string_view text) {
  auto bad = [&] {
    return Error(ErrorCode::kInvalidParams, fmt::format("invalid weight '{}'", text));
  };
  Weight w;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = text.substr(0, slash);
    const auto den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw bad();
    const auto n = decimal(num);
    const auto d = decimal(den);
    if (d == 0) throw bad();
    w = Weight(n, d);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto ip = text.substr(0, dot);
    const auto fp = text.substr(dot + 1);
    if ((!ip.empty() && !all_digits(ip)) || !all_digits(fp)) throw bad();
    boost::multiprecision::cpp_int scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    const auto n = decimal(std::string(ip) + std::string(fp));
    w = Weight(n, scale);
  } else {
    if (!all_digits(text)) throw bad();
    w = Weight(decimal(text));
  }
  if (w <= 0) throw bad();
  return w;
}

std::string format_weight(const Weight& w) { return w.str(); }

std::string_view display_name(FeatureSource source) {
  switch (source) {
    case FeatureSource::kHubert: return "HuBERT";
    case FeatureSource::kWav2Vec2: return "Wav2Vec2";
    case FeatureSource::kWhisper: return "Whisper";
    case FeatureSource::kBert: return "BERT";
    case FeatureSource::kRoberta: return "RoBERTa";
    case FeatureSource::kDeepSeek: return "DeepSeek-R1";
  }
  return "?";
}

std::string_view asset_id(FeatureSource source) {
  switch (source) {
    case FeatureSource::kHubert: return "hubert-large";
    case FeatureSource::kWav2Vec2: return "wav2vec2-xlsr-53";
    case FeatureSource::kWhisper: return "whisper-large-v3";
    case FeatureSource::kBert: return "bert-base-chinese";
    case FeatureSource::kRoberta: return "xlm-roberta-base";
    case FeatureSource::kDeepSeek: return "deepseek-r1";
  }
  return "?";
}

std::optional<FeatureSource> parse_source(std::string_view token) {
  const std::string t = lower(token);
  for (FeatureSource s : kSources) {
    if (t == lower(display_name(s)) || t == asset_id(s)) return s;
  }
  if (t == "deepseek") return FeatureSource::kDeepSeek;
  return std::nullopt;
}

bool is_acoustic(FeatureSource source) {
  return source == FeatureSource::kHubert || source == FeatureSource::kWav2Vec2 ||
         source == FeatureSource::kWhisper;
}

bool is_text(FeatureSource source) {
  return source == FeatureSource::kBert || source == FeatureSource::kRoberta;
}

const std::array<ModelTableRow, 16>& model_table() {
  static const std::array<ModelTableRow, 16> table = build_table();
  return table;
}

const ModelTableRow& model_table_row(int index) {
  if (index < 1 || index > 16) {
    throw Error(ErrorCode::kUnknownMember, fmt::format("no model with index {}", index));
  }
  return model_table()[static_cast<std::size_t>(index - 1)];
}

std::optional<int> member_index(FeatureSource source, TaskKind task) {
  for (const auto& row : model_table()) {
    if (row.source == source && row.task == task) return row.index;
  }
  return std::nullopt;
}

std::string_view to_string(TieBreak t) {
  switch (t) {
    case TieBreak::kPositive: return "positive";
    case TieBreak::kNegative: return "negative";
    case TieBreak::kAbstain: return "abstain";
  }
  return "?";
}

std::optional<TieBreak> parse_tie_break(std::string_view token) {
  if (token == "positive") return TieBreak::kPositive;
  if (token == "negative") return TieBreak::kNegative;
  if (token == "abstain") return TieBreak::kAbstain;
  return std::nullopt;
}

void EnsembleSpec::validate() const {
  if (members.empty()) throw Error(ErrorCode::kInvalidParams, "ensemble has no members");
  std::set<int> seen;
  for (const auto& m : members) {
    if (!seen.insert(m.member_id).second) {
      throw Error(ErrorCode::kInvalidParams, fmt::format("duplicate member {}", m.member_id));
    }
    if (m.weight <= 0) {
      throw Error(ErrorCode::kInvalidParams,
                  fmt::format("member {} has non-positive weight", m.member_id));
    }
  }
}

const MemberSpec* EnsembleSpec::find(int member_id) const {
  for (const auto& m : members) {
    if (m.member_id == member_id) return &m;
  }
  return nullptr;
}

std::string EnsembleSpec::member_tuple() const {
  std::string out = "(";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(members[i].member_id);
  }
  return out + ")";
}

std::vector<std::string> preset_names() { return {"audio-only", "combo-A", "combo-B"}; }

EnsembleSpec preset_combination(std::string_view name, const Weight& indicator_weight) {
  std::vector<int> ids;
  if (name == "audio-only") {
    ids = {1, 2, 5, 6, 8, 9};
  } else if (name == "combo-A") {
    ids = {1, 2, 5, 6, 8, 13, 16};
  } else if (name == "combo-B") {
    ids = {1, 2, 5, 6, 9, 13, 16};
  } else {
    throw Error(ErrorCode::kUnknownCombination, fmt::format("unknown combination '{}'", name));
  }
  EnsembleSpec spec;
  spec.name = std::string(name);
  for (int id : ids) {
    const auto& row = model_table_row(id);
    spec.members.push_back(
        member_from_row(row, row.source == FeatureSource::kDeepSeek ? indicator_weight : Weight(1)));
  }
  spec.validate();
  return spec;
}

EnsembleSpec spec_from_json(std::string_view text) {
  auto invalid = [](const std::string& msg) { return Error(ErrorCode::kConfigInvalid, msg); };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw invalid(fmt::format("ensemble spec is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw invalid("ensemble spec must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "tie_break" && key != "members") {
      throw invalid(fmt::format("unknown ensemble spec field '{}'", key));
    }
  }
  EnsembleSpec spec;
  spec.name = doc.value("name", std::string("custom"));
  if (doc.contains("tie_break")) {
    if (!doc["tie_break"].is_string()) throw invalid("tie_break must be a string");
    auto tb = parse_tie_break(doc["tie_break"].get<std::string>());
    if (!tb) throw invalid("tie_break must be positive, negative or abstain");
    spec.tie_break = *tb;
  }
  if (!doc.contains("members") || !doc["members"].is_array()) {
    throw invalid("ensemble spec needs a members array");
  }
  for (const auto& m : doc["members"]) {
    if (!m.is_object() || !m.contains("model") || !m.contains("task") || !m["model"].is_string() ||
        !m["task"].is_string()) {
      throw invalid("each member needs string fields model and task");
    }
    for (const auto& [key, _] : m.items()) {
      if (key != "model" && key != "task" && key != "weight") {
        throw invalid(fmt::format("unknown member field '{}'", key));
      }
    }
    const auto model = m["model"].get<std::string>();
    const auto task_s = m["task"].get<std::string>();
    auto source = parse_source(model);
    if (!source) throw invalid(fmt::format("unknown model '{}'", model));
    auto task = corpus::parse_task(task_s);
    if (!task) throw invalid(fmt::format("unknown task '{}'", task_s));
    auto index = member_index(*source, *task);
    if (!index) throw invalid(fmt::format("no indexed model for ({}, {})", model, task_s));
    Weight w = 1;
    if (m.contains("weight")) {
      const auto& jw = m["weight"];
      try {
        if (jw.is_string()) {
          w = parse_weight(jw.get<std::string>());
        } else if (jw.is_number()) {
          w = parse_weight(jw.dump());
        } else {
          throw invalid("weight must be a number or string");
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kConfigInvalid) throw;
        throw invalid(e.what());
      }
    }
    spec.members.push_back(member_from_row(model_table_row(*index), w));
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw invalid(e.what());
  }
  return spec;
}

std::string spec_to_json(const EnsembleSpec& spec) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : spec.members) {
    members.push_back({{"model", display_name(m.source)},
                       {"task", corpus::to_string(m.task)},
                       {"weight", format_weight(m.weight)}});
  }
  nlohmann::json doc = {
      {"name", spec.name}, {"tie_break", to_string(spec.tie_break)}, {"members", members}};
  return doc.dump(2) + "\n";
}

VoteResult vote(const Votes& votes, const EnsembleSpec& spec) {
  VoteResult r;
  for (const auto& [id, v] : votes) {
    const MemberSpec* m = spec.find(id);
    if (!m) throw Error(ErrorCode::kUnknownMember, fmt::format("member {} is not in the ensemble", id));
    if (!v) continue;
    if (*v == 1) {
      r.w_pos += m->weight;
    } else if (*v == 0) {
      r.w_neg += m->weight;
    } else {
      throw Error(ErrorCode::kInvalidParams, fmt::format("member {} voted {}", id, *v));
    }
  }
  if (r.w_pos > r.w_neg) {
    r.final = 1;
  } else if (r.w_neg > r.w_pos) {
    r.final = 0;
  } else {
    r.tie = true;
    switch (spec.tie_break) {
      case TieBreak::kPositive: r.final = 1; break;
      case TieBreak::kNegative: r.final = 0; break;
      case TieBreak::kAbstain: break;
    }
  }
  return r;
}

std::vector<PredictionRecord> combine(const EnsembleSpec& spec, const MemberPredictions& predictions,
                                      const std::vector<std::string>* scope) {
  spec.validate();
  std::vector<std::string> ids;
  if (scope) {
    ids = *scope;
  } else {
    std::set<std::string> seen;
    for (const auto& m : spec.members) {
      auto it = predictions.find(m.member_id);
      if (it == predictions.end()) continue;
      for (const auto& [pid, _] : it->second) seen.insert(pid);
    }
    ids.assign(seen.begin(), seen.end());
  }
  std::vector<PredictionRecord> out;
  out.reserve(ids.size());
  for (const auto& pid : ids) {
    PredictionRecord rec;
    rec.participant_id = pid;
    for (const auto& m : spec.members) {
      std::optional<int> v;
      if (auto it = predictions.find(m.member_id); it != predictions.end()) {
        if (auto jt = it->second.find(pid); jt != it->second.end()) v = jt->second;
      }
      rec.votes[m.member_id] = v;
    }
    rec.result = vote(rec.votes, spec);
    out.push_back(std::move(rec));
  }
  return out;
}

EnsembleEvaluation evaluate_ensemble(const EnsembleSpec& spec, const MemberPredictions& predictions,
                                     const std::map<std::string, int>& labels,
                                     const std::vector<std::string>* scope) {
  EnsembleEvaluation ev;
  ev.records = combine(spec, predictions, scope);
  std::vector<int> y_true;
  std::vector<int> y_pred;
  for (const auto& rec : ev.records) {
    auto it = labels.find(rec.participant_id);
    if (it == labels.end()) {
      throw Error(ErrorCode::kMissingLabels,
                  fmt::format("no label for participant '{}'", rec.participant_id));
    }
    if (rec.result.tie) ++ev.decided_by_tie;
    if (!rec.result.final) {
      ++ev.abstained;
      continue;
    }
    y_true.push_back(it->second);
    y_pred.push_back(*rec.result.final);
  }
  if (!y_true.empty()) ev.metrics = classify::compute_metrics(y_true, y_pred);
  return ev;
}

std::vector<MemberPredictionRow> read_prediction_file(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_file(path));
  auto bad = [&](const std::string& msg) {
    return Error(ErrorCode::kParseError, fmt::format("{}: {}", path.string(), msg));
  };
  if (rows.empty()) throw bad("missing header");
  const CsvRow expected = {"participant_id", "member_id", "vote", "score"};
  if (rows[0] != expected) throw bad("header must be participant_id,member_id,vote,score");
  std::vector<MemberPredictionRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw bad(fmt::format("line {}: expected 4 fields", i + 1));
    MemberPredictionRow row;
    row.participant_id = r[0];
    try {
      std::size_t pos = 0;
      row.member_id = std::stoi(r[1], &pos);
      if (pos != r[1].size()) throw std::invalid_argument("member_id");
      if (r[2] != "0" && r[2] != "1") throw std::invalid_argument("vote");
      row.vote = r[2] == "1" ? 1 : 0;
      row.score = std::stod(r[3], &pos);
      if (pos != r[3].size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw bad(fmt::format("line {}: malformed value", i + 1));
    }
    if (row.participant_id.empty()) throw bad(fmt::format("line {}: empty participant_id", i + 1));
    out.push_back(std::move(row));
  }
  return out;
}

void write_prediction_file(const std::filesystem::path& path,
                           std::span<const MemberPredictionRow> rows) {
  std::string text = "participant_id,member_id,vote,score\n";
  for (const auto& r : rows) {
    text += csv_line({r.participant_id, std::to_string(r.member_id), std::to_string(r.vote),
                      fmt::format("{:.17g}", r.score)});
  }
  write_file_atomic(path, text);
}

MemberPredictions read_prediction_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, fmt::format("prediction directory '{}' not found", dir.string()));
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  MemberPredictions out;
  for (const auto& f : files) {
    for (const auto& row : read_prediction_file(f)) {
      auto [it, inserted] = out[row.member_id].emplace(row.participant_id, row.vote);
      if (!inserted && it->second != row.vote) {
        throw Error(ErrorCode::kParseError,
                    fmt::format("conflicting votes for member {} / '{}'", row.member_id,
                                row.participant_id));
      }
    }
  }
  return out;
}

std::string format_voting_table(std::span<const VotingTableRow> rows) {
  auto cell = [](const std::optional<classify::Metrics>& m, bool f1) {
    return m ? fmt::format("{:.3f}", f1 ? m->f1 : m->accuracy) : std::string("-");
  };
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>21}  {:>15}\n", "Model", w, "Accuracy (Dev / Test)",
                                "F1 (Dev / Test)");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>21}  {:>15}\n", r.label, w,
                       cell(r.dev, false) + " / " + cell(r.test, false),
                       cell(r.dev, true) + " / " + cell(r.test, true));
  }
  return out;
}

std::string records_to_json(const std::vector<PredictionRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : records) {
    nlohmann::json votes = nlohmann::json::object();
    for (const auto& [id, v] : rec.votes) {
      votes[std::to_string(id)] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    }
    arr.push_back({{"participant_id", rec.participant_id},
                   {"votes", votes},
                   {"w_pos", format_weight(rec.result.w_pos)},
                   {"w_neg", format_weight(rec.result.w_neg)},
                   {"final", rec.result.final ? nlohmann::json(*rec.result.final) : nlohmann::json(nullptr)},
                   {"decided_by_tie_rule", rec.result.tie}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace swpipe::ensemble
