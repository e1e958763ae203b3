#pragma once

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swpipe/classify/metrics.h"
#include "swpipe/classify/model.h"
#include "swpipe/corpus.h"

namespace swpipe::ensemble {

// Exact vote weights: ties and weight scaling must not depend on rounding.
using Weight = boost::multiprecision::cpp_rational;

// Parses "2", "3/2" or "0.25" into an exact positive rational.
// Throws InvalidParams.
Weight parse_weight(std::string_view text);
std::string format_weight(const Weight& w);

// Feature sources behind the 16 indexed (model, task) members.
enum class FeatureSource { kHubert, kWav2Vec2, kWhisper, kBert, kRoberta, kDeepSeek };

std::string_view display_name(FeatureSource source);  // "HuBERT", ..., "DeepSeek-R1"
// External asset identifier used by adapters and caches, e.g. "hubert-large".
std::string_view asset_id(FeatureSource source);
// Accepts display names (case-insensitive) or asset ids.
std::optional<FeatureSource> parse_source(std::string_view token);
bool is_acoustic(FeatureSource source);
bool is_text(FeatureSource source);

struct ModelTableRow {
  int index = 0;  // 1..16
  FeatureSource source = FeatureSource::kHubert;
  corpus::TaskKind task = corpus::TaskKind::kER;
  classify::ModelKind classifier = classify::ModelKind::kMlp;
};

// Rows 1-15: {HuBERT, Wav2Vec2, Whisper, BERT, RoBERTa} x {ER, PR, ED} with
// MLP classifiers; row 16: DeepSeek-R1 indicators on ER with a random forest.
const std::array<ModelTableRow, 16>& model_table();
const ModelTableRow& model_table_row(int index);  // throws UnknownMember
std::optional<int> member_index(FeatureSource source, corpus::TaskKind task);

enum class TieBreak { kPositive, kNegative, kAbstain };
std::string_view to_string(TieBreak t);
std::optional<TieBreak> parse_tie_break(std::string_view token);

struct MemberSpec {
  int member_id = 0;
  FeatureSource source = FeatureSource::kHubert;
  classify::ModelKind classifier = classify::ModelKind::kMlp;
  corpus::TaskKind task = corpus::TaskKind::kER;
  Weight weight = 1;

  bool operator==(const MemberSpec&) const = default;
};

struct EnsembleSpec {
  std::string name;
  std::vector<MemberSpec> members;
  TieBreak tie_break = TieBreak::kPositive;

  // >= 1 member, unique ids, positive weights. Throws InvalidParams.
  void validate() const;
  const MemberSpec* find(int member_id) const;
  // "(1, 2, 5, 6, 9, 13, 16)"
  std::string member_tuple() const;
};

// Preset combinations of indexed members:
//   "audio-only" (1, 2, 5, 6, 8, 9)
//   "combo-A"    (1, 2, 5, 6, 8, 13, 16)
//   "combo-B"    (1, 2, 5, 6, 9, 13, 16)
// Member 16 (DeepSeek-R1 / ER) gets `indicator_weight`, the rest weight 1.
// Throws UnknownCombination.
EnsembleSpec preset_combination(std::string_view name, const Weight& indicator_weight = 2);
std::vector<std::string> preset_names();

// Custom spec document:
//   {"name": "...", "tie_break": "positive",
//    "members": [{"model": "HuBERT", "task": "ER", "weight": "3/2"}, ...]}
// Members resolve to indexed rows through (model, task). Throws ConfigInvalid.
EnsembleSpec spec_from_json(std::string_view text);
std::string spec_to_json(const EnsembleSpec& spec);

// member_id -> vote; nullopt (or a missing entry) means the member is absent.
using Votes = std::map<int, std::optional<int>>;

struct VoteResult {
  std::optional<int> final;  // nullopt only under TieBreak::kAbstain
  Weight w_pos = 0;
  Weight w_neg = 0;
  bool tie = false;  // decided by the tie rule
};

// w_pos / w_neg sum the weights of 1 / 0 votes; the larger side wins, ties go
// to spec.tie_break. Throws UnknownMember, InvalidParams (vote not 0/1).
VoteResult vote(const Votes& votes, const EnsembleSpec& spec);

struct PredictionRecord {
  std::string participant_id;
  Votes votes;
  VoteResult result;
};

// member_id -> participant_id -> vote
using MemberPredictions = std::map<int, std::map<std::string, int>>;

// Votes every participant seen in the predictions of any spec member (or the
// given scope). Predictions from members outside the spec are ignored.
std::vector<PredictionRecord> combine(const EnsembleSpec& spec, const MemberPredictions& predictions,
                                      const std::vector<std::string>* scope = nullptr);

struct EnsembleEvaluation {
  classify::Metrics metrics;
  std::vector<PredictionRecord> records;
  std::size_t abstained = 0;  // excluded from metrics
  std::size_t decided_by_tie = 0;
};

// combine() followed by compute_metrics over non-abstained participants.
// Throws MissingLabels when an in-scope participant has no label.
EnsembleEvaluation evaluate_ensemble(const EnsembleSpec& spec, const MemberPredictions& predictions,
                                     const std::map<std::string, int>& labels,
                                     const std::vector<std::string>* scope = nullptr);

// Member prediction files: CSV with header participant_id,member_id,vote,score.
struct MemberPredictionRow {
  std::string participant_id;
  int member_id = 0;
  int vote = 0;
  double score = 0.0;
};
std::vector<MemberPredictionRow> read_prediction_file(const std::filesystem::path& path);
void write_prediction_file(const std::filesystem::path& path,
                           std::span<const MemberPredictionRow> rows);
// Reads every *.csv in the directory.
MemberPredictions read_prediction_dir(const std::filesystem::path& dir);

struct VotingTableRow {
  std::string label;
  std::optional<classify::Metrics> dev;
  std::optional<classify::Metrics> test;
};
// Columns: Model | Accuracy (Dev / Test) | F1 (Dev / Test); "-" where absent.
std::string format_voting_table(std::span<const VotingTableRow> rows);

std::string records_to_json(const std::vector<PredictionRecord>& records);

}  // namespace swpipe::ensemble
