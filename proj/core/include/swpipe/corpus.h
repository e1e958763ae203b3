#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace swpipe::corpus {

// The three speech tasks: emotional regulation, passage reading, expression
// description.
enum class TaskKind { kER, kPR, kED };

inline constexpr std::array<TaskKind, 3> kAllTasks = {TaskKind::kER, TaskKind::kPR,
                                                      TaskKind::kED};

std::string_view to_string(TaskKind task);
// Case-sensitive: only "ER", "PR", "ED".
std::optional<TaskKind> parse_task(std::string_view token);

enum class Split { kTrain, kDev, kTest };
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kDev, Split::kTest};

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view token);

enum class Gender { kMale, kFemale };

struct ParticipantRecord {
  std::string participant_id;
  std::map<TaskKind, std::filesystem::path> audio;
  std::optional<int> label;  // 1 = at risk, 0 = no risk
  Split split = Split::kTrain;
  std::optional<double> age;
  std::optional<Gender> gender;

  bool operator==(const ParticipantRecord&) const = default;
};

struct LabelCounts {
  std::size_t at_risk = 0;
  std::size_t no_risk = 0;
  std::size_t unlabeled = 0;

  std::size_t total() const { return at_risk + no_risk + unlabeled; }
  bool operator==(const LabelCounts&) const = default;
};

// Immutable after construction. Iteration order is manifest order.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<ParticipantRecord> records);

  const std::vector<ParticipantRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const ParticipantRecord* find(std::string_view participant_id) const;

  // Recomputed on every call.
  std::map<Split, LabelCounts> class_balance() const;

  bool operator==(const Corpus&) const = default;

 private:
  std::vector<ParticipantRecord> records_;
};

// Reads a comma-separated manifest with header
//   participant_id,task,audio_path,label,split[,age][,gender]
// (column order free). Relative audio paths resolve against the manifest's
// directory. Throws MalformedManifest or MissingAudio.
Corpus load_manifest(const std::filesystem::path& path);
Corpus parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

// One row per (participant, task) in record order; audio paths are written
// as stored (absolute after load_manifest).
std::string to_manifest_text(const Corpus& corpus);
void write_manifest(const Corpus& corpus, const std::filesystem::path& path);

struct GroupStats {
  std::size_t count = 0;
  std::size_t male = 0;
  std::size_t female = 0;
  std::size_t with_age = 0;
  std::optional<double> mean_age;
};

struct CorpusSummary {
  std::map<Split, LabelCounts> counts;
  // Keyed by label: 1, 0, and -1 for unlabeled.
  std::map<int, GroupStats> by_label;
  bool has_age = false;
  bool has_gender = false;
};

CorpusSummary summarize(const Corpus& corpus);

// Human-readable table: per-split label counts, then gender ratio (M:F) and
// average age per risk group; rows for absent fields are omitted.
std::string format_summary(const CorpusSummary& summary);

}  // namespace swpipe::corpus
