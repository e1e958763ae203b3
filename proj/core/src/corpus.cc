#include "swpipe/corpus.h"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <set>
#include <unordered_map>

#include "swpipe/error.h"
#include "swpipe/io.h"

namespace swpipe::corpus {

namespace fs = std::filesystem;

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kER: return "ER";
    case TaskKind::kPR: return "PR";
    case TaskKind::kED: return "ED";
  }
  return "?";
}

std::optional<TaskKind> parse_task(std::string_view token) {
  if (token == "ER") return TaskKind::kER;
  if (token == "PR") return TaskKind::kPR;
  if (token == "ED") return TaskKind::kED;
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view token) {
  if (token == "train") return Split::kTrain;
  if (token == "dev") return Split::kDev;
  if (token == "test") return Split::kTest;
  return std::nullopt;
}

Corpus::Corpus(std::vector<ParticipantRecord> records) : records_(std::move(records)) {}

const ParticipantRecord* Corpus::find(std::string_view participant_id) const {
  for (const auto& r : records_) {
    if (r.participant_id == participant_id) return &r;
  }
  return nullptr;
}

std::map<Split, LabelCounts> Corpus::class_balance() const {
  std::map<Split, LabelCounts> counts;
  for (Split s : kAllSplits) counts[s] = {};
  for (const auto& r : records_) {
    auto& c = counts[r.split];
    if (!r.label) {
      ++c.unlabeled;
    } else if (*r.label == 1) {
      ++c.at_risk;
    } else {
      ++c.no_risk;
    }
  }
  return counts;
}

namespace {

constexpr std::string_view kRequiredColumns[] = {"participant_id", "task", "audio_path", "label",
                                                 "split"};
constexpr std::string_view kOptionalColumns[] = {"age", "gender"};

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kMalformedManifest, fmt::format("line {}: {}", line, what));
}

std::optional<int> parse_label(std::string_view cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  malformed(line, fmt::format("label must be 0, 1, or empty, got '{}'", cell));
}

std::optional<double> parse_age(std::string_view cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  double value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !(value >= 0)) {
    malformed(line, fmt::format("invalid age '{}'", cell));
  }
  return value;
}

std::optional<Gender> parse_gender(std::string_view cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  if (cell == "M") return Gender::kMale;
  if (cell == "F") return Gender::kFemale;
  malformed(line, fmt::format("gender must be M, F, or empty, got '{}'", cell));
}

std::string format_age(double age) {
  // Shortest representation that round-trips.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), age);
  return std::string(buf, ptr);
}

}  // namespace

Corpus parse_manifest(std::string_view text, const fs::path& base_dir) {
  const auto rows = parse_csv(text);
  if (rows.empty()) malformed(1, "missing header row");

  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const std::string& name = rows[0][i];
    const bool known = std::find(std::begin(kRequiredColumns), std::end(kRequiredColumns), name) !=
                           std::end(kRequiredColumns) ||
                       std::find(std::begin(kOptionalColumns), std::end(kOptionalColumns), name) !=
                           std::end(kOptionalColumns);
    if (!known) malformed(1, fmt::format("unknown column '{}'", name));
    if (!column.emplace(name, i).second) malformed(1, fmt::format("duplicate column '{}'", name));
  }
  for (auto name : kRequiredColumns) {
    if (!column.contains(std::string(name))) malformed(1, fmt::format("missing column '{}'", name));
  }

  auto cell = [&](const CsvRow& row, std::string_view name) -> std::string_view {
    const auto it = column.find(std::string(name));
    if (it == column.end() || it->second >= row.size()) return {};
    return row[it->second];
  };

  std::vector<ParticipantRecord> records;
  std::unordered_map<std::string, std::size_t> index_of;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != rows[0].size()) {
      malformed(line, fmt::format("expected {} fields, got {}", rows[0].size(), row.size()));
    }

    const std::string id(cell(row, "participant_id"));
    if (id.empty()) malformed(line, "empty participant_id");
    const auto task = parse_task(cell(row, "task"));
    if (!task) malformed(line, fmt::format("unknown task '{}'", cell(row, "task")));
    const auto split = parse_split(cell(row, "split"));
    if (!split) malformed(line, fmt::format("unknown split '{}'", cell(row, "split")));
    const auto label = parse_label(cell(row, "label"), line);
    const auto age = parse_age(cell(row, "age"), line);
    const auto gender = parse_gender(cell(row, "gender"), line);

    const std::string_view audio_cell = cell(row, "audio_path");
    if (audio_cell.empty()) malformed(line, "empty audio_path");
    fs::path audio(audio_cell);
    if (audio.is_relative()) audio = base_dir / audio;
    audio = audio.lexically_normal();
    {
      std::ifstream probe(audio, std::ios::binary);
      if (!fs::is_regular_file(audio) || !probe) {
        throw Error(ErrorCode::kMissingAudio,
                    fmt::format("line {}: audio '{}' does not resolve to a readable file", line,
                                audio.string()));
      }
    }

    auto [it, inserted] = index_of.emplace(id, records.size());
    if (inserted) {
      ParticipantRecord rec;
      rec.participant_id = id;
      rec.label = label;
      rec.split = *split;
      rec.age = age;
      rec.gender = gender;
      records.push_back(std::move(rec));
    }
    auto& rec = records[it->second];
    if (rec.label != label || rec.split != *split || rec.age != age || rec.gender != gender) {
      malformed(line, fmt::format("participant '{}' has inconsistent label/split/age/gender", id));
    }
    if (!rec.audio.emplace(*task, audio).second) {
      malformed(line, fmt::format("duplicate ({}, {}) row", id, to_string(*task)));
    }
  }

  for (const auto& rec : records) {
    if (rec.split == Split::kTrain && !rec.label) {
      throw Error(ErrorCode::kMalformedManifest,
                  fmt::format("training participant '{}' has no label", rec.participant_id));
    }
  }
  return Corpus(std::move(records));
}

Corpus load_manifest(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kMalformedManifest, "cannot read manifest " + path.string());
  }
  return parse_manifest(text, path.parent_path());
}

std::string to_manifest_text(const Corpus& corpus) {
  bool has_age = false;
  bool has_gender = false;
  for (const auto& r : corpus.records()) {
    has_age |= r.age.has_value();
    has_gender |= r.gender.has_value();
  }
  CsvRow header = {"participant_id", "task", "audio_path", "label", "split"};
  if (has_age) header.push_back("age");
  if (has_gender) header.push_back("gender");

  std::string out = csv_line(header);
  for (const auto& r : corpus.records()) {
    for (const auto& [task, audio] : r.audio) {
      CsvRow row = {r.participant_id, std::string(to_string(task)), audio.string(),
                    r.label ? std::to_string(*r.label) : "", std::string(to_string(r.split))};
      if (has_age) row.push_back(r.age ? format_age(*r.age) : "");
      if (has_gender) {
        row.push_back(!r.gender ? "" : (*r.gender == Gender::kMale ? "M" : "F"));
      }
      out += csv_line(row);
    }
  }
  return out;
}

void write_manifest(const Corpus& corpus, const fs::path& path) {
  write_file_atomic(path, to_manifest_text(corpus));
}

CorpusSummary summarize(const Corpus& corpus) {
  CorpusSummary summary;
  summary.counts = corpus.class_balance();
  std::map<int, double> age_sum;
  for (const auto& r : corpus.records()) {
    const int key = r.label.value_or(-1);
    auto& g = summary.by_label[key];
    ++g.count;
    if (r.gender) {
      summary.has_gender = true;
      ++(*r.gender == Gender::kMale ? g.male : g.female);
    }
    if (r.age) {
      summary.has_age = true;
      ++g.with_age;
      age_sum[key] += *r.age;
    }
  }
  for (auto& [key, g] : summary.by_label) {
    if (g.with_age > 0) g.mean_age = age_sum[key] / static_cast<double>(g.with_age);
  }
  return summary;
}

std::string format_summary(const CorpusSummary& summary) {
  std::string out = fmt::format("{:<8}{:>10}{:>10}{:>11}{:>8}\n", "split", "at_risk", "no_risk",
                                "unlabeled", "total");
  for (const auto& [split, c] : summary.counts) {
    out += fmt::format("{:<8}{:>10}{:>10}{:>11}{:>8}\n", to_string(split), c.at_risk, c.no_risk,
                       c.unlabeled, c.total());
  }
  if (!summary.has_age && !summary.has_gender) return out;

  out += "\n";
  out += fmt::format("{:<14}", "suicide_risk");
  if (summary.has_gender) out += fmt::format("{:>14}", "gender(M:F)");
  if (summary.has_age) out += fmt::format("{:>13}", "average_age");
  out += "\n";
  for (const int key : {1, 0, -1}) {
    const auto it = summary.by_label.find(key);
    if (it == summary.by_label.end()) continue;
    const auto& g = it->second;
    out += fmt::format("{:<14}", key == 1 ? "yes" : key == 0 ? "no" : "unlabeled");
    if (summary.has_gender) out += fmt::format("{:>14}", fmt::format("{}:{}", g.male, g.female));
    if (summary.has_age) {
      out += g.mean_age ? fmt::format("{:>13.2f}", *g.mean_age) : fmt::format("{:>13}", "-");
    }
    out += "\n";
  }
  return out;
}

}  // namespace swpipe::corpus
