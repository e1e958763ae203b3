#include "swpipe/classify/feature_io.h"

#include <cmath>
#include <fmt/format.h>
#include <set>

#include "swpipe/error.h"
#include "swpipe/io.h"

namespace swpipe::classify {
namespace {

Error parse_error(const std::string& msg) { return Error(ErrorCode::kParseError, msg); }

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw parse_error(fmt::format("line {}: '{}' is not a finite number", line, s));
}

}  // namespace

FeatureTable parse_feature_table(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "participant_id") {
    throw parse_error("feature table header must start with participant_id");
  }
  const std::size_t cols = rows[0].size() - 1;
  if (cols == 0) throw parse_error("feature table has no feature columns");
  FeatureTable t;
  t.x = FeatureMatrix(0, cols);
  std::set<std::string> seen;
  std::vector<double> values(cols);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != cols + 1) throw parse_error(fmt::format("line {}: expected {} fields", i + 1, cols + 1));
    if (r[0].empty() || !seen.insert(r[0]).second) {
      throw parse_error(fmt::format("line {}: empty or duplicate participant_id", i + 1));
    }
    for (std::size_t c = 0; c < cols; ++c) values[c] = parse_double(r[c + 1], i + 1);
    t.participant_ids.push_back(r[0]);
    t.x.append_row(values);
  }
  return t;
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  try {
    return parse_feature_table(read_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParseError) throw;
    throw parse_error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_feature_table(const FeatureTable& t) {
  CsvRow header = {"participant_id"};
  for (std::size_t c = 0; c < t.x.cols(); ++c) header.push_back(fmt::format("f{}", c));
  std::string out = csv_line(header);
  for (std::size_t r = 0; r < t.x.rows(); ++r) {
    CsvRow row = {t.participant_ids[r]};
    for (double v : t.x.row(r)) row.push_back(fmt::format("{}", v));
    out += csv_line(row);
  }
  return out;
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
  write_file_atomic(path, format_feature_table(table));
}

std::map<std::string, int> read_labels(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw parse_error(fmt::format("{}: empty labels file", path.string()));
  std::size_t id_col = rows[0].size();
  std::size_t label_col = rows[0].size();
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    if (rows[0][c] == "participant_id") id_col = c;
    if (rows[0][c] == "label") label_col = c;
  }
  if (id_col == rows[0].size() || label_col == rows[0].size()) {
    throw parse_error(fmt::format("{}: needs participant_id and label columns", path.string()));
  }
  std::map<std::string, int> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != rows[0].size()) {
      throw parse_error(fmt::format("{}: line {}: wrong field count", path.string(), i + 1));
    }
    if (r[label_col].empty()) continue;
    if (r[label_col] != "0" && r[label_col] != "1") {
      throw parse_error(fmt::format("{}: line {}: label must be 0 or 1", path.string(), i + 1));
    }
    const int label = r[label_col] == "1" ? 1 : 0;
    auto [it, inserted] = out.emplace(r[id_col], label);
    if (!inserted && it->second != label) {
      throw parse_error(fmt::format("{}: conflicting labels for '{}'", path.string(), r[id_col]));
    }
  }
  return out;
}

}  // namespace swpipe::classify
