#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "swpipe/classify/feature_matrix.h"

namespace swpipe::classify {

// CSV with header participant_id,f0,f1,...; one row per participant.
struct FeatureTable {
  std::vector<std::string> participant_ids;
  FeatureMatrix x;
};

// Throws ParseError (bad header, ragged rows, non-numeric or non-finite
// values, duplicate ids).
FeatureTable parse_feature_table(std::string_view text);
FeatureTable read_feature_table(const std::filesystem::path& path);
std::string format_feature_table(const FeatureTable& table);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);

// Any CSV with participant_id and label columns (a corpus manifest works).
// Blank labels are skipped; repeated ids must agree. Throws ParseError.
std::map<std::string, int> read_labels(const std::filesystem::path& path);

}  // namespace swpipe::classify
