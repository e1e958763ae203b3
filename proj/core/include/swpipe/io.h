#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace swpipe {

using CsvRow = std::vector<std::string>;

// RFC 4180 style: comma separated, optional double-quoted fields with ""
// escapes, LF or CRLF line endings. Blank lines are skipped. A leading UTF-8
// BOM is ignored.
std::vector<CsvRow> parse_csv(std::string_view text);

// Quotes a field only when it contains a delimiter, quote, or newline.
std::string csv_field(std::string_view field);
std::string csv_line(const CsvRow& row);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs, then renames over `path`. Readers
// observe either the previous content or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace swpipe
