#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geoload::csv {

/// One parsed data row plus its 1-based line number in the source file.
struct Row {
  int line = 0;
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

/// Reads a comma-separated file with a header line. Blank lines and lines
/// starting with `#` are skipped.
/// Throws a parse error if any row has a different field count than the
/// header, or an io error if the file cannot be opened.
Table read(const std::filesystem::path& path);

/// Throws a parse error unless the header equals `expected`.
void require_header(const Table& table, const std::vector<std::string>& expected,
                    const std::filesystem::path& path);

double to_double(const std::string& text, const Row& row, std::string_view column,
                 const std::filesystem::path& path);
long long to_int(const std::string& text, const Row& row, std::string_view column,
                 const std::filesystem::path& path);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace geoload::csv
