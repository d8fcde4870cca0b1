#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ramsel::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number of each data row in the source (header is line 1).
  std::vector<std::size_t> lines;

  /// Column index by name; throws SchemaError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

/// RFC 4180 subset: comma separator, double-quoted fields with "" escapes,
/// LF or CRLF line endings, optional UTF-8 BOM. Blank lines are skipped.
Table parse(std::istream& in);
Table read(const std::filesystem::path& path);

void write_row(std::ostream& out, std::span<const std::string> fields);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

/// Parses a whole field (surrounding blanks ignored) as a double; returns
/// false on anything else.
bool parse_double(std::string_view s, double& out);

std::string trim(std::string_view s);

}  // namespace ramsel::csv
