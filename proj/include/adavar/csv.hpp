#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace adavar {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

/// One CSV field, quoted per RFC 4180 when it contains a comma, quote or
/// line break.
std::string csv_field(std::string_view s);

/// Writes a row of already-formatted fields followed by "\n".
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(std::string_view name) const;
};

/// Parses RFC-4180 text (quoted fields, doubled quotes, embedded newlines).
/// The first record is the header.
CsvTable parse_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

/// Writes `content` to `path` through a temporary file and a rename, so a
/// reader never sees a partially written file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace adavar
