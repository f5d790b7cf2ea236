#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trustmon::data {

/// A header plus string cells; comma separated, RFC 4180 quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws MissingColumn when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Parses a whole cell as a finite double (surrounding blanks allowed).
std::optional<double> parse_number(std::string_view cell);

/// Shortest text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace trustmon::data
