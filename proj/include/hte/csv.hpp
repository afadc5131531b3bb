#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hte {

// RFC-4180 table with a required header row. Fields are kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws DesignError when the column is absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

// Empty fields and NA are missing; anything else must parse completely as a
// double (17 significant digits round-trip exactly).
std::optional<double> parse_number(std::string_view field);
bool is_missing(std::string_view field);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that round-trips.
std::string format_number(double x);

}  // namespace hte
