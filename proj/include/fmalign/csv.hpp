#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmalign/types.hpp"

namespace fmalign::csv {

/// Raw rows of a CSV file with the optional header split off.
struct Table {
  std::optional<std::vector<std::string>> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number in the file for each entry of `rows`.
  std::vector<std::size_t> line_numbers;
};

/// Reads a comma-separated file. The first row is treated as a header when any of
/// its cells does not parse as a number. Blank lines are skipped.
Table read_table(const std::filesystem::path& path);

std::vector<std::string> split_line(std::string_view line);

/// Parses a real number; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Shortest text that round-trips to the same double.
std::string format_double(double value);

void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& header = {});
void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  const std::vector<std::string>& header = {});

/// Reads a purely numeric matrix (header allowed and ignored).
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace fmalign::csv
